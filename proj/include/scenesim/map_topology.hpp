#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenesim/geometry.hpp"

namespace scenesim {

// Fixed map constants. Kept together so every consumer sees one value.
namespace map_constants {
inline constexpr double kDefaultLaneWidth = 3.5;        // m
inline constexpr double kLaneChangeCostFactor = 1.5;    // x lane width
inline constexpr double kLaneChangeBlendLength = 15.0;  // m, waypoint geometry only
inline constexpr double kHeadingGate = M_PI_2;          // rad
inline constexpr double kMaxLateralOffset = 10.0;       // m
inline constexpr double kTurnThreshold = 15.0 * M_PI / 180.0;
inline constexpr double kWaypointSpacing = 1.0;         // m
}  // namespace map_constants

struct LanePoint {
  Vec2 position;
  double heading{0.0};
  double s{0.0};
};

struct Lane {
  std::string id;
  std::vector<LanePoint> points;
  double speed_limit{0.0};
  double width{map_constants::kDefaultLaneWidth};
  std::vector<std::string> successors;
  std::optional<std::string> left_neighbor;
  std::optional<std::string> right_neighbor;
  bool is_junction{false};
  Polyline centerline;

  double length() const { return centerline.length(); }
};

struct Junction {
  std::string id;
  std::vector<std::string> lanes;
  Vec2 centroid;
};

enum class RoadOption { kFollow, kTurnLeft, kTurnRight, kLaneChangeLeft, kLaneChangeRight };

const char* to_string(RoadOption option);

// Position on the lane graph.
struct LaneCoord {
  std::string lane;
  double s{0.0};
};

struct RouteSegment {
  std::string lane;
  double lane_s_begin{0.0};
  double lane_s_end{0.0};
  double route_s_begin{0.0};  // arclength of this segment's start along the route
  RoadOption option{RoadOption::kFollow};
  double speed_limit{0.0};
  bool is_junction{false};
};

struct Route {
  std::vector<std::string> lane_sequence;
  std::vector<LanePoint> waypoints;
  std::vector<RoadOption> road_option_sequence;  // one per lane_sequence entry
  std::vector<RouteSegment> segments;
  Polyline path;  // through the waypoints
  double cost{0.0};

  double length() const { return path.length(); }
  Vec2 goal() const { return waypoints.empty() ? Vec2{} : waypoints.back().position; }
  // Segment covering route arclength s.
  const RouteSegment& segment_at(double s) const;
  std::vector<Vec2> positions() const;
};

struct Localization {
  std::string lane;
  double s{0.0};
  double lateral_offset{0.0};  // positive to the lane's left
};

class MapTopology {
 public:
  MapTopology() = default;

  // Builds, validates, and indexes a lane graph. Throws Error(kValidation).
  static MapTopology build(std::vector<Lane> lanes,
                           std::vector<std::vector<Vec2>> drivable_area);

  const std::map<std::string, Lane>& lanes() const { return lanes_; }
  const Lane& lane(const std::string& id) const;
  bool has_lane(const std::string& id) const { return lanes_.count(id) > 0; }
  const std::vector<std::vector<Vec2>>& drivable_area() const { return drivable_area_; }
  const std::vector<Junction>& junctions() const { return junctions_; }
  const std::vector<std::string>& predecessors(const std::string& id) const;
  // Junction containing the lane, if any.
  const Junction* junction_of(const std::string& lane_id) const;

  // Axis-aligned bounds of all lane and drivable geometry.
  Vec2 bounds_min() const { return bounds_min_; }
  Vec2 bounds_max() const { return bounds_max_; }

  bool empty() const { return lanes_.empty(); }

 private:
  std::map<std::string, Lane> lanes_;
  std::map<std::string, std::vector<std::string>> predecessors_;
  std::vector<std::vector<Vec2>> drivable_area_;
  std::vector<Junction> junctions_;
  std::map<std::string, std::size_t> junction_index_;
  Vec2 bounds_min_;
  Vec2 bounds_max_;
};

MapTopology parse_map(const nlohmann::json& doc);
MapTopology load_map(const std::filesystem::path& path);
nlohmann::json map_to_json(const MapTopology& map);

Localization localize(Vec2 point, double heading, const MapTopology& map);

Route plan_route(const LaneCoord& start, const LaneCoord& goal,
                 const MapTopology& map);

// Builds a route from an explicit lane chain starting at `start`; every
// consecutive pair must be linked by a successor edge. Used by agent routing.
Route route_from_lanes(const std::vector<std::string>& lanes, double start_s,
                       const MapTopology& map);

std::vector<LaneCoord> sample_spawn_candidates(const MapTopology& map,
                                               double spacing);

RoadOption turn_option(const Lane& lane);

}  // namespace scenesim
