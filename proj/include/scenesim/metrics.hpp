#pragma once

#include <array>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenesim/kinematics.hpp"
#include "scenesim/map_topology.hpp"
#include "scenesim/scene_controller.hpp"

namespace scenesim {

struct EpisodeResult {
  long ticks{0};
  std::vector<bool> vehicle_collision;
  std::vector<bool> layout_collision;
  bool timed_out{false};
  bool completed{false};
  bool aborted{false};  // planner failure or off-route abort
};

struct MetricsReport {
  double rc{0.0};
  double vcr{0.0};
  double lcr{0.0};
  double interaction_rate{0.0};
  std::array<long, 5> speed_alteration_histogram{};  // index = alteration count 0..4
  std::size_t episodes{0};
};

struct InteractionRecord {
  bool detect{false};
  bool intersect{false};
  bool interaction{false};
};

// Six per-step planned displacements (t .. t+5).
struct PlannedTrajectory {
  std::array<Vec2, 6> offsets{};
};

inline constexpr double kInteractionHorizon = 2.0;           // s, surround radius = horizon * v_max
inline constexpr double kSurroundHalfAngle = 120.0 * M_PI / 180.0;
inline constexpr double kForwardHalfAngle = 15.0 * M_PI / 180.0;
inline constexpr double kRouteLookahead = 50.0;              // m

bool obb_collision(const VehicleState& a, const VehicleState& b);
bool layout_collision(const VehicleState& ego, const MapTopology& map);

// Mean per-episode flag fractions; RC counts episodes with no vehicle
// collision, no timeout and no abort (layout collisions do not affect RC).
// Throws Error(kEmptyInput) on an empty list.
MetricsReport compute_rates(const std::vector<EpisodeResult>& episodes);

// `ego_progress` is the ego's arclength along its own route.
InteractionRecord interaction_indicator(const VehicleState& ego, const Route& ego_route,
                                        double ego_progress, const AgentRecord& agent,
                                        double v_max);

int ego_speed_alteration(const PlannedTrajectory& traj);

// One entry per scene: every record emitted for that scene across all ticks.
double interaction_rate(const std::vector<std::vector<InteractionRecord>>& scenes);

nlohmann::json to_json(const MetricsReport& r);
MetricsReport metrics_report_from_json(const nlohmann::json& j);
nlohmann::json to_json(const EpisodeResult& e);
EpisodeResult episode_result_from_json(const nlohmann::json& j);

}  // namespace scenesim
