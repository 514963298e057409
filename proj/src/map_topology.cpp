#include "scenesim/map_topology.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <numeric>
#include <queue>
#include <set>

#include "scenesim/errors.hpp"

namespace scenesim {

using namespace map_constants;

const char* to_string(RoadOption option) {
  switch (option) {
    case RoadOption::kFollow: return "Follow";
    case RoadOption::kTurnLeft: return "TurnLeft";
    case RoadOption::kTurnRight: return "TurnRight";
    case RoadOption::kLaneChangeLeft: return "LaneChangeLeft";
    case RoadOption::kLaneChangeRight: return "LaneChangeRight";
  }
  return "Follow";
}

const RouteSegment& Route::segment_at(double s) const {
  std::size_t idx = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    if (segments[i].route_s_begin <= s + 1e-9) idx = i;
  }
  return segments.at(idx);
}

std::vector<Vec2> Route::positions() const {
  std::vector<Vec2> out;
  out.reserve(waypoints.size());
  for (const auto& wp : waypoints) out.push_back(wp.position);
  return out;
}

namespace {

[[noreturn]] void fail_validation(const std::string& msg) {
  throw Error(ErrorCode::kValidation, msg);
}

bool polygon_self_intersects(const std::vector<Vec2>& poly) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool adjacent = j == i + 1 || (i == 0 && j == n - 1);
      if (adjacent) continue;
      if (segments_intersect(poly[i], poly[(i + 1) % n], poly[j], poly[(j + 1) % n])) {
        return true;
      }
    }
  }
  return false;
}

std::vector<LanePoint> make_lane_points(const std::string& id,
                                        const std::vector<Vec2>& pts) {
  if (pts.size() < 2) fail_validation("lane " + id + " has fewer than 2 points");
  std::vector<LanePoint> out(pts.size());
  double s = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (i > 0) {
      const double d = distance(pts[i - 1], pts[i]);
      if (!(d > 0.0)) {
        fail_validation("lane " + id + " has non-increasing arclength at point " +
                        std::to_string(i));
      }
      s += d;
    }
    out[i].position = pts[i];
    out[i].s = s;
  }
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    const Vec2 d = pts[i + 1] - pts[i];
    out[i].heading = std::atan2(d.y, d.x);
  }
  out.back().heading = out[out.size() - 2].heading;
  return out;
}

struct UnionFind {
  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  std::size_t find(std::size_t i) {
    while (parent[i] != i) i = parent[i] = parent[parent[i]];
    return i;
  }
  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent[std::max(a, b)] = std::min(a, b);
  }
  std::vector<std::size_t> parent;
};

}  // namespace

RoadOption turn_option(const Lane& lane) {
  const double dh = wrap_angle(lane.points.back().heading - lane.points.front().heading);
  if (dh > kTurnThreshold) return RoadOption::kTurnLeft;
  if (dh < -kTurnThreshold) return RoadOption::kTurnRight;
  return RoadOption::kFollow;
}

MapTopology MapTopology::build(std::vector<Lane> lanes,
                               std::vector<std::vector<Vec2>> drivable_area) {
  MapTopology map;
  for (auto& lane : lanes) {
    if (lane.id.empty()) fail_validation("lane with empty id");
    if (map.lanes_.count(lane.id)) fail_validation("duplicate lane id " + lane.id);
    if (lane.centerline.empty()) {
      std::vector<Vec2> pts;
      for (const auto& p : lane.points) pts.push_back(p.position);
      lane.centerline = Polyline(pts);
    }
    if (!(lane.length() > 0.0)) fail_validation("lane " + lane.id + " has zero length");
    map.lanes_.emplace(lane.id, std::move(lane));
  }
  for (const auto& [id, lane] : map.lanes_) {
    for (const auto& succ : lane.successors) {
      if (!map.lanes_.count(succ)) {
        fail_validation("lane " + id + " references unknown successor " + succ);
      }
      map.predecessors_[succ].push_back(id);
    }
    if (lane.left_neighbor) {
      auto it = map.lanes_.find(*lane.left_neighbor);
      if (it == map.lanes_.end()) {
        fail_validation("lane " + id + " references unknown left neighbor " +
                        *lane.left_neighbor);
      }
      if (it->second.right_neighbor != id) {
        fail_validation("neighbor link " + id + " -> " + *lane.left_neighbor +
                        " is not symmetric");
      }
    }
    if (lane.right_neighbor) {
      auto it = map.lanes_.find(*lane.right_neighbor);
      if (it == map.lanes_.end()) {
        fail_validation("lane " + id + " references unknown right neighbor " +
                        *lane.right_neighbor);
      }
      if (it->second.left_neighbor != id) {
        fail_validation("neighbor link " + id + " -> " + *lane.right_neighbor +
                        " is not symmetric");
      }
    }
  }
  for (std::size_t i = 0; i < drivable_area.size(); ++i) {
    if (drivable_area[i].size() < 3) {
      fail_validation("drivable polygon " + std::to_string(i) + " has fewer than 3 vertices");
    }
    if (polygon_self_intersects(drivable_area[i])) {
      fail_validation("drivable polygon " + std::to_string(i) + " self-intersects");
    }
  }
  map.drivable_area_ = std::move(drivable_area);

  // Junctions: connected groups of junction lanes sharing an approach lane,
  // an exit lane, a direct link, or crossing geometry.
  std::vector<std::string> jl;
  for (const auto& [id, lane] : map.lanes_) {
    if (lane.is_junction) jl.push_back(id);
  }
  UnionFind uf(jl.size());
  for (std::size_t i = 0; i < jl.size(); ++i) {
    const Lane& a = map.lanes_.at(jl[i]);
    for (std::size_t j = i + 1; j < jl.size(); ++j) {
      const Lane& b = map.lanes_.at(jl[j]);
      const auto& pa = map.predecessors(a.id);
      const auto& pb = map.predecessors(b.id);
      bool linked = std::find(a.successors.begin(), a.successors.end(), b.id) != a.successors.end() ||
                    std::find(b.successors.begin(), b.successors.end(), a.id) != b.successors.end();
      for (const auto& p : pa) {
        linked = linked || std::find(pb.begin(), pb.end(), p) != pb.end();
      }
      for (const auto& s : a.successors) {
        linked = linked || std::find(b.successors.begin(), b.successors.end(), s) != b.successors.end();
      }
      linked = linked || polylines_intersect(a.centerline.points(), b.centerline.points());
      if (linked) uf.unite(i, j);
    }
  }
  std::map<std::size_t, std::vector<std::string>> groups;
  for (std::size_t i = 0; i < jl.size(); ++i) groups[uf.find(i)].push_back(jl[i]);
  for (auto& [root, members] : groups) {
    Junction j;
    j.id = "J" + std::to_string(map.junctions_.size());
    j.lanes = members;
    Vec2 sum;
    std::size_t count = 0;
    for (const auto& m : members) {
      for (const auto& p : map.lanes_.at(m).points) {
        sum = sum + p.position;
        ++count;
      }
    }
    j.centroid = sum * (1.0 / static_cast<double>(std::max<std::size_t>(count, 1)));
    for (const auto& m : members) map.junction_index_[m] = map.junctions_.size();
    map.junctions_.push_back(std::move(j));
  }

  double inf = std::numeric_limits<double>::infinity();
  Vec2 lo{inf, inf}, hi{-inf, -inf};
  auto extend = [&](Vec2 p) {
    lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
    hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
  };
  for (const auto& [id, lane] : map.lanes_) {
    for (const auto& p : lane.points) extend(p.position);
  }
  for (const auto& poly : map.drivable_area_) {
    for (const auto& p : poly) extend(p);
  }
  if (lo.x <= hi.x) {
    map.bounds_min_ = lo;
    map.bounds_max_ = hi;
  }
  return map;
}

const Lane& MapTopology::lane(const std::string& id) const {
  auto it = lanes_.find(id);
  if (it == lanes_.end()) throw Error(ErrorCode::kValidation, "unknown lane " + id);
  return it->second;
}

const std::vector<std::string>& MapTopology::predecessors(const std::string& id) const {
  static const std::vector<std::string> kNone;
  auto it = predecessors_.find(id);
  return it == predecessors_.end() ? kNone : it->second;
}

const Junction* MapTopology::junction_of(const std::string& lane_id) const {
  auto it = junction_index_.find(lane_id);
  return it == junction_index_.end() ? nullptr : &junctions_[it->second];
}

MapTopology parse_map(const nlohmann::json& doc) {
  try {
    std::vector<Lane> lanes;
    for (const auto& jl : doc.at("lanes")) {
      Lane lane;
      lane.id = jl.at("id").get<std::string>();
      std::vector<Vec2> pts;
      for (const auto& p : jl.at("points")) {
        pts.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      }
      lane.points = make_lane_points(lane.id, pts);
      lane.centerline = Polyline(pts);
      lane.speed_limit = jl.at("speed_limit").get<double>();
      if (!(lane.speed_limit > 0.0)) {
        fail_validation("lane " + lane.id + " has non-positive speed_limit");
      }
      lane.width = jl.value("width", kDefaultLaneWidth);
      if (jl.contains("successors")) {
        lane.successors = jl.at("successors").get<std::vector<std::string>>();
      }
      if (jl.contains("left_neighbor") && !jl.at("left_neighbor").is_null()) {
        lane.left_neighbor = jl.at("left_neighbor").get<std::string>();
      }
      if (jl.contains("right_neighbor") && !jl.at("right_neighbor").is_null()) {
        lane.right_neighbor = jl.at("right_neighbor").get<std::string>();
      }
      lane.is_junction = jl.value("is_junction", false);
      lanes.push_back(std::move(lane));
    }
    std::vector<std::vector<Vec2>> area;
    if (doc.contains("drivable_area")) {
      for (const auto& poly : doc.at("drivable_area")) {
        std::vector<Vec2> ring;
        for (const auto& p : poly) ring.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        area.push_back(std::move(ring));
      }
    }
    return MapTopology::build(std::move(lanes), std::move(area));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("map schema error: ") + e.what());
  }
}

MapTopology load_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open map file " + path.string());
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kParse,
                "malformed map file " + path.string() + ": " + e.what());
  }
  return parse_map(doc);
}

nlohmann::json map_to_json(const MapTopology& map) {
  nlohmann::json doc;
  doc["lanes"] = nlohmann::json::array();
  for (const auto& [id, lane] : map.lanes()) {
    nlohmann::json jl;
    jl["id"] = id;
    jl["points"] = nlohmann::json::array();
    for (const auto& p : lane.points) jl["points"].push_back({p.position.x, p.position.y});
    jl["speed_limit"] = lane.speed_limit;
    jl["width"] = lane.width;
    jl["successors"] = lane.successors;
    jl["left_neighbor"] = lane.left_neighbor ? nlohmann::json(*lane.left_neighbor) : nlohmann::json();
    jl["right_neighbor"] = lane.right_neighbor ? nlohmann::json(*lane.right_neighbor) : nlohmann::json();
    jl["is_junction"] = lane.is_junction;
    doc["lanes"].push_back(std::move(jl));
  }
  doc["drivable_area"] = nlohmann::json::array();
  for (const auto& poly : map.drivable_area()) {
    nlohmann::json ring = nlohmann::json::array();
    for (const auto& p : poly) ring.push_back({p.x, p.y});
    doc["drivable_area"].push_back(std::move(ring));
  }
  return doc;
}

Localization localize(Vec2 point, double heading, const MapTopology& map) {
  std::optional<Localization> best;
  double best_dist = std::numeric_limits<double>::infinity();
  for (const auto& [id, lane] : map.lanes()) {
    const auto proj = lane.centerline.project(point);
    const double lane_heading = lane.centerline.heading_at(proj.s);
    if (std::abs(wrap_angle(lane_heading - heading)) >= kHeadingGate) continue;
    // Lanes iterate in id order, so a strict comparison keeps the smaller id
    // on ties.
    if (proj.distance < best_dist - 1e-9) {
      best_dist = proj.distance;
      const double sign = proj.lateral < 0.0 ? -1.0 : 1.0;
      best = Localization{id, proj.s, sign * proj.distance};
    }
  }
  if (!best || best_dist > kMaxLateralOffset) {
    throw Error(ErrorCode::kNoLaneFound, "no lane found near (" + std::to_string(point.x) +
                                             ", " + std::to_string(point.y) + ")");
  }
  return *best;
}

namespace {

enum class Transition { kStart, kSuccessor, kChangeLeft, kChangeRight };

struct PlanStep {
  std::string lane;
  double s_in{0.0};
  Transition via{Transition::kStart};
};

Route assemble_route(const std::vector<PlanStep>& steps, double goal_s,
                     const MapTopology& map, double cost) {
  Route route;
  route.cost = cost;
  std::vector<Vec2> raw;
  auto append = [&raw](const std::vector<Vec2>& pts) {
    for (const auto& p : pts) {
      if (raw.empty() || distance(raw.back(), p) > 1e-9) raw.push_back(p);
    }
  };
  double route_s = 0.0;
  for (std::size_t i = 0; i < steps.size(); ++i) {
    const Lane& lane = map.lane(steps[i].lane);
    double begin = steps[i].s_in;
    double end = i + 1 < steps.size()
                     ? (steps[i + 1].via == Transition::kSuccessor ? lane.length()
                                                                   : steps[i + 1].s_in)
                     : goal_s;
    RouteSegment seg;
    seg.lane = lane.id;
    seg.lane_s_begin = begin;
    seg.lane_s_end = end;
    seg.speed_limit = lane.speed_limit;
    seg.is_junction = lane.is_junction;
    switch (steps[i].via) {
      case Transition::kChangeLeft: seg.option = RoadOption::kLaneChangeLeft; break;
      case Transition::kChangeRight: seg.option = RoadOption::kLaneChangeRight; break;
      default: seg.option = lane.is_junction ? turn_option(lane) : RoadOption::kFollow;
    }
    // Lane changes blend across a fixed longitudinal distance in geometry.
    double geom_begin = begin;
    if (steps[i].via == Transition::kChangeLeft || steps[i].via == Transition::kChangeRight) {
      geom_begin = std::min(begin + kLaneChangeBlendLength, std::max(begin, end - 1e-3));
    }
    double geom_end = end;
    if (i + 1 < steps.size() && steps[i + 1].via != Transition::kSuccessor) {
      geom_end = std::max(geom_begin, end);
    }
    // route arclength is tallied after appending; record start before.
    Polyline so_far(raw);
    seg.route_s_begin = raw.size() < 2 ? 0.0 : so_far.length();
    append(lane.centerline.slice(geom_begin, geom_end));
    route.lane_sequence.push_back(lane.id);
    route.road_option_sequence.push_back(seg.option);
    route.segments.push_back(seg);
  }
  (void)route_s;
  if (raw.size() < 2) {
    // Degenerate zero-length route: keep a single waypoint.
    if (!raw.empty()) {
      route.waypoints.push_back({raw[0], map.lane(steps[0].lane).centerline.heading_at(steps[0].s_in), 0.0});
      route.path = Polyline({raw[0], raw[0]});
    }
    return route;
  }
  const Polyline path(raw);
  const double total = path.length();
  std::vector<Vec2> resampled;
  for (double s = 0.0; s < total - 1e-9; s += kWaypointSpacing) resampled.push_back(path.point_at(s));
  resampled.push_back(path.point_at(total));
  if (resampled.size() >= 2 && distance(resampled[resampled.size() - 2], resampled.back()) < 1e-6) {
    resampled.erase(resampled.end() - 2);
  }
  route.path = Polyline(resampled);
  const auto& arc = route.path.arclengths();
  route.waypoints.resize(resampled.size());
  for (std::size_t i = 0; i < resampled.size(); ++i) {
    route.waypoints[i].position = resampled[i];
    route.waypoints[i].s = arc[i];
    if (i + 1 < resampled.size()) {
      const Vec2 d = resampled[i + 1] - resampled[i];
      route.waypoints[i].heading = std::atan2(d.y, d.x);
    } else if (i > 0) {
      route.waypoints[i].heading = route.waypoints[i - 1].heading;
    }
  }
  // Segment starts measured on the raw path are mapped onto the resampled
  // path by projection so they agree with waypoint arclengths.
  for (auto& seg : route.segments) {
    seg.route_s_begin = std::clamp(route.path.project(path.point_at(seg.route_s_begin)).s, 0.0, route.path.length());
  }
  for (std::size_t i = 1; i < route.segments.size(); ++i) {
    route.segments[i].route_s_begin =
        std::max(route.segments[i].route_s_begin, route.segments[i - 1].route_s_begin);
  }
  return route;
}

}  // namespace

Route plan_route(const LaneCoord& start, const LaneCoord& goal, const MapTopology& map) {
  if (!map.has_lane(start.lane)) throw Error(ErrorCode::kValidation, "unknown start lane " + start.lane);
  if (!map.has_lane(goal.lane)) throw Error(ErrorCode::kValidation, "unknown goal lane " + goal.lane);

  struct Node {
    PlanStep step;
    double cost;
    long parent;
  };
  std::vector<Node> nodes;
  using Item = std::pair<double, std::size_t>;
  std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
  std::map<std::pair<std::string, long long>, double> settled;
  auto key = [](const std::string& lane, double s) {
    return std::make_pair(lane, static_cast<long long>(std::llround(s * 1e6)));
  };

  nodes.push_back({{start.lane, std::clamp(start.s, 0.0, map.lane(start.lane).length()), Transition::kStart}, 0.0, -1});
  open.push({0.0, 0});
  double best_cost = std::numeric_limits<double>::infinity();
  long best_node = -1;

  while (!open.empty()) {
    auto [cost, idx] = open.top();
    open.pop();
    if (cost >= best_cost) break;
    const PlanStep step = nodes[idx].step;
    auto k = key(step.lane, step.s_in);
    auto it = settled.find(k);
    if (it != settled.end() && it->second <= cost && idx != 0) continue;
    settled[k] = cost;

    const Lane& lane = map.lane(step.lane);
    if (step.lane == goal.lane && step.s_in <= goal.s + 1e-9) {
      const double total = cost + (goal.s - step.s_in);
      if (total < best_cost) {
        best_cost = total;
        best_node = static_cast<long>(idx);
      }
    }
    auto push = [&](PlanStep next, double edge) {
      const double c = cost + edge;
      auto sk = settled.find(key(next.lane, next.s_in));
      if (sk != settled.end() && sk->second <= c) return;
      nodes.push_back({std::move(next), c, static_cast<long>(idx)});
      open.push({c, nodes.size() - 1});
    };
    for (const auto& succ : lane.successors) {
      push({succ, 0.0, Transition::kSuccessor}, lane.length() - step.s_in);
    }
    const Vec2 here = lane.centerline.point_at(step.s_in);
    const double change_cost = kLaneChangeCostFactor * lane.width;
    if (lane.left_neighbor) {
      const Lane& n = map.lane(*lane.left_neighbor);
      push({n.id, n.centerline.project(here).s, Transition::kChangeLeft}, change_cost);
    }
    if (lane.right_neighbor) {
      const Lane& n = map.lane(*lane.right_neighbor);
      push({n.id, n.centerline.project(here).s, Transition::kChangeRight}, change_cost);
    }
  }
  if (best_node < 0) {
    throw Error(ErrorCode::kUnreachableGoal,
                "goal lane " + goal.lane + " is unreachable from " + start.lane);
  }
  std::vector<PlanStep> steps;
  for (long n = best_node; n >= 0; n = nodes[n].parent) steps.push_back(nodes[n].step);
  std::reverse(steps.begin(), steps.end());
  return assemble_route(steps, goal.s, map, best_cost);
}

Route route_from_lanes(const std::vector<std::string>& lanes, double start_s,
                       const MapTopology& map) {
  if (lanes.empty()) throw Error(ErrorCode::kValidation, "empty lane chain");
  std::vector<PlanStep> steps;
  double cost = 0.0;
  for (std::size_t i = 0; i < lanes.size(); ++i) {
    const Lane& lane = map.lane(lanes[i]);
    if (i > 0) {
      const auto& prev = map.lane(lanes[i - 1]).successors;
      if (std::find(prev.begin(), prev.end(), lanes[i]) == prev.end()) {
        throw Error(ErrorCode::kValidation,
                    "lane " + lanes[i] + " is not a successor of " + lanes[i - 1]);
      }
    }
    const double s_in = i == 0 ? start_s : 0.0;
    cost += lane.length() - s_in;
    steps.push_back({lane.id, s_in, i == 0 ? Transition::kStart : Transition::kSuccessor});
  }
  return assemble_route(steps, map.lane(lanes.back()).length(), map, cost);
}

std::vector<LaneCoord> sample_spawn_candidates(const MapTopology& map, double spacing) {
  if (!(spacing > 0.0)) throw Error(ErrorCode::kValidation, "spawn spacing must be positive");
  std::vector<LaneCoord> out;
  for (const auto& [id, lane] : map.lanes()) {
    if (lane.is_junction) continue;
    const double len = lane.length();
    for (std::size_t k = 0;; ++k) {
      const double s = static_cast<double>(k) * spacing;
      if (s > len + 1e-9) break;
      out.push_back({id, std::min(s, len)});
    }
  }
  return out;
}

}  // namespace scenesim
