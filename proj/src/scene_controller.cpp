#include "scenesim/scene_controller.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <numeric>

#include "scenesim/errors.hpp"

namespace scenesim {

namespace {

constexpr double kTriggerJunctionRadius = 30.0;  // m before a junction entry
constexpr double kTriggerJunctionWeight = 3.0;
constexpr double kCorridorMargin = 0.3;             // m added to half widths
constexpr double kCrossingHeadingGate = M_PI / 6.0;  // 30 deg
constexpr double kLaneChangeCooldown = 5.0;         // s
constexpr double kInitialSpeedFactor = 0.8;
constexpr double kLimitLookahead = 60.0;          // m
constexpr std::size_t kMaxChains = 16;

constexpr std::array<BehaviorMode, 4> kDangerousModes{
    BehaviorMode::kLaneChange, BehaviorMode::kAggressiveOvertake,
    BehaviorMode::kEmergencyStop, BehaviorMode::kIgnoreSafeDistance};

VehicleState default_vehicle() { return VehicleState{}; }

// Successor chains from (lane, s) until `max_len` of travel or a dead end.
void enumerate_chains(const MapTopology& map, const std::string& lane, double s,
                      double max_len, std::vector<std::string>& prefix,
                      std::vector<std::vector<std::string>>& out) {
  if (out.size() >= kMaxChains) return;
  prefix.push_back(lane);
  const Lane& l = map.lane(lane);
  const double remaining = max_len - (l.length() - s);
  std::vector<std::string> succ = l.successors;
  std::sort(succ.begin(), succ.end());
  if (remaining <= 0.0 || succ.empty()) {
    out.push_back(prefix);
  } else {
    bool extended = false;
    for (const auto& next : succ) {
      if (std::find(prefix.begin(), prefix.end(), next) != prefix.end()) continue;
      extended = true;
      enumerate_chains(map, next, 0.0, remaining, prefix, out);
    }
    if (!extended) out.push_back(prefix);
  }
  prefix.pop_back();
}

double chain_length(const MapTopology& map, const std::vector<std::string>& chain, double s) {
  double len = 0.0;
  for (std::size_t i = 0; i < chain.size(); ++i) {
    len += map.lane(chain[i]).length() - (i == 0 ? s : 0.0);
  }
  return len;
}

// First successor by id, repeated until `max_len` is covered.
std::vector<std::string> follow_chain(const MapTopology& map, const std::string& lane, double s,
                                      double max_len) {
  std::vector<std::string> chain{lane};
  double len = map.lane(lane).length() - s;
  while (len < max_len) {
    auto succ = map.lane(chain.back()).successors;
    if (succ.empty()) break;
    std::sort(succ.begin(), succ.end());
    const auto& next = succ.front();
    if (std::find(chain.begin(), chain.end(), next) != chain.end()) break;
    chain.push_back(next);
    len += map.lane(next).length();
  }
  return chain;
}

AgentRecord make_agent(const MapTopology& map, const std::vector<std::string>& chain, double s) {
  AgentRecord a;
  a.state = default_vehicle();
  const Lane& lane = map.lane(chain.front());
  const Vec2 p = lane.centerline.point_at(s);
  a.state.x = p.x;
  a.state.y = p.y;
  a.state.heading = wrap_angle(lane.centerline.heading_at(s));
  a.state.v = 0.0;
  a.behavior.set_route(route_from_lanes(chain, s, map));
  a.behavior.route_progress = 0.0;
  a.behavior.target_speed = lane.speed_limit;
  return a;
}

}  // namespace

const char* to_string(SpawnMode mode) {
  switch (mode) {
    case SpawnMode::kRouteBased: return "RouteBased";
    case SpawnMode::kTriggerBased: return "TriggerBased";
    case SpawnMode::kMixed: return "Mixed";
  }
  return "RouteBased";
}

const char* to_string(BehaviorMode mode) {
  switch (mode) {
    case BehaviorMode::kNormal: return "Normal";
    case BehaviorMode::kLaneChange: return "LaneChange";
    case BehaviorMode::kAggressiveOvertake: return "AggressiveOvertake";
    case BehaviorMode::kEmergencyStop: return "EmergencyStop";
    case BehaviorMode::kIgnoreSafeDistance: return "IgnoreSafeDistance";
  }
  return "Normal";
}

SpawnMode spawn_mode_from_string(const std::string& s) {
  if (s == "RouteBased") return SpawnMode::kRouteBased;
  if (s == "TriggerBased") return SpawnMode::kTriggerBased;
  if (s == "Mixed") return SpawnMode::kMixed;
  throw Error(ErrorCode::kConfig, "unknown spawn_mode " + s);
}

BehaviorMode behavior_mode_from_string(const std::string& s) {
  for (auto m : {BehaviorMode::kNormal, BehaviorMode::kLaneChange,
                 BehaviorMode::kAggressiveOvertake, BehaviorMode::kEmergencyStop,
                 BehaviorMode::kIgnoreSafeDistance}) {
    if (s == to_string(m)) return m;
  }
  throw Error(ErrorCode::kConfig, "unknown behavior mode " + s);
}

double idm_accel(const IdmParams& p, double v, double desired_speed,
                 std::optional<double> gap, double leader_speed) {
  // A non-positive desired speed means: come to rest and stay there.
  double a = desired_speed > 0.0 ? p.max_accel * (1.0 - std::pow(v / desired_speed, p.exponent))
                                 : (v > 0.0 ? -p.comfort_decel : 0.0);
  if (gap) {
    const double dv = v - leader_speed;
    const double s_star =
        p.min_gap + std::max(0.0, v * p.headway + v * dv / (2.0 * std::sqrt(p.max_accel * p.comfort_decel)));
    const double s = std::max(*gap, 0.1);
    a -= p.max_accel * (s_star / s) * (s_star / s);
  }
  return a;
}

void WorldConfig::validate() const {
  if (max_agents < 0) throw Error(ErrorCode::kConfig, "max_agents must be >= 0");
  const double sum = std::accumulate(behavior_mix.begin(), behavior_mix.end(), 0.0);
  if (std::abs(sum - 1.0) > 1e-6) throw Error(ErrorCode::kConfig, "behavior_mix must sum to 1");
  for (double f : behavior_mix) {
    if (f < 0.0) throw Error(ErrorCode::kConfig, "behavior_mix entries must be >= 0");
  }
  if (dangerous_fraction < 0.0 || dangerous_fraction > 1.0) {
    throw Error(ErrorCode::kConfig, "dangerous_fraction must lie in [0,1]");
  }
  if (t_max < 0) throw Error(ErrorCode::kConfig, "T_max must be >= 0");
  if (!(spawn_spacing > 0.0)) throw Error(ErrorCode::kConfig, "spawn_spacing must be > 0");
}

WorldConfig world_config_from_json(const nlohmann::json& j) {
  WorldConfig c;
  try {
    c.max_agents = j.value("max_agents", c.max_agents);
    if (j.contains("spawn_mode")) c.spawn_mode = spawn_mode_from_string(j.at("spawn_mode").get<std::string>());
    if (j.contains("behavior_mix")) {
      const auto& m = j.at("behavior_mix");
      for (std::size_t i = 0; i < kDangerousModes.size(); ++i) {
        c.behavior_mix[i] = m.value(to_string(kDangerousModes[i]), 0.0);
      }
    }
    c.dangerous_fraction = j.value("dangerous_fraction", c.dangerous_fraction);
    c.seed = j.value("seed", c.seed);
    c.min_route_length = j.value("min_route_length", c.min_route_length);
    c.spawn_exclusion_radius = j.value("spawn_exclusion_radius", c.spawn_exclusion_radius);
    c.t_max = j.value("T_max", c.t_max);
    c.spawn_spacing = j.value("spawn_spacing", c.spawn_spacing);
    c.agent_route_length = j.value("agent_route_length", c.agent_route_length);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("world config: ") + e.what());
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const WorldConfig& c) {
  nlohmann::json mix;
  for (std::size_t i = 0; i < kDangerousModes.size(); ++i) mix[to_string(kDangerousModes[i])] = c.behavior_mix[i];
  return {{"max_agents", c.max_agents},
          {"spawn_mode", to_string(c.spawn_mode)},
          {"behavior_mix", mix},
          {"dangerous_fraction", c.dangerous_fraction},
          {"seed", c.seed},
          {"min_route_length", c.min_route_length},
          {"spawn_exclusion_radius", c.spawn_exclusion_radius},
          {"T_max", c.t_max},
          {"spawn_spacing", c.spawn_spacing},
          {"agent_route_length", c.agent_route_length}};
}

const Route& BehaviorState::route() const {
  static const Route kEmpty;
  return route_ptr ? *route_ptr : kEmpty;
}

double LateralBlend::offset_at(double t) const {
  const double tau = std::clamp(t / kDuration, 0.0, 1.0);
  return start_offset * (1.0 - (3.0 * tau * tau - 2.0 * tau * tau * tau));
}

std::vector<AgentRecord> spawn_route_based(const MapTopology& map, const Route& ego_route,
                                           const WorldConfig& config, Rng& rng) {
  std::vector<AgentRecord> out;
  if (config.max_agents <= 0 || ego_route.waypoints.empty()) return out;
  const auto ego_path = ego_route.positions();
  const Vec2 ego_start = ego_path.front();

  std::map<std::string, bool> lane_hits;
  auto lane_hits_ego = [&](const std::string& id) {
    auto it = lane_hits.find(id);
    if (it != lane_hits.end()) return it->second;
    const bool hit = polylines_intersect(map.lane(id).centerline.points(), ego_path);
    lane_hits.emplace(id, hit);
    return hit;
  };

  struct Candidate {
    LaneCoord coord;
    Vec2 position;
    double score;
    std::vector<std::vector<std::string>> routes;  // crossing chains if any, else every valid chain
  };
  // Lanes on the ego route never count as crossings.
  const std::set<std::string> ego_lanes(ego_route.lane_sequence.begin(), ego_route.lane_sequence.end());
  std::vector<Candidate> candidates;
  for (const auto& c : sample_spawn_candidates(map, config.spawn_spacing)) {
    const Lane& lane = map.lane(c.lane);
    const Vec2 p = lane.centerline.point_at(c.s);
    if (distance(p, ego_start) < config.spawn_exclusion_radius) continue;
    std::vector<std::vector<std::string>> chains;
    std::vector<std::string> prefix;
    enumerate_chains(map, c.lane, c.s, config.agent_route_length, prefix, chains);
    std::vector<std::vector<std::string>> crossing, valid;
    const bool first_hits =
        !ego_lanes.count(c.lane) && polylines_intersect(lane.centerline.slice(c.s, lane.length()), ego_path);
    for (auto& chain : chains) {
      if (chain_length(map, chain, c.s) < config.min_route_length) continue;
      bool hit = first_hits;
      for (std::size_t i = 1; i < chain.size() && !hit; ++i) hit = !ego_lanes.count(chain[i]) && lane_hits_ego(chain[i]);
      (hit ? crossing : valid).push_back(std::move(chain));
    }
    if (crossing.empty() && valid.empty()) continue;
    const bool hits = !crossing.empty();
    const double closeness = 1.0 / (1.0 + point_polyline_distance(p, ego_path));  // in (0, 1]
    candidates.push_back({c, p, (hits ? 1.0 : 0.0) + closeness, hits ? std::move(crossing) : std::move(valid)});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Candidate& a, const Candidate& b) { return a.score > b.score; });

  std::vector<bool> removed(candidates.size(), false);
  for (std::size_t i = 0; i < candidates.size() && static_cast<int>(out.size()) < config.max_agents; ++i) {
    if (removed[i]) continue;
    const Candidate& c = candidates[i];
    const auto& chain = c.routes[rng.index(c.routes.size())];
    AgentRecord agent = make_agent(map, chain, c.coord.s);
    agent.id = static_cast<int>(out.size());
    out.push_back(std::move(agent));
    for (std::size_t k = i + 1; k < candidates.size(); ++k) {
      if (distance(candidates[k].position, c.position) < config.spawn_exclusion_radius) removed[k] = true;
    }
  }
  return out;
}

std::vector<AgentRecord> spawn_trigger_based(const MapTopology& map, const Route& ego_route,
                                             const WorldConfig& config, Rng& rng) {
  std::vector<AgentRecord> out;
  if (config.max_agents <= 0 || ego_route.waypoints.size() < 2) return out;
  const auto ego_path = ego_route.positions();

  std::vector<double> junction_entries;
  for (const auto& seg : ego_route.segments) {
    if (seg.is_junction) junction_entries.push_back(seg.route_s_begin);
  }
  const double s_limit =
      junction_entries.empty() ? ego_route.length() : junction_entries.back();

  std::vector<double> trigger_s;
  std::vector<double> weights;
  for (const auto& wp : ego_route.waypoints) {
    if (wp.s >= s_limit) break;
    trigger_s.push_back(wp.s);
    double w = 1.0;
    for (double entry : junction_entries) {
      if (entry - wp.s > 0.0 && entry - wp.s <= kTriggerJunctionRadius) w = kTriggerJunctionWeight;
    }
    weights.push_back(w);
  }
  if (trigger_s.empty()) return out;

  std::vector<Vec2> used_spawns;
  for (int k = 0; k < config.max_agents; ++k) {
    const double trig = trigger_s[rng.weighted_index(weights)];
    const Polyline ahead(ego_route.path.slice(trig, ego_route.length()));

    // Junction reached after the trigger, else the nearest one to the route ahead.
    const Junction* junction = nullptr;
    for (const auto& seg : ego_route.segments) {
      if (seg.is_junction && seg.route_s_begin >= trig) {
        junction = map.junction_of(seg.lane);
        break;
      }
    }
    if (!junction && !map.junctions().empty()) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& j : map.junctions()) {
        const double d = point_polyline_distance(j.centroid, ahead.points());
        if (d < best) {
          best = d;
          junction = &j;
        }
      }
    }

    struct Option {
      std::vector<std::string> chain;
      double s;
      Vec2 position;
    };
    std::vector<Option> options;
    if (junction) {
      for (const auto& lane_id : junction->lanes) {
        const Lane& lane = map.lane(lane_id);
        const Vec2 start = lane.points.front().position;
        if (point_polyline_distance(start, ego_path) < 3.0) continue;
        options.push_back({follow_chain(map, lane_id, 0.0, config.agent_route_length), 0.0, start});
      }
    } else {
      const auto& seg = ego_route.segment_at(trig);
      const Lane& lane = map.lane(seg.lane);
      std::vector<std::string> neighbors;
      if (lane.left_neighbor) neighbors.push_back(*lane.left_neighbor);
      if (lane.right_neighbor) neighbors.push_back(*lane.right_neighbor);
      for (const auto& n : neighbors) {
        const Lane& nl = map.lane(n);
        const double s = std::min(nl.centerline.project(ego_route.path.point_at(trig)).s + 15.0, nl.length());
        options.push_back({follow_chain(map, n, s, config.agent_route_length), s, nl.centerline.point_at(s)});
      }
    }

    const Option* best = nullptr;
    std::size_t best_count = 0;
    for (const auto& opt : options) {
      if (chain_length(map, opt.chain, opt.s) < config.min_route_length) continue;
      bool taken = false;
      for (const auto& u : used_spawns) taken = taken || distance(u, opt.position) < 1.0;
      if (taken) continue;
      const Route r = route_from_lanes(opt.chain, opt.s, map);
      const std::size_t count = polyline_intersection_count(r.positions(), ahead.points());
      if (!best || count > best_count) {
        best = &opt;
        best_count = count;
      }
    }
    if (!best) continue;
    AgentRecord agent = make_agent(map, best->chain, best->s);
    agent.id = static_cast<int>(out.size());
    agent.behavior.active = false;
    agent.trigger = trig;
    used_spawns.push_back(best->position);
    out.push_back(std::move(agent));
  }
  return out;
}

AgentRecord make_lane_agent(const MapTopology& map, const std::string& lane, double s,
                            double route_length) {
  if (s < 0.0 || s > map.lane(lane).length()) {
    throw Error(ErrorCode::kValidation, "agent position s=" + std::to_string(s) + " outside lane " + lane);
  }
  return make_agent(map, follow_chain(map, lane, s, route_length), s);
}

namespace {

// Highest start speed from which every lower limit ahead is reachable with comfortable braking.
double brakeable_speed(const Route& route, double factor) {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& seg : route.segments) {
    if (seg.route_s_begin > kLimitLookahead) break;
    v = std::min(v, std::sqrt(std::pow(factor * seg.speed_limit, 2) + 2.0 * IdmParams{}.comfort_decel * seg.route_s_begin));
  }
  return v;
}

}  // namespace

void assign_behaviors(std::vector<AgentRecord>& agents, const WorldConfig& config, Rng& rng) {
  const std::vector<double> mix(config.behavior_mix.begin(), config.behavior_mix.end());
  for (auto& a : agents) {
    const double limit = a.behavior.route().segments.empty() ? 10.0 : a.behavior.route().segments.front().speed_limit;
    BehaviorMode mode = BehaviorMode::kNormal;
    if (rng.uniform() < config.dangerous_fraction) mode = kDangerousModes[rng.weighted_index(mix)];
    a.behavior.mode = mode;
    a.behavior.target_speed = mode == BehaviorMode::kAggressiveOvertake
                                  ? kSpeedLimitFactor * limit
                                  : limit * rng.uniform(0.8, 1.0);
    const double factor = mode == BehaviorMode::kAggressiveOvertake ? kSpeedLimitFactor : 1.0;
    a.initial_speed = std::min(kInitialSpeedFactor * a.behavior.target_speed, brakeable_speed(a.behavior.route(), factor));
    if (a.behavior.active) a.state.v = a.initial_speed;
  }
}

std::vector<AgentRecord> spawn_agents(const MapTopology& map, const Route& ego_route,
                                      const WorldConfig& config, Rng& rng) {
  std::vector<AgentRecord> agents;
  switch (config.spawn_mode) {
    case SpawnMode::kRouteBased:
      agents = spawn_route_based(map, ego_route, config, rng);
      break;
    case SpawnMode::kTriggerBased:
      agents = spawn_trigger_based(map, ego_route, config, rng);
      break;
    case SpawnMode::kMixed: {
      WorldConfig route_cfg = config;
      route_cfg.max_agents = (config.max_agents + 1) / 2;
      WorldConfig trig_cfg = config;
      trig_cfg.max_agents = config.max_agents - route_cfg.max_agents;
      agents = spawn_route_based(map, ego_route, route_cfg, rng);
      auto triggered = spawn_trigger_based(map, ego_route, trig_cfg, rng);
      for (auto& a : triggered) agents.push_back(std::move(a));
      break;
    }
  }
  for (std::size_t i = 0; i < agents.size(); ++i) agents[i].id = static_cast<int>(i);
  assign_behaviors(agents, config, rng);
  return agents;
}

std::optional<LeaderInfo> find_leader(const VehicleState& self, const Route& route, double progress,
                                      const std::vector<CorridorVehicle>& others, double lookahead) {
  std::optional<LeaderInfo> best;
  const double s_hi = std::min(route.length(), progress + lookahead);
  auto consider = [&](const Polyline::Projection& proj, const VehicleState& other, bool is_ego, bool predicted) {
    const double half = 0.5 * (self.width + other.width) + kCorridorMargin;
    if (proj.distance > half || proj.s <= progress + 1e-6) return;
    const double gap = proj.s - progress - 0.5 * (self.length + other.length);
    const double along =
        predicted ? 0.0
                  : std::max(0.0, other.v * std::cos(other.heading - route.path.heading_at(proj.s)));
    if (!best || gap < best->gap) best = LeaderInfo{gap, along, is_ego};
  };
  // Vehicles whose two-second sweep stays clear of the window's box cannot
  // produce a leader.
  const auto [box_lo, box_hi] = route.path.bounds(progress, s_hi);
  for (const auto& o : others) {
    if (o.state == &self) continue;
    const VehicleState& st = *o.state;
    const double pad = 0.5 * (self.width + st.width) + kCorridorMargin;
    const Vec2 p0 = st.position();
    const double sweep = 2.0 * std::max(0.0, st.v);
    if (p0.x + sweep < box_lo.x - pad || p0.x - sweep > box_hi.x + pad || p0.y + sweep < box_lo.y - pad ||
        p0.y - sweep > box_hi.y + pad) {
      continue;
    }
    const Vec2 p2 = p0 + unit_from_heading(st.heading) * sweep;
    if (std::max(p0.x, p2.x) < box_lo.x - pad || std::min(p0.x, p2.x) > box_hi.x + pad ||
        std::max(p0.y, p2.y) < box_lo.y - pad || std::min(p0.y, p2.y) > box_hi.y + pad) {
      continue;
    }
    const auto here = route.path.project(p0, progress, s_hi);
    consider(here, st, o.is_ego, false);
    const double rel = std::abs(wrap_angle(st.heading - route.path.heading_at(here.s)));
    if (rel > kCrossingHeadingGate && st.v > 0.1) {
      for (double tau : {1.0, 2.0}) {
        const Vec2 p = p0 + unit_from_heading(st.heading) * (st.v * tau);
        consider(route.path.project(p, progress, s_hi), st, o.is_ego, true);
      }
    }
  }
  return best;
}

namespace {

struct ModeParams {
  IdmParams idm;
  double desired_speed;
};

ModeParams mode_params(const AgentRecord& a, double limit) {
  ModeParams m{IdmParams{}, std::min(a.behavior.target_speed, limit)};
  switch (a.behavior.mode) {
    case BehaviorMode::kAggressiveOvertake:
      m.idm.headway = 0.8;
      m.idm.min_gap = 1.0;
      m.desired_speed = std::min(a.behavior.target_speed, kSpeedLimitFactor * limit);
      break;
    case BehaviorMode::kIgnoreSafeDistance:
      m.idm.headway = 0.0;
      m.idm.min_gap = kIgnoreSafeDistanceGap;
      break;
    default:
      break;
  }
  return m;
}

// Every present agent plus ego; find_leader skips the querying vehicle.
std::vector<CorridorVehicle> corridor_of(const ControllerContext& ctx, const std::vector<AgentRecord>& agents) {
  std::vector<CorridorVehicle> others;
  others.reserve(agents.size() + 1);
  for (const auto& a : agents) {
    if (a.present()) others.push_back({&a.state, false});
  }
  if (ctx.ego) others.push_back({&*ctx.ego, true});
  return others;
}

double accel_with(const ControllerContext& ctx, const AgentRecord& a, const std::vector<CorridorVehicle>& others);

}  // namespace

double agent_accel(const ControllerContext& ctx, const std::vector<AgentRecord>& agents,
                   std::size_t index) {
  return accel_with(ctx, agents[index], corridor_of(ctx, agents));
}

namespace {

double accel_with(const ControllerContext& ctx, const AgentRecord& a, const std::vector<CorridorVehicle>& others) {
  const double v = a.state.v;
  const auto& route = a.behavior.route();
  const double limit = route.segments.empty() ? a.behavior.target_speed
                                              : route.segment_at(a.behavior.route_progress).speed_limit;
  ModeParams mp = mode_params(a, limit);
  // Slow down ahead of segments with a lower limit.
  for (const auto& seg : route.segments) {
    const double ahead = seg.route_s_begin - a.behavior.route_progress;
    if (ahead <= 0.0 || ahead > kLimitLookahead) continue;
    const double factor = a.behavior.mode == BehaviorMode::kAggressiveOvertake ? kSpeedLimitFactor : 1.0;
    const double reachable = std::sqrt(std::pow(factor * seg.speed_limit, 2) + 2.0 * mp.idm.comfort_decel * ahead);
    mp.desired_speed = std::min(mp.desired_speed, reachable);
  }
  const auto leader = find_leader(a.state, route, a.behavior.route_progress, others);

  double accel = idm_accel(mp.idm, v, mp.desired_speed,
                           leader ? std::optional<double>(leader->gap) : std::nullopt,
                           leader ? leader->speed : 0.0);
  if (leader && leader->speed < v) {
    const double room = leader->gap - mp.idm.min_gap;
    if (room <= 0.0) {
      accel = -ControlAction::kMaxAccel;
    } else {
      const double dv = v - leader->speed;
      const double required = dv * dv / (2.0 * room);
      if (required > mp.idm.comfort_decel) accel = std::min(accel, -required);
    }
  }
  if (a.behavior.mode == BehaviorMode::kEmergencyStop && ctx.ego) {
    const Vec2 rel = rotate(ctx.ego->position() - a.state.position(), -a.state.heading);
    if (rel.x > 0.0 && rel.x <= kEmergencyStopRange && std::abs(rel.y) <= 0.5 * map_constants::kDefaultLaneWidth + 0.25) {
      accel = -ControlAction::kMaxAccel;
    }
  }
  const double v_cap = kSpeedLimitFactor * limit;
  if (v + accel * ctx.dt > v_cap) accel = (v_cap - v) / ctx.dt;
  return std::clamp(accel, -ControlAction::kMaxAccel, ControlAction::kMaxAccel);
}

}  // namespace

std::vector<AgentRecord> controller_step(const ControllerContext& ctx,
                                         const std::vector<AgentRecord>& agents) {
  if (!ctx.map) throw Error(ErrorCode::kConfig, "controller context has no map");
  const MapTopology& map = *ctx.map;
  std::vector<AgentRecord> next = agents;
  const auto others = corridor_of(ctx, agents);
  for (std::size_t i = 0; i < agents.size(); ++i) {
    const AgentRecord& cur = agents[i];
    AgentRecord& out = next[i];
    if (cur.behavior.finished) continue;
    if (!cur.behavior.active) {
      if (cur.trigger && ctx.ego && ctx.ego_route_progress >= *cur.trigger) {
        out.behavior.active = true;
        out.state.v = cur.initial_speed;
      }
      continue;
    }

    const double accel = accel_with(ctx, cur, others);
    BehaviorState& b = out.behavior;
    const double v = cur.state.v;

    // Lane-change initiation for the modes that overtake or weave.
    if ((b.mode == BehaviorMode::kLaneChange || b.mode == BehaviorMode::kAggressiveOvertake) &&
        !b.lane_change && b.lane_change_cooldown <= 0.0 && !b.route().segments.empty()) {
      const auto leader = find_leader(cur.state, cur.behavior.route(), cur.behavior.route_progress, others);
      const double desired = std::min(b.target_speed, kSpeedLimitFactor * b.route().segment_at(b.route_progress).speed_limit);
      if (leader && leader->gap < std::max(15.0, 2.0 * v) && leader->speed < 0.8 * desired) {
        const Lane& lane = map.lane(b.route().segment_at(b.route_progress).lane);
        std::optional<std::string> target = lane.left_neighbor;
        if (!target && b.mode == BehaviorMode::kLaneChange) target = lane.right_neighbor;
        if (target && !lane.is_junction) {
          const Lane& nl = map.lane(*target);
          const double s = nl.centerline.project(cur.state.position()).s;
          if (nl.length() - s > 5.0) {
            b.set_route(route_from_lanes(follow_chain(map, nl.id, s, 60.0), s, map));
            b.route_progress = 0.0;
            const auto proj = b.route().path.project(cur.state.position());
            b.lane_change = LateralBlend{proj.lateral, 0.0};
          }
        }
      }
    }

    const double lookahead = std::max(4.0, 1.2 * v);
    Vec2 target = b.route().path.point_at(b.route_progress + lookahead);
    if (b.lane_change) {
      const double t_ahead = b.lane_change->elapsed + lookahead / std::max(v, 1.0);
      const double heading = b.route().path.heading_at(b.route_progress + lookahead);
      target = target + unit_from_heading(heading + M_PI_2) * b.lane_change->offset_at(t_ahead);
    }
    const double steer = pursuit_steer(cur.state, target);
    out.state = bicycle_step(cur.state, {accel, steer}, ctx.dt);

    const auto proj = b.route().path.project(out.state.position(), std::max(0.0, b.route_progress - 2.0),
                                           b.route_progress + 20.0);
    b.route_progress = std::max(b.route_progress, proj.s);
    if (b.lane_change) {
      b.lane_change->elapsed += ctx.dt;
      if (b.lane_change->done()) {
        b.lane_change.reset();
        b.lane_change_cooldown = kLaneChangeCooldown;
      }
    } else {
      b.lane_change_cooldown = std::max(0.0, b.lane_change_cooldown - ctx.dt);
    }
    if (b.route_progress >= b.route().length() - 0.5) b.finished = true;
  }
  return next;
}

nlohmann::json to_json(const AgentRecord& a) {
  nlohmann::json j{{"id", a.id},
                   {"x", a.state.x},
                   {"y", a.state.y},
                   {"phi", a.state.heading},
                   {"v", a.state.v},
                   {"mode", to_string(a.behavior.mode)},
                   {"active", a.behavior.active},
                   {"finished", a.behavior.finished},
                   {"progress", a.behavior.route_progress},
                   {"target_speed", a.behavior.target_speed},
                   {"lane_change", a.behavior.lane_change.has_value()}};
  if (a.trigger) j["trigger"] = *a.trigger;
  return j;
}

}  // namespace scenesim
