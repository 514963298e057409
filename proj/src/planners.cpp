#include "scenesim/planners.hpp"

#include <algorithm>
#include <cmath>

#include "scenesim/errors.hpp"

namespace scenesim {

const char* to_string(RouteCommand c) {
  switch (c) {
    case RouteCommand::kStraight: return "Straight";
    case RouteCommand::kLeft: return "Left";
    case RouteCommand::kRight: return "Right";
  }
  return "Straight";
}

RouteCommand route_command_from_string(const std::string& s) {
  if (s == "Straight") return RouteCommand::kStraight;
  if (s == "Left") return RouteCommand::kLeft;
  if (s == "Right") return RouteCommand::kRight;
  throw Error(ErrorCode::kParse, "unknown route command \"" + s + "\"");
}

RouteCommand derive_command(const Route& reference, double progress) {
  const double hi = progress + kCommandWindow;
  const auto& segs = reference.segments;
  for (std::size_t i = 0; i < segs.size(); ++i) {
    const auto& seg = segs[i];
    const double seg_end = i + 1 < segs.size() ? segs[i + 1].route_s_begin : reference.length();
    if (seg_end <= progress || seg.route_s_begin > hi) continue;
    switch (seg.option) {
      case RoadOption::kTurnLeft:
      case RoadOption::kLaneChangeLeft:
        return RouteCommand::kLeft;
      case RoadOption::kTurnRight:
      case RoadOption::kLaneChangeRight:
        return RouteCommand::kRight;
      case RoadOption::kFollow:
        break;
    }
  }
  return RouteCommand::kStraight;
}

void PlannerInput::validate() const {
  if (privileged.has_value() == (observation != nullptr)) {
    throw Error(ErrorCode::kValidation, "planner input needs exactly one of privileged data or observation");
  }
}

namespace {

double curvature_at(const Polyline& path, double s) {
  const double lo = std::max(0.0, s - 1.0);
  const double hi = std::min(path.length(), s + 1.0);
  if (hi - lo < 1e-6) return 0.0;
  return wrap_angle(path.heading_at(hi) - path.heading_at(lo)) / (hi - lo);
}

double speed_cap(const Route& reference, double s, const ExpertConfig& cfg) {
  double cap = std::min(cfg.cruise_speed, reference.segment_at(s).speed_limit);
  const double k = std::abs(curvature_at(reference.path, s));
  if (k > 1e-6) cap = std::min(cap, std::sqrt(cfg.lateral_accel / k));
  return cap;
}

}  // namespace

double reference_speed(const Route& reference, double s, const ExpertConfig& cfg) {
  if (reference.segments.empty()) return cfg.cruise_speed;
  const double len = reference.length();
  double v = speed_cap(reference, std::clamp(s, 0.0, len), cfg);
  for (double d = 1.0; d <= cfg.profile_horizon && s + d <= len; d += 1.0) {
    const double cap = speed_cap(reference, s + d, cfg);
    v = std::min(v, std::sqrt(cap * cap + 2.0 * cfg.braking * d));
  }
  return v;
}

double track_progress(const Route& route, Vec2 position, double previous) {
  const auto proj = route.path.project(position, std::max(0.0, previous - 2.0), previous + 20.0);
  return std::max(previous, proj.s);
}

ControlAction expert_plan(const PlannerInput& input, const Route& reference, const ExpertConfig& cfg) {
  input.validate();
  if (!input.privileged) throw Error(ErrorCode::kValidation, "expert planner requires privileged input");
  const VehicleState& ego = input.ego;
  const double progress = input.route_progress;
  const auto here = reference.path.project(ego.position(), std::max(0.0, progress - 5.0), progress + 25.0);
  if (here.distance > kOffRouteLimit) {
    throw Error(ErrorCode::kOffRoute, "ego is " + std::to_string(here.distance) +
                                          " m from the reference route at tick " + std::to_string(input.tick));
  }

  const double lookahead = std::max(4.0, 1.2 * ego.v);
  const double s_target = here.s + lookahead;
  Vec2 target;
  if (s_target <= reference.length()) {
    target = reference.path.point_at(s_target);
  } else {
    const double end = reference.length();
    target = reference.path.point_at(end) +
             unit_from_heading(reference.path.heading_at(end)) * (s_target - end);
  }
  const double steer = pursuit_steer(ego, target);

  const double desired = reference_speed(reference, here.s, cfg);
  std::vector<CorridorVehicle> others;
  if (input.privileged->agents) {
    for (const auto& a : *input.privileged->agents) {
      if (a.present()) others.push_back({&a.state, false});
    }
  }
  const auto leader = find_leader(ego, reference, here.s, others);
  double accel = idm_accel(cfg.idm, ego.v, desired, leader ? std::optional<double>(leader->gap) : std::nullopt,
                           leader ? leader->speed : 0.0);
  if (leader && leader->speed < ego.v) {
    const double room = leader->gap - cfg.idm.min_gap;
    if (room <= 0.0) {
      accel = -ControlAction::kMaxAccel;
    } else {
      const double dv = ego.v - leader->speed;
      const double required = dv * dv / (2.0 * room);
      if (required > cfg.idm.comfort_decel) accel = std::min(accel, -required);
    }
  }
  return ControlAction{accel, steer}.clamped();
}

}  // namespace scenesim
