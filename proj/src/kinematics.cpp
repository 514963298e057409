#include "scenesim/kinematics.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>

#include "scenesim/errors.hpp"

namespace scenesim {

ControlAction ControlAction::clamped() const {
  return {std::clamp(accel, -kMaxAccel, kMaxAccel), std::clamp(steer, -kMaxSteer, kMaxSteer)};
}

double slip_angle(double steer, double l_f, double l_r) {
  return std::atan(l_r / (l_f + l_r) * std::tan(steer));
}

VehicleState akm_step(const VehicleState& state, const ControlAction& action,
                      const KinematicParams& params) {
  const ControlAction act = action.clamped();
  const double dt = params.dt;
  const double beta = slip_angle(act.steer, state.l_f, state.l_r);
  const double v_next = std::max(0.0, state.v + act.accel * dt);
  // Heading update uses l_f and the pre-update speed, as in the AKM system.
  const double heading_next = wrap_angle(state.heading + state.v / state.l_f * std::sin(beta) * dt);
  const double v_u = (1.0 - params.u1) * state.v + params.u1 * v_next;
  const double course = state.heading + params.u2 * beta;

  VehicleState next = state;
  next.x = state.x + v_u * std::cos(course) * dt;
  next.y = state.y + v_u * std::sin(course) * dt;
  next.heading = heading_next;
  next.v = v_next;
  return next;
}

VehicleState bicycle_step(const VehicleState& state, const ControlAction& action, double dt) {
  const ControlAction act = action.clamped();
  const double beta = slip_angle(act.steer, state.l_f, state.l_r);
  VehicleState next = state;
  next.x = state.x + state.v * std::cos(state.heading + beta) * dt;
  next.y = state.y + state.v * std::sin(state.heading + beta) * dt;
  next.heading = wrap_angle(state.heading + state.v / state.l_f * std::sin(beta) * dt);
  next.v = std::max(0.0, state.v + act.accel * dt);
  return next;
}

double steer_for_curvature(double curvature, double l_f, double l_r) {
  const double beta = std::asin(std::clamp(l_f * curvature, -1.0, 1.0));
  const double steer = std::atan(std::tan(beta) * (l_f + l_r) / l_r);
  return std::clamp(steer, -ControlAction::kMaxSteer, ControlAction::kMaxSteer);
}

double pursuit_steer(const VehicleState& state, Vec2 target) {
  const Vec2 local = rotate(target - state.position(), -state.heading);
  const double ld2 = dot(local, local);
  if (ld2 < 1e-9) return 0.0;
  return steer_for_curvature(2.0 * local.y / ld2, state.l_f, state.l_r);
}

std::optional<double> invert_slip(double heading_t, double heading_next, double v_t,
                                  double l_f, double dt) {
  if (v_t < kSlipSpeedFloor) return std::nullopt;
  const double arg = l_f / (v_t * dt) * wrap_angle(heading_next - heading_t);
  return std::asin(std::clamp(arg, -1.0, 1.0));
}

AkmObjective::AkmObjective(const std::vector<std::vector<ImuSample>>& logs, double l_f,
                           double dt)
    : dt_(dt) {
  for (const auto& log : logs) {
    for (std::size_t t = 0; t + 1 < log.size(); ++t) {
      const ImuSample& a = log[t];
      const ImuSample& b = log[t + 1];
      const auto slip = invert_slip(a.heading, b.heading, a.v, l_f, dt);
      if (!slip) continue;
      pairs_.push_back({a.x, a.y, a.heading, a.v, b.v, *slip, b.x, b.y});
    }
  }
}

double AkmObjective::operator()(double u1, double u2) const {
  double total = 0.0;
  for (const Pair& p : pairs_) {
    const double v_u = (1.0 - u1) * p.v + u1 * p.v_next;
    const double course = p.heading + u2 * p.slip;
    const double dx = p.x_next - (p.x + v_u * std::cos(course) * dt_);
    const double dy = p.y_next - (p.y + v_u * std::sin(course) * dt_);
    total += dx * dx + dy * dy;
  }
  return total;
}

AkmEstimate estimate_akm_params(const std::vector<std::vector<ImuSample>>& logs, double l_f,
                                double l_r, double dt) {
  (void)l_r;  // the estimator only needs l_f through the inverted heading update
  constexpr std::size_t kMinPairs = 100;
  constexpr int kGrid = 21;
  constexpr double kU1Max = 1.0, kU2Max = 2.0;

  const AkmObjective objective(logs, l_f, dt);
  if (objective.size() < kMinPairs) {
    throw Error(ErrorCode::kInsufficientData,
                "need at least 100 usable frame pairs, got " + std::to_string(objective.size()));
  }

  double best_u1 = 0.0, best_u2 = 0.0;
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < kGrid; ++i) {
    for (int j = 0; j < kGrid; ++j) {
      const double u1 = kU1Max * i / (kGrid - 1);
      const double u2 = kU2Max * j / (kGrid - 1);
      const double f = objective(u1, u2);
      if (f < best) {
        best = f;
        best_u1 = u1;
        best_u2 = u2;
      }
    }
  }

  for (double step = 0.05; step >= 1e-5; step *= 0.5) {
    bool moved = true;
    while (moved) {
      moved = false;
      for (int axis = 0; axis < 2; ++axis) {
        for (double dir : {1.0, -1.0}) {
          double u1 = best_u1, u2 = best_u2;
          if (axis == 0) {
            u1 = std::clamp(u1 + dir * step, 0.0, kU1Max);
          } else {
            u2 = std::clamp(u2 + dir * step, 0.0, kU2Max);
          }
          const double f = objective(u1, u2);
          if (f < best) {
            best = f;
            best_u1 = u1;
            best_u2 = u2;
            moved = true;
          }
        }
      }
    }
  }
  return {{dt, best_u1, best_u2}, best, objective.size()};
}

std::vector<ImuSample> read_imu_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open IMU log " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kParse, "empty IMU log " + path);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "tick,x,y,phi,v") {
    throw Error(ErrorCode::kParse, "IMU log " + path + " must start with header tick,x,y,phi,v");
  }
  std::vector<ImuSample> out;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    ImuSample s;
    if (!(ss >> s.tick >> s.x >> s.y >> s.heading >> s.v)) {
      throw Error(ErrorCode::kParse, path + ": malformed row " + std::to_string(row));
    }
    if (!out.empty() && s.tick <= out.back().tick) {
      throw Error(ErrorCode::kParse, path + ": ticks not strictly increasing at row " +
                                         std::to_string(row));
    }
    out.push_back(s);
  }
  return out;
}

}  // namespace scenesim
