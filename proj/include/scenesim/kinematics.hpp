#pragma once

#include <optional>
#include <string>
#include <vector>

#include "scenesim/geometry.hpp"

namespace scenesim {

struct VehicleState {
  double x{0.0};
  double y{0.0};
  double heading{0.0};  // (-pi, pi]
  double v{0.0};        // m/s, never negative
  double l_f{1.4};
  double l_r{1.4};
  double width{2.0};
  double length{4.8};

  Vec2 position() const { return {x, y}; }
  OrientedBox footprint() const { return {{x, y}, heading, length, width}; }
  bool operator==(const VehicleState&) const = default;
};

struct ControlAction {
  static constexpr double kMaxSteer = 0.6;  // rad
  static constexpr double kMaxAccel = 8.0;  // m/s^2

  double accel{0.0};
  double steer{0.0};

  ControlAction clamped() const;
  bool operator==(const ControlAction&) const = default;
};

// Adaptive kinematic model parameters. u1 blends pre/post-update speed for the
// displacement, u2 weights the slip angle in the displacement direction.
// (u1, u2) = (0, 1) is the plain kinematic bicycle model.
struct KinematicParams {
  double dt{0.1};
  double u1{0.0};
  double u2{1.0};
};

struct ImuSample {
  long tick{0};
  double x{0.0};
  double y{0.0};
  double heading{0.0};
  double v{0.0};
};

inline constexpr double kSlipSpeedFloor = 0.5;  // m/s

double slip_angle(double steer, double l_f, double l_r);

VehicleState akm_step(const VehicleState& state, const ControlAction& action,
                      const KinematicParams& params);
VehicleState bicycle_step(const VehicleState& state, const ControlAction& action,
                          double dt);

// Steering that makes the model's heading rate match `curvature` at the
// current speed (inverts the l_f heading update and the slip relation).
double steer_for_curvature(double curvature, double l_f, double l_r);

// Pure-pursuit steering toward a world-frame target point.
double pursuit_steer(const VehicleState& state, Vec2 target);

// Recovers the slip angle from two consecutive headings. Empty below the
// speed floor, where the slip angle is not identifiable.
std::optional<double> invert_slip(double heading_t, double heading_next, double v_t,
                                  double l_f, double dt);

struct AkmEstimate {
  KinematicParams params;
  double objective{0.0};       // summed squared position residual
  std::size_t usable_pairs{0};
};

class AkmObjective {
 public:
  AkmObjective(const std::vector<std::vector<ImuSample>>& logs, double l_f, double dt);
  double operator()(double u1, double u2) const;
  std::size_t size() const { return pairs_.size(); }

 private:
  struct Pair {
    double x, y, heading, v, v_next, slip, x_next, y_next;
  };
  std::vector<Pair> pairs_;
  double dt_;
};

// Grid search over u1 in [0,1], u2 in [0,2] followed by coordinate descent.
// Throws Error(kInsufficientData) below 100 usable frame pairs.
AkmEstimate estimate_akm_params(const std::vector<std::vector<ImuSample>>& logs,
                                double l_f, double l_r, double dt);

// IMU CSV: header `tick,x,y,phi,v`.
std::vector<ImuSample> read_imu_csv(const std::string& path);

}  // namespace scenesim
