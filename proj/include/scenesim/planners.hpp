#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "scenesim/bev_renderer.hpp"
#include "scenesim/kinematics.hpp"
#include "scenesim/map_topology.hpp"
#include "scenesim/scene_controller.hpp"

namespace scenesim {

enum class RouteCommand { kStraight, kLeft, kRight };

const char* to_string(RouteCommand c);
RouteCommand route_command_from_string(const std::string& s);

inline constexpr double kCommandWindow = 20.0;  // m
inline constexpr double kOffRouteLimit = 5.0;   // m

// Road option of the reference route within the next kCommandWindow metres.
RouteCommand derive_command(const Route& reference, double progress);

struct PrivilegedView {
  const std::vector<AgentRecord>* agents{nullptr};
  const MapTopology* map{nullptr};
};

// Exactly one of `privileged` / `observation` is set.
struct PlannerInput {
  long tick{0};
  VehicleState ego;
  RouteCommand command{RouteCommand::kStraight};
  double route_progress{0.0};  // ego arclength along the reference route
  std::optional<PrivilegedView> privileged;
  std::shared_ptr<const ObservationFrame> observation;

  void validate() const;
};

struct ExpertConfig {
  double cruise_speed{10.0};   // m/s
  double lateral_accel{2.0};   // m/s^2, curve speed limit
  double braking{2.0};         // m/s^2, speed profile lookahead deceleration
  double profile_horizon{60.0};  // m
  IdmParams idm{};
};

// Reference speed at route arclength s: cruise speed capped by the lane limit
// and curve limit, lowered so later caps are reachable at `braking`.
double reference_speed(const Route& reference, double s, const ExpertConfig& cfg);

// Pure pursuit on the reference plus IDM against the nearest agent in the
// ego corridor. Throws Error(kOffRoute) beyond kOffRouteLimit.
ControlAction expert_plan(const PlannerInput& input, const Route& reference,
                          const ExpertConfig& cfg = {});

// Windowed monotone progress update along a route.
double track_progress(const Route& route, Vec2 position, double previous);

class Planner {
 public:
  virtual ~Planner() = default;
  virtual bool privileged() const = 0;
  virtual void reset(const Route& reference) = 0;
  virtual ControlAction plan(const PlannerInput& input) = 0;
  // Six planned per-step displacements, when the planner reports them.
  virtual std::optional<std::array<Vec2, 6>> last_trajectory() const { return std::nullopt; }
};

class ExpertPlanner : public Planner {
 public:
  explicit ExpertPlanner(ExpertConfig cfg = {}) : cfg_(cfg) {}
  bool privileged() const override { return true; }
  void reset(const Route& reference) override { reference_ = reference; }
  ControlAction plan(const PlannerInput& input) override {
    return expert_plan(input, reference_, cfg_);
  }

 private:
  ExpertConfig cfg_;
  Route reference_;
};

// Holds speed and heading: a = 0, steer = 0.
class ConstantVelocityPlanner : public Planner {
 public:
  bool privileged() const override { return false; }
  void reset(const Route&) override {}
  ControlAction plan(const PlannerInput& input) override {
    input.validate();
    return {};
  }
};

}  // namespace scenesim
