#pragma once

#include <array>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenesim/kinematics.hpp"
#include "scenesim/map_topology.hpp"
#include "scenesim/rng.hpp"

namespace scenesim {

enum class SpawnMode { kRouteBased, kTriggerBased, kMixed };

enum class BehaviorMode {
  kNormal,
  kLaneChange,
  kAggressiveOvertake,
  kEmergencyStop,
  kIgnoreSafeDistance,
};

const char* to_string(SpawnMode mode);
const char* to_string(BehaviorMode mode);
SpawnMode spawn_mode_from_string(const std::string& s);
BehaviorMode behavior_mode_from_string(const std::string& s);

inline bool is_dangerous(BehaviorMode m) { return m != BehaviorMode::kNormal; }

// Car-following constants (intelligent driver model).
struct IdmParams {
  double max_accel{2.0};
  double comfort_decel{3.0};
  double headway{1.5};   // s
  double min_gap{2.0};   // m
  double exponent{4.0};
};

// IDM acceleration. `gap` is bumper-to-bumper distance to the leader, absent
// on a free road.
double idm_accel(const IdmParams& p, double v, double desired_speed,
                 std::optional<double> gap, double leader_speed);

struct WorldConfig {
  int max_agents{0};
  SpawnMode spawn_mode{SpawnMode::kRouteBased};
  // Distribution over the four dangerous modes (LaneChange,
  // AggressiveOvertake, EmergencyStop, IgnoreSafeDistance); sums to 1.
  std::array<double, 4> behavior_mix{0.25, 0.25, 0.25, 0.25};
  double dangerous_fraction{0.0};
  std::uint64_t seed{0};
  double min_route_length{30.0};
  double spawn_exclusion_radius{10.0};
  long t_max{600};
  double spawn_spacing{10.0};
  double agent_route_length{120.0};

  void validate() const;
};

WorldConfig world_config_from_json(const nlohmann::json& j);
nlohmann::json to_json(const WorldConfig& c);

struct LateralBlend {
  double start_offset{0.0};  // m, signed lateral offset at initiation
  double elapsed{0.0};       // s
  static constexpr double kDuration = 3.0;

  double offset_at(double t) const;
  bool done() const { return elapsed >= kDuration; }
};

struct BehaviorState {
  BehaviorMode mode{BehaviorMode::kNormal};
  double target_speed{0.0};
  // Routes are immutable once assigned and shared between tick snapshots.
  std::shared_ptr<const Route> route_ptr;
  double route_progress{0.0};
  bool active{true};
  bool finished{false};  // reached the end of its route and left the scene
  std::optional<LateralBlend> lane_change;
  double lane_change_cooldown{0.0};  // s

  const Route& route() const;  // empty route when unset
  void set_route(Route r) { route_ptr = std::make_shared<const Route>(std::move(r)); }
};

struct AgentRecord {
  int id{0};
  VehicleState state;
  BehaviorState behavior;
  std::optional<double> trigger;  // ego-route arclength that activates the agent
  double initial_speed{0.0};      // applied on activation

  bool present() const { return behavior.active && !behavior.finished; }
};

// Everything one controller tick reads besides the agents themselves.
struct ControllerContext {
  const MapTopology* map{nullptr};
  std::optional<VehicleState> ego;  // absent in ego-free runs
  double ego_route_progress{0.0};
  long tick{0};
  double dt{0.1};
};

inline constexpr double kEmergencyStopRange = 20.0;  // m
inline constexpr double kIgnoreSafeDistanceGap = 0.5;  // m
inline constexpr double kSpeedLimitFactor = 1.3;

std::vector<AgentRecord> spawn_route_based(const MapTopology& map, const Route& ego_route,
                                           const WorldConfig& config, Rng& rng);
std::vector<AgentRecord> spawn_trigger_based(const MapTopology& map, const Route& ego_route,
                                             const WorldConfig& config, Rng& rng);
// Dispatches on config.spawn_mode and assigns behaviors; ids start at 0.
std::vector<AgentRecord> spawn_agents(const MapTopology& map, const Route& ego_route,
                                      const WorldConfig& config, Rng& rng);

// Agent at (lane, s) following first successors for `route_length` metres;
// starts at rest with the lane speed limit as target.
AgentRecord make_lane_agent(const MapTopology& map, const std::string& lane, double s,
                            double route_length);

// Draws a behavior mode and target speed for every agent, in order.
void assign_behaviors(std::vector<AgentRecord>& agents, const WorldConfig& config, Rng& rng);

// One 10 Hz tick over a tick-t snapshot. Every agent reads the same input
// states (including ego), so update order does not matter.
std::vector<AgentRecord> controller_step(const ControllerContext& ctx,
                                         const std::vector<AgentRecord>& agents);

// Acceleration the controller commands for one agent at this tick; exposed
// for rule-table tests.
double agent_accel(const ControllerContext& ctx, const std::vector<AgentRecord>& agents,
                   std::size_t index);

// Nearest vehicle ahead along a route corridor.
struct LeaderInfo {
  double gap{0.0};          // bumper-to-bumper, m
  double speed{0.0};        // along-route component, m/s
  bool is_ego{false};
};

struct CorridorVehicle {
  const VehicleState* state{nullptr};  // must outlive the find_leader call
  bool is_ego{false};
};

// Entries pointing at `self` are ignored.
std::optional<LeaderInfo> find_leader(const VehicleState& self, const Route& route,
                                      double progress,
                                      const std::vector<CorridorVehicle>& others,
                                      double lookahead = 80.0);

nlohmann::json to_json(const AgentRecord& a);

}  // namespace scenesim
