#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenesim/bev_renderer.hpp"
#include "scenesim/ground_model.hpp"
#include "scenesim/kinematics.hpp"
#include "scenesim/map_topology.hpp"
#include "scenesim/metrics.hpp"
#include "scenesim/planners.hpp"
#include "scenesim/scene_controller.hpp"

namespace scenesim {

enum class SimMode { kSyn, kCl };
enum class PlannerKind { kExpert, kConstantVelocity, kExternal };

const char* to_string(SimMode m);
const char* to_string(PlannerKind k);

struct EgoSpec {
  LaneCoord start;
  LaneCoord goal;
  double initial_speed{0.0};
  double target_speed{10.0};  // cruise speed; also v_max for interaction ranges
  KinematicParams kinematics{};
  VehicleState geometry{};  // only l_f, l_r, width, length are read
};

// Fixed agent placed instead of spawning.
struct ScriptedAgent {
  std::string lane;
  double s{0.0};
  double speed{0.0};
  BehaviorMode behavior{BehaviorMode::kNormal};
  std::optional<double> target_speed;  // defaults to the lane limit
  double route_length{120.0};
};

struct SimConfig {
  std::string name{"episode"};
  SimMode mode{SimMode::kSyn};
  std::filesystem::path map_path;  // resolved against the config file directory
  std::string map_ref;             // as written in the config
  EgoSpec ego;
  WorldConfig world;
  std::vector<CameraConfig> cameras;
  int controller_hz{10};
  int render_hz{2};
  long stall_ticks{150};
  PlannerKind planner{PlannerKind::kExpert};
  std::optional<std::vector<ScriptedAgent>> scripted_agents;
  RenderSettings render;
  bool inline_raster{false};
  std::optional<std::filesystem::path> ground_model_path;
  std::string ground_model_ref;

  int render_every() const { return controller_hz / render_hz; }
  void validate() const;
};

inline constexpr double kArrivalRadius = 3.0;     // m
inline constexpr double kStallSpeed = 0.1;        // m/s
inline constexpr double kStallLeaderRange = 10.0;  // m

// `base_dir` resolves relative map and ground-model paths.
SimConfig sim_config_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir);
nlohmann::json to_json(const SimConfig& c);
// A single config object or {"episodes": [...]}.
std::vector<SimConfig> load_configs(const std::filesystem::path& path);

struct TickRecord {
  long tick{0};
  VehicleState ego;
  double progress{0.0};
  RouteCommand command{RouteCommand::kStraight};
  std::optional<ControlAction> action;  // absent on the final state
  std::vector<AgentRecord> agents;
  bool vehicle_collision{false};
  bool layout_collision{false};
  bool interaction{false};
};

struct DrivingLog {
  SimConfig config;
  Route reference;
  std::vector<TickRecord> states;  // ticks 0..T
  std::vector<ObservationFrame> frames;
  EpisodeResult result;
  std::vector<InteractionRecord> interactions;
  std::array<long, 5> speed_alteration_histogram{};
  std::string status;  // completed | collision | timeout | stalled | aborted
  std::optional<std::string> error;

  long ticks() const { return result.ticks; }
  MetricsReport metrics() const;
};

// Runs one episode. `planner` overrides the configured planner kind (needed
// for external planners). Mid-episode planner failures end the episode with
// status "aborted"; configuration problems throw.
DrivingLog run_episode(const SimConfig& config, Planner* planner = nullptr);

// Episode directory: states.jsonl, frames/, config.json, metrics.json.
void write_log(const DrivingLog& log, const std::filesystem::path& dir);
// SHA-256 over the episode files in a fixed order.
std::string log_hash(const std::filesystem::path& dir);

nlohmann::json state_line(const TickRecord& r);
nlohmann::json episode_metrics_json(const DrivingLog& log);

struct ManifestEntry {
  std::string name;
  std::string config_hash;
  std::uint64_t seed{0};
  std::string status;  // per-log outcome, or "failed"
  std::optional<std::string> error;
  long ticks{0};
  std::size_t frames{0};
  std::string log_hash;
  double wall_seconds{0.0};  // excluded from the manifest hash
};

struct Manifest {
  std::vector<ManifestEntry> entries;
  std::string hash;
  std::size_t failures() const;
};

std::string config_hash(const SimConfig& c);
nlohmann::json to_json(const Manifest& m);
std::string manifest_hash(const std::vector<ManifestEntry>& entries);

// Runs every config into out_dir/<name>/ and writes out_dir/manifest.json.
// Failing configs are recorded and the batch continues.
Manifest generate_dataset(const std::vector<SimConfig>& configs, const std::filesystem::path& out_dir,
                          int workers = 1);

// Aggregates metrics.json files under a log root (one subdirectory per episode).
MetricsReport metrics_from_logs(const std::filesystem::path& root);

}  // namespace scenesim
