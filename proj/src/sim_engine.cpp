#include "scenesim/sim_engine.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <set>
#include <sstream>
#include <thread>

#include "scenesim/errors.hpp"
#include "scenesim/io.hpp"
#include "scenesim/rng.hpp"

namespace scenesim {

namespace fs = std::filesystem;
using nlohmann::json;

const char* to_string(SimMode m) { return m == SimMode::kSyn ? "SYN" : "CL"; }

const char* to_string(PlannerKind k) {
  switch (k) {
    case PlannerKind::kExpert: return "expert";
    case PlannerKind::kConstantVelocity: return "constant_velocity";
    case PlannerKind::kExternal: return "external";
  }
  return "expert";
}

namespace {

SimMode sim_mode_from_string(const std::string& s) {
  if (s == "SYN") return SimMode::kSyn;
  if (s == "CL") return SimMode::kCl;
  throw Error(ErrorCode::kConfig, "mode must be SYN or CL, got \"" + s + "\"");
}

PlannerKind planner_from_string(const std::string& s) {
  if (s == "expert") return PlannerKind::kExpert;
  if (s == "constant_velocity") return PlannerKind::kConstantVelocity;
  if (s == "external") return PlannerKind::kExternal;
  throw Error(ErrorCode::kConfig, "unknown planner \"" + s + "\"");
}

LaneCoord lane_coord_from_json(const json& j) {
  return {j.at("lane").get<std::string>(), j.at("s").get<double>()};
}

json ego_json(const VehicleState& s) {
  return {{"x", s.x}, {"y", s.y}, {"phi", s.heading}, {"v", s.v}};
}

fs::path resolve(const fs::path& base, const std::string& ref) {
  const fs::path p(ref);
  return p.is_absolute() ? p : base / p;
}

}  // namespace

void SimConfig::validate() const {
  if (name.empty() || name.find('/') != std::string::npos || name == "." || name == "..") {
    throw Error(ErrorCode::kConfig, "episode name must be a plain directory name, got \"" + name + "\"");
  }
  if (controller_hz <= 0 || render_hz <= 0 || controller_hz % render_hz != 0) {
    throw Error(ErrorCode::kConfig, "controller_hz must be a positive multiple of render_hz");
  }
  if (std::abs(ego.kinematics.dt * controller_hz - 1.0) > 1e-9) {
    throw Error(ErrorCode::kConfig, "kinematics dt must equal 1 / controller_hz");
  }
  if (stall_ticks <= 0) throw Error(ErrorCode::kConfig, "stall_ticks must be positive");
  if (map_path.empty()) throw Error(ErrorCode::kConfig, "map path is required");
  if (mode == SimMode::kSyn && planner != PlannerKind::kExpert) {
    throw Error(ErrorCode::kConfig, "SYN mode drives the ego with the expert planner");
  }
  if (mode == SimMode::kCl && planner == PlannerKind::kExpert) {
    throw Error(ErrorCode::kConfig, "CL mode needs a non-privileged planner");
  }
  if (ego.initial_speed < 0.0 || ego.target_speed <= 0.0) {
    throw Error(ErrorCode::kConfig, "ego speeds must be non-negative with a positive target");
  }
  if (!(render.resolution > 0.0) || !(render.extent > 0.0)) {
    throw Error(ErrorCode::kConfig, "render resolution and extent must be positive");
  }
  world.validate();
  validate_cameras(cameras);
}

SimConfig sim_config_from_json(const json& j, const fs::path& base_dir) {
  SimConfig c;
  try {
    if (!j.is_object()) throw Error(ErrorCode::kConfig, "episode config must be an object");
    c.name = j.value("name", c.name);
    c.mode = sim_mode_from_string(j.value("mode", std::string("SYN")));
    c.planner = c.mode == SimMode::kSyn ? PlannerKind::kExpert : PlannerKind::kConstantVelocity;
    if (j.contains("planner")) c.planner = planner_from_string(j.at("planner").get<std::string>());
    c.map_ref = j.at("map").get<std::string>();
    c.map_path = resolve(base_dir, c.map_ref);

    const json& e = j.at("ego");
    c.ego.start = lane_coord_from_json(e.at("start"));
    c.ego.goal = lane_coord_from_json(e.at("goal"));
    c.ego.initial_speed = e.value("initial_speed", c.ego.initial_speed);
    c.ego.target_speed = e.value("target_speed", c.ego.target_speed);
    c.controller_hz = j.value("controller_hz", c.controller_hz);
    c.render_hz = j.value("render_hz", c.render_hz);
    c.ego.kinematics.dt = 1.0 / c.controller_hz;
    if (e.contains("kinematics")) {
      const json& k = e.at("kinematics");
      c.ego.kinematics.u1 = k.value("u1", c.ego.kinematics.u1);
      c.ego.kinematics.u2 = k.value("u2", c.ego.kinematics.u2);
      c.ego.kinematics.dt = k.value("dt", c.ego.kinematics.dt);
    }
    c.ego.geometry.l_f = e.value("l_f", c.ego.geometry.l_f);
    c.ego.geometry.l_r = e.value("l_r", c.ego.geometry.l_r);
    c.ego.geometry.width = e.value("width", c.ego.geometry.width);
    c.ego.geometry.length = e.value("length", c.ego.geometry.length);

    if (j.contains("world")) c.world = world_config_from_json(j.at("world"));
    if (j.contains("seed")) c.world.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("cameras")) {
      for (const auto& cam : j.at("cameras")) c.cameras.push_back(camera_config_from_json(cam));
    } else {
      c.cameras.push_back(CameraConfig{"CAM_FRONT"});
    }
    c.stall_ticks = j.value("stall_ticks", c.stall_ticks);
    if (j.contains("agents")) {
      std::vector<ScriptedAgent> agents;
      for (const auto& a : j.at("agents")) {
        ScriptedAgent s;
        s.lane = a.at("lane").get<std::string>();
        s.s = a.value("s", 0.0);
        s.speed = a.value("speed", 0.0);
        s.behavior = behavior_mode_from_string(a.value("behavior", std::string("Normal")));
        if (a.contains("target_speed")) s.target_speed = a.at("target_speed").get<double>();
        s.route_length = a.value("route_length", s.route_length);
        agents.push_back(std::move(s));
      }
      c.scripted_agents = std::move(agents);
    }
    if (j.contains("render")) {
      const json& r = j.at("render");
      c.render.resolution = r.value("resolution", c.render.resolution);
      c.render.extent = r.value("extent", c.render.extent);
      c.render.visibility = r.value("visibility", c.render.visibility);
    }
    c.inline_raster = j.value("inline_raster", false);
    if (j.contains("ground_model")) {
      c.ground_model_ref = j.at("ground_model").get<std::string>();
      c.ground_model_path = resolve(base_dir, c.ground_model_ref);
    }
  } catch (const json::exception& ex) {
    throw Error(ErrorCode::kConfig, std::string("episode config: ") + ex.what());
  } catch (const Error& ex) {
    if (ex.code() == ErrorCode::kConfig) throw;
    throw Error(ErrorCode::kConfig, ex.what());
  }
  c.validate();
  return c;
}

json to_json(const SimConfig& c) {
  json cams = json::array();
  for (const auto& cam : c.cameras) cams.push_back(to_json(cam));
  json j = {
      {"name", c.name},
      {"mode", to_string(c.mode)},
      {"planner", to_string(c.planner)},
      {"map", c.map_ref},
      {"seed", c.world.seed},
      {"ego",
       {{"start", {{"lane", c.ego.start.lane}, {"s", c.ego.start.s}}},
        {"goal", {{"lane", c.ego.goal.lane}, {"s", c.ego.goal.s}}},
        {"initial_speed", c.ego.initial_speed},
        {"target_speed", c.ego.target_speed},
        {"kinematics", {{"u1", c.ego.kinematics.u1}, {"u2", c.ego.kinematics.u2}, {"dt", c.ego.kinematics.dt}}},
        {"l_f", c.ego.geometry.l_f},
        {"l_r", c.ego.geometry.l_r},
        {"width", c.ego.geometry.width},
        {"length", c.ego.geometry.length}}},
      {"world", to_json(c.world)},
      {"cameras", cams},
      {"controller_hz", c.controller_hz},
      {"render_hz", c.render_hz},
      {"stall_ticks", c.stall_ticks},
      {"render", {{"resolution", c.render.resolution}, {"extent", c.render.extent}, {"visibility", c.render.visibility}}},
      {"inline_raster", c.inline_raster}};
  if (c.scripted_agents) {
    json agents = json::array();
    for (const auto& a : *c.scripted_agents) {
      json aj = {{"lane", a.lane}, {"s", a.s}, {"speed", a.speed}, {"behavior", to_string(a.behavior)},
                 {"route_length", a.route_length}};
      if (a.target_speed) aj["target_speed"] = *a.target_speed;
      agents.push_back(aj);
    }
    j["agents"] = agents;
  }
  if (c.ground_model_path) j["ground_model"] = c.ground_model_ref;
  return j;
}

std::vector<SimConfig> load_configs(const fs::path& path) {
  json doc;
  try {
    doc = json::parse(io::read_file(path));
  } catch (const json::parse_error& e) {
    throw Error(ErrorCode::kConfig, path.string() + ": " + e.what());
  }
  const fs::path base = path.parent_path();
  std::vector<SimConfig> out;
  if (doc.is_object() && doc.contains("episodes")) {
    if (!doc["episodes"].is_array()) throw Error(ErrorCode::kConfig, "\"episodes\" must be an array");
    for (const auto& e : doc["episodes"]) out.push_back(sim_config_from_json(e, base));
  } else {
    out.push_back(sim_config_from_json(doc, base));
  }
  return out;
}

MetricsReport DrivingLog::metrics() const {
  MetricsReport r = compute_rates({result});
  r.interaction_rate = interaction_rate({interactions});
  r.speed_alteration_histogram = speed_alteration_histogram;
  return r;
}

namespace {

std::vector<AgentRecord> initial_agents(const SimConfig& cfg, const MapTopology& map, const Route& route,
                                        Rng& rng) {
  if (!cfg.scripted_agents) {
    if (cfg.world.max_agents == 0) return {};
    return spawn_agents(map, route, cfg.world, rng);
  }
  std::vector<AgentRecord> agents;
  for (const auto& s : *cfg.scripted_agents) {
    AgentRecord a = make_lane_agent(map, s.lane, s.s, s.route_length);
    a.id = static_cast<int>(agents.size());
    a.behavior.mode = s.behavior;
    if (s.target_speed) a.behavior.target_speed = *s.target_speed;
    a.initial_speed = s.speed;
    a.state.v = s.speed;
    agents.push_back(std::move(a));
  }
  return agents;
}

bool any_vehicle_collision(const VehicleState& ego, const std::vector<AgentRecord>& agents) {
  for (const auto& a : agents) {
    if (a.present() && obb_collision(ego, a.state)) return true;
  }
  return false;
}

bool leader_nearby(const VehicleState& ego, const Route& route, double progress,
                   const std::vector<AgentRecord>& agents) {
  std::vector<CorridorVehicle> others;
  for (const auto& a : agents) {
    if (a.present()) others.push_back({&a.state, false});
  }
  const auto leader = find_leader(ego, route, progress, others, kStallLeaderRange + ego.length);
  return leader && leader->gap <= kStallLeaderRange;
}

}  // namespace

DrivingLog run_episode(const SimConfig& cfg, Planner* planner) {
  cfg.validate();
  DrivingLog log;
  log.config = cfg;
  const MapTopology map = load_map(cfg.map_path);
  std::optional<GroundModel> ground;
  if (cfg.ground_model_path) {
    try {
      ground = GroundModel::from_json(json::parse(io::read_file(*cfg.ground_model_path)));
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kConfig, "ground model: " + std::string(e.what()));
    }
  }
  const Route route = plan_route(cfg.ego.start, cfg.ego.goal, map);
  log.reference = route;

  std::unique_ptr<Planner> owned;
  if (!planner) {
    switch (cfg.planner) {
      case PlannerKind::kExpert: {
        ExpertConfig ec;
        ec.cruise_speed = cfg.ego.target_speed;
        owned = std::make_unique<ExpertPlanner>(ec);
        break;
      }
      case PlannerKind::kConstantVelocity:
        owned = std::make_unique<ConstantVelocityPlanner>();
        break;
      case PlannerKind::kExternal:
        throw Error(ErrorCode::kConfig, "external planner requested but no planner connection supplied");
    }
    planner = owned.get();
  }
  planner->reset(route);

  VehicleState ego = cfg.ego.geometry;
  {
    const Lane& lane = map.lane(cfg.ego.start.lane);
    const Vec2 p = lane.centerline.point_at(cfg.ego.start.s);
    ego.x = p.x;
    ego.y = p.y;
    ego.heading = wrap_angle(lane.centerline.heading_at(cfg.ego.start.s));
    ego.v = cfg.ego.initial_speed;
  }
  Rng rng(cfg.world.seed);
  std::vector<AgentRecord> agents = initial_agents(cfg, map, route, rng);

  const long every = cfg.render_every();
  const double dt = cfg.ego.kinematics.dt;
  double progress = route.path.project(ego.position(), 0.0, std::min(route.length(), 5.0)).s;
  bool cur_vc = any_vehicle_collision(ego, agents);
  bool cur_lc = layout_collision(ego, map);
  ControlAction held{};
  std::map<long, std::array<Vec2, 6>> planned;
  long stalled_for = 0;
  std::string status;

  for (long t = 0; t < cfg.world.t_max; ++t) {
    if (distance(ego.position(), route.goal()) <= kArrivalRadius) {
      status = "completed";
      break;
    }
    TickRecord rec;
    rec.tick = t;
    rec.ego = ego;
    rec.progress = progress;
    rec.command = derive_command(route, progress);
    rec.agents = agents;
    rec.vehicle_collision = cur_vc;
    rec.layout_collision = cur_lc;
    for (const auto& a : agents) {
      if (!a.present()) continue;
      const InteractionRecord ir = interaction_indicator(ego, route, progress, a, cfg.ego.target_speed);
      rec.interaction = rec.interaction || ir.interaction;
      log.interactions.push_back(ir);
    }

    std::shared_ptr<const ObservationFrame> frame;
    if (t % every == 0) {
      frame = std::make_shared<const ObservationFrame>(
          render_frame(t, ego, agents, map, cfg.cameras, ground ? &*ground : nullptr, cfg.render));
      log.frames.push_back(*frame);
    }

    ControllerContext ctx;
    ctx.map = &map;
    ctx.ego = ego;
    ctx.ego_route_progress = progress;
    ctx.tick = t;
    ctx.dt = dt;
    std::vector<AgentRecord> next_agents = controller_step(ctx, agents);

    ControlAction action;
    try {
      PlannerInput in;
      in.tick = t;
      in.ego = ego;
      in.command = rec.command;
      in.route_progress = progress;
      if (planner->privileged()) {
        // The expert sees the agents' updated states for this tick.
        in.privileged = PrivilegedView{&next_agents, &map};
        action = planner->plan(in);
      } else {
        if (frame) {
          in.observation = frame;
          held = planner->plan(in);
          if (auto traj = planner->last_trajectory()) planned[t] = *traj;
        }
        action = held;
      }
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kOffRoute && e.code() != ErrorCode::kPlannerDisconnect &&
          e.code() != ErrorCode::kProtocol) {
        throw;
      }
      log.error = std::string(to_string(e.code())) + ": " + e.what();
      log.result.aborted = true;
      status = "aborted";
      log.states.push_back(std::move(rec));
      break;
    }
    rec.action = action.clamped();
    const VehicleState ego_next = akm_step(ego, action, cfg.ego.kinematics);
    progress = track_progress(route, ego_next.position(), progress);
    cur_vc = any_vehicle_collision(ego_next, next_agents);
    cur_lc = layout_collision(ego_next, map);
    log.result.vehicle_collision.push_back(cur_vc);
    log.result.layout_collision.push_back(cur_lc);
    log.states.push_back(std::move(rec));
    ego = ego_next;
    agents = std::move(next_agents);

    if (cur_vc) {
      status = "collision";
      break;
    }
    if (ego.v < kStallSpeed && !leader_nearby(ego, route, progress, agents)) {
      if (++stalled_for >= cfg.stall_ticks) {
        status = "stalled";
        break;
      }
    } else {
      stalled_for = 0;
    }
  }

  log.result.ticks = static_cast<long>(log.result.vehicle_collision.size());
  if (status != "aborted") {
    TickRecord last;
    last.tick = log.result.ticks;
    last.ego = ego;
    last.progress = progress;
    last.command = derive_command(route, progress);
    last.agents = agents;
    last.vehicle_collision = cur_vc;
    last.layout_collision = cur_lc;
    log.states.push_back(std::move(last));
  }
  if (status.empty()) {
    status = distance(ego.position(), route.goal()) <= kArrivalRadius ? "completed" : "timeout";
  }
  log.status = status;
  log.result.completed = status == "completed";
  log.result.timed_out = status == "timeout" || status == "stalled";

  // Speed alteration: planner-reported trajectories where available,
  // otherwise the realised ego motion at render spacing.
  for (const auto& frame : log.frames) {
    PlannedTrajectory traj;
    if (auto it = planned.find(frame.tick); it != planned.end()) {
      traj.offsets = it->second;
    } else {
      if (frame.tick + 6 * every >= static_cast<long>(log.states.size())) continue;
      for (long k = 0; k < 6; ++k) {
        traj.offsets[static_cast<std::size_t>(k)] =
            log.states[static_cast<std::size_t>(frame.tick + (k + 1) * every)].ego.position() -
            log.states[static_cast<std::size_t>(frame.tick + k * every)].ego.position();
      }
    }
    ++log.speed_alteration_histogram[static_cast<std::size_t>(ego_speed_alteration(traj))];
  }
  return log;
}

json state_line(const TickRecord& r) {
  json agents = json::array();
  for (const auto& a : r.agents) agents.push_back(to_json(a));
  json j = {{"tick", r.tick},
            {"ego", ego_json(r.ego)},
            {"progress", r.progress},
            {"command", to_string(r.command)},
            {"vehicle_collision", r.vehicle_collision},
            {"layout_collision", r.layout_collision},
            {"interaction", r.interaction},
            {"agents", agents}};
  if (r.action) j["action"] = {{"a", r.action->accel}, {"delta", r.action->steer}};
  return j;
}

json episode_metrics_json(const DrivingLog& log) {
  json j = {{"name", log.config.name},
            {"status", log.status},
            {"ticks", log.result.ticks},
            {"frames", log.frames.size()},
            {"episode", to_json(log.result)},
            {"interaction", log.metrics().interaction_rate > 0.0},
            {"report", to_json(log.metrics())}};
  if (log.error) j["error"] = *log.error;
  return j;
}

void write_log(const DrivingLog& log, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir / "frames", ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + dir.string() + ": " + ec.message());
  std::string states;
  for (const auto& r : log.states) states += state_line(r).dump() + "\n";
  io::write_file(dir / "states.jsonl", states);
  for (const auto& f : log.frames) write_frame(f, dir / "frames", frame_stem(f.tick));
  io::write_file(dir / "config.json", to_json(log.config).dump(2) + "\n");
  io::write_file(dir / "metrics.json", episode_metrics_json(log).dump(2) + "\n");
}

std::string log_hash(const fs::path& dir) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files.push_back(fs::relative(e.path(), dir));
  }
  std::sort(files.begin(), files.end());
  std::string digest;
  for (const auto& f : files) {
    digest += f.generic_string() + '\0' + io::sha256_hex(io::read_file(dir / f)) + '\n';
  }
  return io::sha256_hex(digest);
}

std::size_t Manifest::failures() const {
  return static_cast<std::size_t>(
      std::count_if(entries.begin(), entries.end(), [](const ManifestEntry& e) { return e.status == "failed"; }));
}

std::string config_hash(const SimConfig& c) { return io::sha256_hex(to_json(c).dump()); }

namespace {

json entry_json(const ManifestEntry& e, bool with_wall_clock) {
  json j = {{"name", e.name},     {"config_hash", e.config_hash}, {"seed", e.seed},
            {"status", e.status}, {"ticks", e.ticks},             {"frames", e.frames},
            {"log_hash", e.log_hash}};
  if (e.error) j["error"] = *e.error;
  if (with_wall_clock) j["wall_seconds"] = e.wall_seconds;
  return j;
}

}  // namespace

std::string manifest_hash(const std::vector<ManifestEntry>& entries) {
  json arr = json::array();
  for (const auto& e : entries) arr.push_back(entry_json(e, false));
  return io::sha256_hex(arr.dump());
}

json to_json(const Manifest& m) {
  json arr = json::array();
  for (const auto& e : m.entries) arr.push_back(entry_json(e, true));
  return {{"entries", arr}, {"failures", m.failures()}, {"manifest_hash", m.hash}};
}

Manifest generate_dataset(const std::vector<SimConfig>& configs, const fs::path& out_dir, int workers) {
  std::set<std::string> names;
  for (const auto& c : configs) {
    if (!names.insert(c.name).second) throw Error(ErrorCode::kConfig, "duplicate episode name " + c.name);
  }
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCode::kIo, "cannot create " + out_dir.string() + ": " + ec.message());

  Manifest m;
  m.entries.resize(configs.size());
  auto run_one = [&](std::size_t i) {
    const SimConfig& c = configs[i];
    ManifestEntry& e = m.entries[i];
    e.name = c.name;
    e.config_hash = config_hash(c);
    e.seed = c.world.seed;
    const auto start = std::chrono::steady_clock::now();
    const fs::path dir = out_dir / c.name;
    try {
      fs::remove_all(dir);
      const DrivingLog log = run_episode(c);
      write_log(log, dir);
      e.status = log.status;
      e.error = log.error;
      e.ticks = log.result.ticks;
      e.frames = log.frames.size();
      e.log_hash = log_hash(dir);
    } catch (const std::exception& ex) {
      e.status = "failed";
      if (const auto* err = dynamic_cast<const Error*>(&ex)) {
        e.error = std::string(to_string(err->code())) + ": " + ex.what();
      } else {
        e.error = ex.what();
      }
    }
    e.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  };

  const std::size_t n_workers = static_cast<std::size_t>(std::max(1, workers));
  if (n_workers == 1 || configs.size() < 2) {
    for (std::size_t i = 0; i < configs.size(); ++i) run_one(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < std::min(n_workers, configs.size()); ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < configs.size(); i = next++) run_one(i);
      });
    }
    for (auto& t : pool) t.join();
  }
  m.hash = manifest_hash(m.entries);
  io::write_file(out_dir / "manifest.json", to_json(m).dump(2) + "\n");
  return m;
}

MetricsReport metrics_from_logs(const fs::path& root) {
  std::vector<fs::path> dirs;
  if (!fs::is_directory(root)) throw Error(ErrorCode::kIo, root.string() + " is not a directory");
  for (const auto& e : fs::directory_iterator(root)) {
    if (e.is_directory() && fs::exists(e.path() / "metrics.json")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  std::vector<EpisodeResult> episodes;
  std::vector<std::vector<InteractionRecord>> scenes;
  std::array<long, 5> histogram{};
  for (const auto& d : dirs) {
    json j;
    try {
      j = json::parse(io::read_file(d / "metrics.json"));
      episodes.push_back(episode_result_from_json(j.at("episode")));
      const bool inter = j.value("interaction", false);
      scenes.push_back({InteractionRecord{inter, inter, inter}});
      if (j.contains("report") && j["report"].contains("speed_alteration_histogram")) {
        const auto h = j["report"]["speed_alteration_histogram"].get<std::array<long, 5>>();
        for (std::size_t k = 0; k < 5; ++k) histogram[k] += h[k];
      }
    } catch (const json::exception& e) {
      throw Error(ErrorCode::kParse, (d / "metrics.json").string() + ": " + e.what());
    }
  }
  if (episodes.empty()) throw Error(ErrorCode::kEmptyInput, "no episode logs under " + root.string());
  MetricsReport r = compute_rates(episodes);
  r.interaction_rate = interaction_rate(scenes);
  r.speed_alteration_histogram = histogram;
  return r;
}

}  // namespace scenesim
