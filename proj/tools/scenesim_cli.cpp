// scenesim command line: dataset generation, closed-loop evaluation,
// calibration and metric reports. Results go to stdout as JSON; failures go
// to stderr as {"error": ..., "message": ...} with a category exit code.
#include <glob.h>

#include <algorithm>
#include <chrono>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scenesim/errors.hpp"
#include "scenesim/ground_model.hpp"
#include "scenesim/illumination.hpp"
#include "scenesim/io.hpp"
#include "scenesim/kinematics.hpp"
#include "scenesim/protocol.hpp"
#include "scenesim/rng.hpp"
#include "scenesim/sim_engine.hpp"

namespace {

using nlohmann::json;
using namespace scenesim;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitProtocol = 4;

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kConfig:
    case ErrorCode::kParse:
    case ErrorCode::kValidation:
      return kExitConfig;
    case ErrorCode::kProtocol:
    case ErrorCode::kPlannerDisconnect:
      return kExitProtocol;
    default:
      return kExitRuntime;
  }
}

int report_error(const std::string& kind, const std::string& message, int code) {
  std::cerr << json{{"error", kind}, {"message", message}}.dump() << "\n";
  return code;
}

std::vector<std::string> expand_glob(const std::string& pattern) {
  glob_t g{};
  std::vector<std::string> out;
  if (::glob(pattern.c_str(), 0, nullptr, &g) == 0) {
    for (std::size_t i = 0; i < g.gl_pathc; ++i) out.emplace_back(g.gl_pathv[i]);
  }
  globfree(&g);
  std::sort(out.begin(), out.end());
  if (out.empty()) throw Error(ErrorCode::kIo, "no files match " + pattern);
  return out;
}

std::vector<SimConfig> configs_with_seed(const std::string& path, std::optional<std::uint64_t> seed) {
  auto configs = load_configs(path);
  if (seed) {
    for (auto& c : configs) c.world.seed = *seed;
  }
  return configs;
}

int cmd_generate(const std::string& config, const std::string& out, int workers,
                 std::optional<std::uint64_t> seed) {
  const Manifest m = generate_dataset(configs_with_seed(config, seed), out, workers);
  json summary = {{"manifest_hash", m.hash}, {"episodes", m.entries.size()}, {"failures", m.failures()}};
  std::cout << summary.dump() << "\n";
  if (m.failures() > 0) {
    return report_error("EpisodeFailed", std::to_string(m.failures()) + " episode(s) failed; see manifest.json",
                        kExitRuntime);
  }
  return kExitOk;
}

int cmd_evaluate(const std::string& config, const std::string& listen, const std::string& out,
                 double accept_timeout, std::optional<std::uint64_t> seed) {
  const auto configs = configs_with_seed(config, seed);
  std::unique_ptr<protocol::Listener> listener;
  json episodes = json::array();
  std::vector<EpisodeResult> results;
  int exit_code = kExitOk;
  for (const auto& cfg : configs) {
    const std::filesystem::path dir = std::filesystem::path(out) / cfg.name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir / "frames");
    DrivingLog log;
    if (cfg.planner == PlannerKind::kExternal) {
      if (!listener) {
        listener = std::make_unique<protocol::Listener>(protocol::parse_endpoint(listen));
        std::cerr << json{{"listening", listener->port()}}.dump() << "\n";
      }
      auto session = protocol::Session::open(
          *listener, std::chrono::milliseconds(static_cast<long>(accept_timeout * 1000.0)));
      const MapTopology map = load_map(cfg.map_path);
      json cams = json::array();
      for (const auto& c : cfg.cameras) cams.push_back(to_json(c));
      session->reset(cfg.name, {{"map", {{"ref", cfg.map_ref},
                                         {"lanes", map.lanes().size()},
                                         {"junctions", map.junctions().size()},
                                         {"bounds", {{map.bounds_min().x, map.bounds_min().y},
                                                     {map.bounds_max().x, map.bounds_max().y}}}}},
                                {"cameras", cams},
                                {"inline_raster", cfg.inline_raster},
                                {"controller_hz", cfg.controller_hz},
                                {"render_hz", cfg.render_hz}});
      protocol::ExternalPlanner planner(*session, cfg.inline_raster, dir / "frames");
      log = run_episode(cfg, &planner);
      session->bye({{"status", log.status}, {"ticks", log.result.ticks}, {"report", to_json(log.metrics())}});
    } else {
      log = run_episode(cfg);
    }
    write_log(log, dir);
    results.push_back(log.result);
    json e = {{"name", cfg.name}, {"status", log.status}, {"ticks", log.result.ticks}};
    if (log.error) {
      e["error"] = *log.error;
      exit_code = kExitProtocol;
    }
    episodes.push_back(e);
  }
  std::cout << json{{"episodes", episodes}, {"report", to_json(compute_rates(results))}}.dump() << "\n";
  return exit_code;
}

int cmd_estimate_akm(const std::string& pattern, double lf, double lr, double dt) {
  std::vector<std::vector<ImuSample>> logs;
  for (const auto& f : expand_glob(pattern)) logs.push_back(read_imu_csv(f));
  const AkmEstimate est = estimate_akm_params(logs, lf, lr, dt);
  std::cout << json{{"u1", est.params.u1},
                    {"u2", est.params.u2},
                    {"residual", est.objective},
                    {"pairs", est.usable_pairs}}
                   .dump()
            << "\n";
  return kExitOk;
}

int cmd_fit_ground(const std::string& pattern, const std::string& out, int epochs, std::uint64_t seed) {
  std::vector<PointCloud> clouds;
  for (const auto& f : expand_glob(pattern)) {
    for (auto& c : read_point_clouds_csv(f)) clouds.push_back(std::move(c));
  }
  GroundFitOptions opts;
  opts.epochs = epochs;
  Rng rng(seed);
  const GroundFitResult fit = fit_ground(clouds, GroundModel(seed), opts, rng);
  io::write_file(out, fit.model.to_json().dump(2) + "\n");
  std::cout << json{{"frames_used", fit.frames_used},
                    {"inliers", fit.inliers},
                    {"final_loss", fit.epoch_loss.empty() ? 0.0 : fit.epoch_loss.back()},
                    {"model", out}}
                   .dump()
            << "\n";
  return kExitOk;
}

int cmd_estimate_light(const std::string& image, double sigma) {
  const LightEstimate est = estimate_light(load_image_pgm(image), sigma);
  std::cout << json{{"l", est.direction},
                    {"azimuth", est.azimuth},
                    {"peak", {est.peak_row, est.peak_col}}}
                   .dump()
            << "\n";
  return kExitOk;
}

int cmd_metrics(const std::string& logs) {
  std::cout << to_json(metrics_from_logs(logs)).dump() << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scenesim: closed-loop driving scenario simulator"};
  app.require_subcommand(1);
  std::optional<std::uint64_t> seed;
  app.add_option("--seed", seed, "Override the seed of every episode");

  std::string config, out, listen, pattern, image, logs;
  int workers = 1;
  double accept_timeout = 60.0;
  double lf = 1.4, lr = 1.4, dt = 0.1;
  int epochs = GroundFitOptions{}.epochs;
  double sigma = kDefaultBlurSigma;

  auto* gen = app.add_subcommand("generate", "Run SYN episodes and write driving logs");
  gen->add_option("--config", config, "Episode or batch config")->required();
  gen->add_option("--out", out, "Output directory")->required();
  gen->add_option("--workers", workers, "Parallel episodes")->check(CLI::PositiveNumber);

  auto* eval = app.add_subcommand("evaluate", "Serve closed-loop episodes to an external planner");
  eval->add_option("--config", config, "Episode or batch config")->required();
  eval->add_option("--listen", listen, "host:port (default from SCENESIM_PLANNER_HOST/PORT, else 127.0.0.1:7788)");
  eval->add_option("--out", out, "Output directory")->required();
  eval->add_option("--accept-timeout", accept_timeout, "Seconds to wait for a planner connection");

  auto* akm = app.add_subcommand("estimate-akm", "Estimate u1, u2 from IMU logs");
  akm->add_option("--imu", pattern, "Glob of IMU CSV files")->required();
  akm->add_option("--lf", lf, "Front axle distance, m");
  akm->add_option("--lr", lr, "Rear axle distance, m");
  akm->add_option("--dt", dt, "Frame interval, s");

  auto* ground = app.add_subcommand("fit-ground", "Fit the ground height model from point clouds");
  ground->add_option("--clouds", pattern, "Glob of point-cloud CSV files")->required();
  ground->add_option("--out", out, "Model JSON path")->required();
  ground->add_option("--epochs", epochs, "Training epochs")->check(CLI::PositiveNumber);

  auto* light = app.add_subcommand("estimate-light", "Estimate the light direction of a PGM image");
  light->add_option("--image", image, "PGM image")->required();
  light->add_option("--sigma", sigma, "Gaussian blur sigma, pixels");

  auto* met = app.add_subcommand("metrics", "Recompute metrics from stored logs");
  met->add_option("--logs", logs, "Log root directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report_error("UsageError", e.what(), kExitConfig);
  }

  try {
    if (*gen) return cmd_generate(config, out, workers, seed);
    if (*eval) return cmd_evaluate(config, listen, out, accept_timeout, seed);
    if (*akm) return cmd_estimate_akm(pattern, lf, lr, dt);
    if (*ground) return cmd_fit_ground(pattern, out, epochs, seed.value_or(0));
    if (*light) return cmd_estimate_light(image, sigma);
    if (*met) return cmd_metrics(logs);
  } catch (const Error& e) {
    return report_error(to_string(e.code()), e.what(), exit_code_for(e.code()));
  } catch (const std::exception& e) {
    return report_error("InternalError", e.what(), kExitRuntime);
  }
  return kExitOk;
}
