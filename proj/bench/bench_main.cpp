// Throughput bench: scene controller plus ego kinematics with 50 agents, and
// BEV rasterisation. Prints one JSON object.
#include <algorithm>
#include <chrono>
#include <iostream>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "scenesim/bev_renderer.hpp"
#include "scenesim/kinematics.hpp"
#include "scenesim/scene_controller.hpp"

using namespace scenesim;
using Clock = std::chrono::steady_clock;

namespace {

constexpr int kLanes = 5;
constexpr int kPerLane = 10;
constexpr double kLength = 6000.0;
constexpr double kLaneWidth = 3.5;

MapTopology multi_lane_road() {
  nlohmann::json lanes = nlohmann::json::array();
  for (int k = 0; k < kLanes; ++k) {
    nlohmann::json pts = nlohmann::json::array();
    for (double x = 0.0; x <= kLength; x += 50.0) pts.push_back({x, k * kLaneWidth});
    lanes.push_back({{"id", "R" + std::to_string(k)}, {"points", pts}, {"speed_limit", 12.0}, {"successors", nlohmann::json::array()}});
  }
  const double lo = -0.5 * kLaneWidth, hi = (kLanes - 0.5) * kLaneWidth;
  return parse_map({{"lanes", lanes}, {"drivable_area", {{{-5.0, lo}, {kLength + 5.0, lo}, {kLength + 5.0, hi}, {-5.0, hi}}}}});
}

std::vector<AgentRecord> traffic(const MapTopology& map) {
  std::vector<AgentRecord> agents;
  for (int k = 0; k < kLanes; ++k) {
    for (int i = 0; i < kPerLane; ++i) {
      AgentRecord a = make_lane_agent(map, "R" + std::to_string(k), 20.0 + 40.0 * i, kLength - 600.0);
      a.id = static_cast<int>(agents.size());
      a.state.v = 8.0;
      a.behavior.target_speed = 8.0 + 0.4 * i;
      agents.push_back(std::move(a));
    }
  }
  return agents;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"scenesim throughput bench"};
  long ticks = 600;
  long frames = 100;
  int repeats = 5;
  app.add_option("--ticks", ticks, "Controller ticks per batch")->check(CLI::PositiveNumber);
  app.add_option("--frames", frames, "BEV frames per batch")->check(CLI::PositiveNumber);
  app.add_option("--repeats", repeats, "Timed batches; rates are batch medians")->check(CLI::PositiveNumber);
  CLI11_PARSE(app, argc, argv);

  const MapTopology map = multi_lane_road();
  auto agents = traffic(map);
  VehicleState ego;
  ego.x = 450.0;
  ego.y = 2.0 * kLaneWidth;
  ego.v = 8.0;
  const KinematicParams kin{};

  std::vector<double> tick_rates;
  for (int r = 0; r < repeats; ++r) {
    const auto t0 = Clock::now();
    for (long t = 0; t < ticks; ++t) {
      ControllerContext ctx{&map, ego, ego.x, t, kin.dt};
      agents = controller_step(ctx, agents);
      ego = akm_step(ego, {0.0, 0.0}, kin);
    }
    tick_rates.push_back(static_cast<double>(ticks) / seconds_since(t0));
  }
  std::size_t present = 0;
  for (const auto& a : agents) present += a.present() ? 1 : 0;

  const std::vector<CameraConfig> cams{{"front", 1.5, 0.0, 1.6, 0.0, 1.2, 1600, 900},
                                       {"left", 0.0, 0.9, 1.6, 1.57, 1.2, 1600, 900},
                                       {"right", 0.0, -0.9, 1.6, -1.57, 1.2, 1600, 900}};
  const RenderSettings settings{};
  std::size_t checksum = 0;
  std::vector<double> frame_rates;
  for (int r = 0; r < repeats; ++r) {
    const auto t1 = Clock::now();
    for (long f = 0; f < frames; ++f) {
      VehicleState pose = ego;
      pose.x += 0.5 * static_cast<double>(f % 20);
      const auto frame = render_frame(f, pose, agents, map, cams, nullptr, settings);
      checksum += frame.count(CellLabel::kAgent);
    }
    frame_rates.push_back(static_cast<double>(frames) / seconds_since(t1));
  }

  nlohmann::json out = {{"agents", kLanes * kPerLane},
                        {"agents_present_at_end", present},
                        {"repeats", repeats},
                        {"ticks_per_batch", ticks},
                        {"ticks_per_second", median(tick_rates)},
                        {"ticks_per_second_batches", tick_rates},
                        {"frames_per_batch", frames},
                        {"frames_per_second", median(frame_rates)},
                        {"frames_per_second_batches", frame_rates},
                        {"raster", {{"rows", 500}, {"cols", 500}}},
                        {"agent_cells", checksum}};
  std::cout << out.dump() << "\n";
  return 0;
}
