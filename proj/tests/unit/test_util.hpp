#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenesim/map_topology.hpp"

namespace scenesim::test {

inline std::filesystem::path fixture(const std::string& rel) {
  return std::filesystem::path(SCENESIM_FIXTURES) / rel;
}

inline MapTopology fixture_map(const std::string& name) {
  return load_map(fixture("maps/" + name + ".json"));
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("scenesim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Straight lane along +x at height y, in map-file JSON form.
inline nlohmann::json straight_lane_json(const std::string& id, double x0, double y, double length,
                                         std::vector<std::string> successors = {},
                                         double speed_limit = 12.0) {
  nlohmann::json pts = nlohmann::json::array();
  const int n = std::max(1, static_cast<int>(length / 5.0));
  for (int k = 0; k <= n; ++k) pts.push_back({x0 + length * k / n, y});
  return {{"id", id}, {"points", pts}, {"speed_limit", speed_limit}, {"successors", successors}};
}

// Single long straight lane, handy for car-following runs.
inline MapTopology long_road(double length = 1000.0, double speed_limit = 12.0) {
  nlohmann::json doc = {{"lanes", {straight_lane_json("R", 0.0, 0.0, length, {}, speed_limit)}},
                        {"drivable_area", {{{-5, -3.5}, {length + 5, -3.5}, {length + 5, 3.5}, {-5, 3.5}}}}};
  return parse_map(doc);
}

}  // namespace scenesim::test
