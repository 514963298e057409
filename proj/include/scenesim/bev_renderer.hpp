#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scenesim/ground_model.hpp"
#include "scenesim/kinematics.hpp"
#include "scenesim/map_topology.hpp"
#include "scenesim/scene_controller.hpp"

namespace scenesim {

enum class CellLabel : std::uint8_t {
  kFree = 0,
  kDrivable = 1,
  kEgoFootprint = 2,
  kAgent = 3,
  kOffMap = 4,
};

struct CameraConfig {
  std::string id;
  double x{0.0};    // mount offset in the ego frame, m (forward)
  double y{0.0};    // m (left)
  double z{1.6};    // m
  double yaw{0.0};  // rad relative to ego heading
  double fov{2.0944};  // horizontal, rad
  int width{1600};
  int height{900};
};

struct CameraPose {
  std::string id;
  double x{0.0};
  double y{0.0};
  double z{0.0};
  double yaw{0.0};
};

struct VisibleAgent {
  int id{0};
  double bearing{0.0};   // rad, relative to the camera axis, left positive
  double distance{0.0};  // m
};

struct RenderSettings {
  double resolution{0.2};  // m per cell
  double extent{100.0};    // m, square side
  double visibility{75.0}; // m
};

// Ego-centred, heading-aligned raster: row 0 is the far front edge, column 0
// the far left edge.
struct ObservationFrame {
  long tick{0};
  int rows{0};
  int cols{0};
  double resolution{0.2};
  double extent{100.0};
  VehicleState ego;
  std::vector<std::uint8_t> cells;
  std::vector<CameraPose> camera_poses;
  std::vector<std::vector<VisibleAgent>> visible_agents;  // per camera, same order

  CellLabel at(int row, int col) const {
    return static_cast<CellLabel>(cells[static_cast<std::size_t>(row) * static_cast<std::size_t>(cols) +
                                        static_cast<std::size_t>(col)]);
  }
  // World coordinates of a cell centre.
  Vec2 cell_center_world(int row, int col) const;
  std::size_t count(CellLabel label) const;
};

void validate_cameras(const std::vector<CameraConfig>& cameras);

ObservationFrame render_frame(long tick, const VehicleState& ego,
                              const std::vector<AgentRecord>& agents, const MapTopology& map,
                              const std::vector<CameraConfig>& cameras,
                              const GroundModel* ground = nullptr,
                              const RenderSettings& settings = {});

nlohmann::json frame_sidecar_json(const ObservationFrame& frame);
std::string frame_pgm(const ObservationFrame& frame);
// Zero-padded tick number used for frame file names.
std::string frame_stem(long tick);
// Writes <dir>/<stem>.pgm and <dir>/<stem>.json.
void write_frame(const ObservationFrame& frame, const std::filesystem::path& dir,
                 const std::string& stem);

nlohmann::json to_json(const CameraConfig& c);
CameraConfig camera_config_from_json(const nlohmann::json& j);

}  // namespace scenesim
