#include "scenesim/bev_renderer.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "scenesim/errors.hpp"
#include "scenesim/io.hpp"

namespace scenesim {

namespace {

// Pixel-space coordinates: u grows with column, v with row; a cell (r, c)
// is covered when its centre (c + 0.5, r + 0.5) lies inside the polygon.
struct RasterFrame {
  Vec2 origin;
  double cos_h;
  double sin_h;
  double inv_res;
  double half_rows;
  double half_cols;

  Vec2 to_pixel(Vec2 world) const {
    const Vec2 d = world - origin;
    const double fwd = cos_h * d.x + sin_h * d.y;
    const double left = -sin_h * d.x + cos_h * d.y;
    return {half_cols - left * inv_res, half_rows - fwd * inv_res};
  }
};

void fill_polygon(std::vector<std::uint8_t>& cells, int rows, int cols,
                  const std::vector<Vec2>& poly, CellLabel label) {
  const std::size_t n = poly.size();
  if (n < 3) return;
  double v_min = poly[0].y, v_max = poly[0].y;
  for (const auto& p : poly) {
    v_min = std::min(v_min, p.y);
    v_max = std::max(v_max, p.y);
  }
  const int r_lo = std::max(0, static_cast<int>(std::ceil(v_min - 0.5)));
  const int r_hi = std::min(rows - 1, static_cast<int>(std::floor(v_max - 0.5)));
  std::vector<double> xs;
  xs.reserve(8);
  for (int r = r_lo; r <= r_hi; ++r) {
    const double vc = r + 0.5;
    xs.clear();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
      const Vec2 a = poly[i], b = poly[j];
      if ((a.y <= vc && vc < b.y) || (b.y <= vc && vc < a.y)) {
        xs.push_back(a.x + (vc - a.y) * (b.x - a.x) / (b.y - a.y));
      }
    }
    std::sort(xs.begin(), xs.end());
    for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
      const int c_lo = std::max(0, static_cast<int>(std::ceil(xs[k] - 0.5)));
      const int c_hi = std::min(cols - 1, static_cast<int>(std::floor(xs[k + 1] - 0.5)));
      if (c_lo > c_hi) continue;
      std::fill(cells.begin() + static_cast<std::ptrdiff_t>(r) * cols + c_lo,
                cells.begin() + static_cast<std::ptrdiff_t>(r) * cols + c_hi + 1,
                static_cast<std::uint8_t>(label));
    }
  }
}

std::vector<Vec2> box_pixels(const RasterFrame& f, const OrientedBox& box) {
  std::vector<Vec2> out;
  for (const auto& c : box.corners()) out.push_back(f.to_pixel(c));
  return out;
}

}  // namespace

Vec2 ObservationFrame::cell_center_world(int row, int col) const {
  const double fwd = (rows / 2.0 - (row + 0.5)) * resolution;
  const double left = (cols / 2.0 - (col + 0.5)) * resolution;
  return ego.position() + rotate({fwd, left}, ego.heading);
}

std::size_t ObservationFrame::count(CellLabel label) const {
  return static_cast<std::size_t>(std::count(cells.begin(), cells.end(), static_cast<std::uint8_t>(label)));
}

void validate_cameras(const std::vector<CameraConfig>& cameras) {
  if (cameras.empty()) throw Error(ErrorCode::kConfig, "at least one camera is required");
  std::set<std::string> ids;
  for (const auto& c : cameras) {
    if (!ids.insert(c.id).second) throw Error(ErrorCode::kConfig, "duplicate camera id " + c.id);
    if (!(c.fov > 0.0) || c.fov > 2.0 * M_PI) throw Error(ErrorCode::kConfig, "camera " + c.id + " has invalid fov");
  }
}

ObservationFrame render_frame(long tick, const VehicleState& ego, const std::vector<AgentRecord>& agents,
                              const MapTopology& map, const std::vector<CameraConfig>& cameras,
                              const GroundModel* ground, const RenderSettings& settings) {
  ObservationFrame frame;
  frame.tick = tick;
  frame.resolution = settings.resolution;
  frame.extent = settings.extent;
  frame.rows = frame.cols = static_cast<int>(std::lround(settings.extent / settings.resolution));
  frame.ego = ego;
  frame.cells.assign(static_cast<std::size_t>(frame.rows) * static_cast<std::size_t>(frame.cols),
                     static_cast<std::uint8_t>(CellLabel::kOffMap));

  const RasterFrame rf{ego.position(), std::cos(ego.heading), std::sin(ego.heading),
                       1.0 / settings.resolution, frame.rows / 2.0, frame.cols / 2.0};
  if (!map.empty()) {
    const Vec2 lo = map.bounds_min(), hi = map.bounds_max();
    fill_polygon(frame.cells, frame.rows, frame.cols,
                 {rf.to_pixel(lo), rf.to_pixel({hi.x, lo.y}), rf.to_pixel(hi), rf.to_pixel({lo.x, hi.y})},
                 CellLabel::kFree);
  }
  for (const auto& poly : map.drivable_area()) {
    std::vector<Vec2> px;
    px.reserve(poly.size());
    for (const auto& p : poly) px.push_back(rf.to_pixel(p));
    fill_polygon(frame.cells, frame.rows, frame.cols, px, CellLabel::kDrivable);
  }
  for (const auto& a : agents) {
    if (!a.present()) continue;
    fill_polygon(frame.cells, frame.rows, frame.cols, box_pixels(rf, a.state.footprint()), CellLabel::kAgent);
  }
  fill_polygon(frame.cells, frame.rows, frame.cols, box_pixels(rf, ego.footprint()), CellLabel::kEgoFootprint);

  frame.camera_poses.reserve(cameras.size());
  frame.visible_agents.resize(cameras.size());
  for (std::size_t k = 0; k < cameras.size(); ++k) {
    const CameraConfig& cam = cameras[k];
    const Vec2 pos = ego.position() + rotate({cam.x, cam.y}, ego.heading);
    CameraPose pose{cam.id, pos.x, pos.y, cam.z, wrap_angle(ego.heading + cam.yaw)};
    if (ground) pose.z += ground->query(pos.x, pos.y);
    for (const auto& a : agents) {
      if (!a.present()) continue;
      const Vec2 d = a.state.position() - pos;
      const double dist = d.norm();
      if (dist > settings.visibility) continue;
      const double bearing = wrap_angle(std::atan2(d.y, d.x) - pose.yaw);
      if (std::abs(bearing) <= 0.5 * cam.fov) frame.visible_agents[k].push_back({a.id, bearing, dist});
    }
    frame.camera_poses.push_back(std::move(pose));
  }
  return frame;
}

nlohmann::json frame_sidecar_json(const ObservationFrame& frame) {
  nlohmann::json poses = nlohmann::json::array();
  for (std::size_t k = 0; k < frame.camera_poses.size(); ++k) {
    const auto& p = frame.camera_poses[k];
    nlohmann::json visible = nlohmann::json::array();
    for (const auto& v : frame.visible_agents[k]) {
      visible.push_back({{"id", v.id}, {"bearing", v.bearing}, {"distance", v.distance}});
    }
    poses.push_back({{"id", p.id}, {"x", p.x}, {"y", p.y}, {"z", p.z}, {"yaw", p.yaw}, {"visible_agents", visible}});
  }
  return {{"tick", frame.tick},
          {"rows", frame.rows},
          {"cols", frame.cols},
          {"resolution", frame.resolution},
          {"extent", frame.extent},
          {"ego", {{"x", frame.ego.x}, {"y", frame.ego.y}, {"phi", frame.ego.heading}, {"v", frame.ego.v}}},
          {"labels", {{"Free", 0}, {"Drivable", 1}, {"EgoFootprint", 2}, {"Agent", 3}, {"OffMap", 4}}},
          {"cameras", poses}};
}

std::string frame_pgm(const ObservationFrame& frame) {
  return io::encode_pgm(frame.cols, frame.rows, 4, frame.cells);
}

std::string frame_stem(long tick) {
  std::string digits = std::to_string(tick);
  if (digits.size() < 5) digits.insert(0, 5 - digits.size(), '0');
  return digits;
}

void write_frame(const ObservationFrame& frame, const std::filesystem::path& dir, const std::string& stem) {
  io::write_file(dir / (stem + ".pgm"), frame_pgm(frame));
  io::write_file(dir / (stem + ".json"), frame_sidecar_json(frame).dump(2) + "\n");
}

nlohmann::json to_json(const CameraConfig& c) {
  return {{"id", c.id}, {"x", c.x}, {"y", c.y}, {"z", c.z}, {"yaw", c.yaw},
          {"fov", c.fov}, {"width", c.width}, {"height", c.height}};
}

CameraConfig camera_config_from_json(const nlohmann::json& j) {
  CameraConfig c;
  try {
    c.id = j.at("id").get<std::string>();
    c.x = j.value("x", c.x);
    c.y = j.value("y", c.y);
    c.z = j.value("z", c.z);
    c.yaw = j.value("yaw", c.yaw);
    c.fov = j.value("fov", c.fov);
    c.width = j.value("width", c.width);
    c.height = j.value("height", c.height);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kConfig, std::string("camera config: ") + e.what());
  }
  return c;
}

}  // namespace scenesim
