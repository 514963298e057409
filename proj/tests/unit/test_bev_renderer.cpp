#include <doctest.h>

#include <random>
#include <set>

#include "scenesim/bev_renderer.hpp"
#include "scenesim/errors.hpp"
#include "scenesim/io.hpp"
#include "test_util.hpp"

using namespace scenesim;
using scenesim::test::long_road;

namespace {

AgentRecord agent_at(int id, double x, double y, double heading, double length = 4.8, double width = 2.0) {
  AgentRecord a;
  a.id = id;
  a.state.x = x;
  a.state.y = y;
  a.state.heading = heading;
  a.state.length = length;
  a.state.width = width;
  return a;
}

std::vector<CameraConfig> front_camera() { return {CameraConfig{"CAM_FRONT", 1.5, 0.0, 1.6, 0.0, 2.0944}}; }

// Cell centre inside a rotated rectangle, written from scratch.
bool inside_box(Vec2 p, Vec2 c, double heading, double length, double width) {
  const double dx = p.x - c.x, dy = p.y - c.y;
  const double u = std::cos(heading) * dx + std::sin(heading) * dy;
  const double v = -std::sin(heading) * dx + std::cos(heading) * dy;
  return std::abs(u) <= 0.5 * length && std::abs(v) <= 0.5 * width;
}

std::set<std::pair<long, long>> agent_world_cells(const ObservationFrame& f) {
  std::set<std::pair<long, long>> out;
  for (int r = 0; r < f.rows; ++r) {
    for (int c = 0; c < f.cols; ++c) {
      if (f.at(r, c) != CellLabel::kAgent) continue;
      const Vec2 w = f.cell_center_world(r, c);
      out.insert({std::lround(w.x / f.resolution * 2.0), std::lround(w.y / f.resolution * 2.0)});
    }
  }
  return out;
}

}  // namespace

TEST_CASE("frame geometry and empty scene") {
  const auto map = long_road(200.0);
  VehicleState ego;
  ego.x = 50.0;
  const auto f = render_frame(0, ego, {}, map, front_camera());
  CHECK(f.rows == 500);
  CHECK(f.cols == 500);
  CHECK(f.count(CellLabel::kAgent) == 0);
  CHECK(f.count(CellLabel::kEgoFootprint) > 0);
  // Directly ahead is road; 10 m to the side is beyond the map bounds.
  CHECK(f.at(100, 250) == CellLabel::kDrivable);
  CHECK(f.at(250, 200) == CellLabel::kOffMap);
  VehicleState south;
  south.x = 1.75;
  south.y = -50.0;
  south.heading = M_PI / 2.0;
  const auto g = render_frame(0, south, {}, scenesim::test::fixture_map("intersection"), front_camera());
  CHECK(g.at(250, 150) == CellLabel::kFree);
  CHECK(f.at(250, 250) == CellLabel::kEgoFootprint);
  const Vec2 front = f.cell_center_world(0, 250);
  CHECK(front.x == doctest::Approx(50.0 + 49.9));
  CHECK(front.y == doctest::Approx(-0.1));
}

TEST_CASE("an empty map renders as off-map") {
  const auto f = render_frame(0, VehicleState{}, {}, MapTopology{}, front_camera());
  CHECK(f.count(CellLabel::kOffMap) + f.count(CellLabel::kEgoFootprint) == f.cells.size());
}

TEST_CASE("agent coverage matches the box area") {
  const auto map = long_road(200.0);
  VehicleState ego;
  ego.x = 50.0;
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI), off(-20.0, 20.0);
  for (int k = 0; k < 50; ++k) {
    const double x = 50.0 + 15.0 + off(gen) * 0.5, y = off(gen), h = ang(gen);
    const auto f = render_frame(0, ego, {agent_at(1, x, y, h, 4.5, 2.0)}, map, front_camera());
    const double area = f.count(CellLabel::kAgent) * f.resolution * f.resolution;
    CHECK(area == doctest::Approx(9.0).epsilon(0.15));
    std::size_t oracle = 0;
    for (int r = 0; r < f.rows; ++r) {
      for (int c = 0; c < f.cols; ++c) oracle += inside_box(f.cell_center_world(r, c), {x, y}, h, 4.5, 2.0);
    }
    // Boundary cells can go either way under floating point; allow a sliver.
    CHECK(std::abs(static_cast<double>(f.count(CellLabel::kAgent)) - static_cast<double>(oracle)) <= 4.0);
  }
}

TEST_CASE("rendering is deterministic") {
  const auto map = long_road(200.0);
  VehicleState ego;
  ego.x = 40.0;
  ego.heading = 0.3;
  const std::vector<AgentRecord> agents{agent_at(0, 60.0, 1.0, 0.1), agent_at(1, 30.0, -2.0, 2.0)};
  const auto a = render_frame(3, ego, agents, map, front_camera());
  const auto b = render_frame(3, ego, agents, map, front_camera());
  CHECK(a.cells == b.cells);
  CHECK(frame_pgm(a) == frame_pgm(b));
  CHECK(frame_sidecar_json(a) == frame_sidecar_json(b));
}

TEST_CASE("a static agent keeps its world cells while ego moves") {
  const auto map = long_road(300.0);
  const auto agent = agent_at(0, 80.0, 1.3, 0.4);
  VehicleState ego;
  ego.x = 50.0;
  const auto base = agent_world_cells(render_frame(0, ego, {agent}, map, front_camera()));
  CHECK(!base.empty());
  for (double shift : {1.0, 2.0, 5.0}) {
    VehicleState moved = ego;
    moved.x += shift;
    CHECK(agent_world_cells(render_frame(1, moved, {agent}, map, front_camera())) == base);
  }
}

TEST_CASE("hidden agents are not drawn") {
  const auto map = long_road(200.0);
  VehicleState ego;
  auto a = agent_at(0, 15.0, 0.0, 0.0);
  a.behavior.finished = true;
  auto b = agent_at(1, 25.0, 0.0, 0.0);
  b.behavior.active = false;
  const auto f = render_frame(0, ego, {a, b}, map, front_camera());
  CHECK(f.count(CellLabel::kAgent) == 0);
  CHECK(f.visible_agents[0].empty());
}

TEST_CASE("agent dead ahead is visible at zero bearing") {
  const auto map = long_road(200.0);
  VehicleState ego;
  ego.x = 20.0;
  const auto f = render_frame(0, ego, {agent_at(7, 31.5, 0.0, 0.0)}, map, front_camera());
  REQUIRE(f.visible_agents[0].size() == 1);
  CHECK(f.visible_agents[0][0].id == 7);
  CHECK(std::abs(f.visible_agents[0][0].bearing) < 1e-12);
  CHECK(f.visible_agents[0][0].distance == doctest::Approx(10.0));
  CHECK(f.camera_poses[0].x == doctest::Approx(21.5));
}

TEST_CASE("visible agents always lie inside the camera wedge") {
  const auto map = long_road(400.0);
  std::mt19937_64 gen(5);
  std::uniform_real_distribution<double> pos(-90.0, 90.0), ang(-M_PI, M_PI);
  const std::vector<CameraConfig> cams{{"F", 1.5, 0.0, 1.6, 0.0, 2.0944},
                                       {"L", 0.0, 1.0, 1.6, M_PI / 2.0, 1.2},
                                       {"B", -2.0, 0.0, 1.6, M_PI, 1.0}};
  std::size_t seen = 0;
  for (int k = 0; k < 200; ++k) {
    VehicleState ego;
    ego.x = 200.0;
    ego.heading = ang(gen);
    std::vector<AgentRecord> agents;
    for (int i = 0; i < 10; ++i) agents.push_back(agent_at(i, 200.0 + pos(gen), pos(gen), ang(gen)));
    const auto f = render_frame(k, ego, agents, map, cams);
    for (std::size_t c = 0; c < cams.size(); ++c) {
      const auto& pose = f.camera_poses[c];
      std::set<int> expected;
      for (const auto& a : agents) {
        const double dx = a.state.x - pose.x, dy = a.state.y - pose.y;
        const double b = std::remainder(std::atan2(dy, dx) - (ego.heading + cams[c].yaw), 2.0 * M_PI);
        if (std::hypot(dx, dy) <= 75.0 && std::abs(b) <= 0.5 * cams[c].fov) expected.insert(a.id);
      }
      std::set<int> got;
      for (const auto& v : f.visible_agents[c]) {
        CHECK(std::abs(v.bearing) <= 0.5 * cams[c].fov);
        CHECK(v.distance <= 75.0);
        got.insert(v.id);
      }
      CHECK(got == expected);
      seen += got.size();
    }
  }
  CHECK(seen > 100);
}

TEST_CASE("camera height follows the ground model") {
  GroundModel g(3);
  const auto map = long_road(200.0);
  VehicleState ego;
  ego.x = 10.0;
  const auto f = render_frame(0, ego, {}, map, front_camera(), &g);
  CHECK(f.camera_poses[0].z == doctest::Approx(1.6 + g.query(11.5, 0.0)));
}

TEST_CASE("camera validation") {
  CHECK_THROWS_AS(validate_cameras({}), Error);
  CHECK_THROWS_AS(validate_cameras({{"A"}, {"A"}}), Error);
  CameraConfig bad{"X"};
  bad.fov = 0.0;
  CHECK_THROWS_AS(validate_cameras({bad}), Error);
  CHECK_NOTHROW(validate_cameras(front_camera()));
  const auto c = camera_config_from_json(to_json(front_camera()[0]));
  CHECK(to_json(c) == to_json(front_camera()[0]));
}

TEST_CASE("frame files") {
  const auto dir = scenesim::test::scratch_dir("frames");
  const auto map = long_road(200.0);
  const auto f = render_frame(15, VehicleState{}, {agent_at(0, 12.0, 0.0, 0.0)}, map, front_camera());
  CHECK(frame_stem(15) == "00015");
  write_frame(f, dir, frame_stem(15));
  const auto img = io::read_pgm(dir / "00015.pgm");
  CHECK(img.width == f.cols);
  CHECK(img.maxval == 4);
  for (std::size_t i = 0; i < f.cells.size(); ++i) CHECK(img.pixels[i] == f.cells[i]);
  const auto side = nlohmann::json::parse(io::read_file(dir / "00015.json"));
  CHECK(side["tick"] == 15);
  CHECK(side["labels"]["Agent"] == 3);
  CHECK(side["cameras"][0]["visible_agents"].size() == 1);
}
