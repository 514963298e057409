#include <doctest.h>

#include <fstream>
#include <functional>
#include <random>

#include "scenesim/errors.hpp"
#include "scenesim/ground_model.hpp"
#include "test_util.hpp"

using namespace scenesim;

namespace {

PointCloud plane_cloud(std::size_t on_plane, std::size_t outliers, double (*z_of)(double, double),
                       std::uint64_t seed, const std::string& id = "f0") {
  std::mt19937_64 gen(seed);
  std::uniform_real_distribution<double> xy(-50.0, 50.0), up(1.0, 3.0);
  PointCloud c{id, {}};
  for (std::size_t i = 0; i < on_plane; ++i) {
    const double x = xy(gen), y = xy(gen);
    c.points.push_back({x, y, z_of(x, y)});
  }
  for (std::size_t i = 0; i < outliers; ++i) {
    const double x = xy(gen), y = xy(gen);
    c.points.push_back({x, y, z_of(x, y) + up(gen)});
  }
  return c;
}

double flat(double, double) { return 0.0; }
double level_two(double, double) { return 2.0; }
double tilted(double x, double y) { return 0.1 * x + 0.2 * y + 3.0; }
double five(double, double) { return 5.0; }

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::kIo;
}

}  // namespace

TEST_CASE("height loss reference values") {
  CHECK(height_loss(2.0, 2.0) == 0.0);
  CHECK(height_loss(3.0, 1.0) == doctest::Approx(4.0));
  CHECK(height_loss(1.0, 3.0, 1.0) == doctest::Approx(1.5));
  CHECK(height_loss(1.4, 1.0) == doctest::Approx(0.16));
  CHECK(height_loss(1.0, 1.4, 1.0) == doctest::Approx(0.08));
}

TEST_CASE("height loss penalises over-prediction more") {
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> m(1e-6, 10.0), z(-20.0, 20.0), delta(0.1, 3.0);
  for (int i = 0; i < 10000; ++i) {
    const double r = m(gen), base = z(gen), d = delta(gen);
    CHECK(height_loss(base + r, base, d) > height_loss(base - r, base, d));
    CHECK(height_loss(base - r, base, d) >= 0.0);
  }
}

TEST_CASE("height loss gradient matches central differences") {
  std::mt19937_64 gen(2);
  std::uniform_real_distribution<double> v(-5.0, 5.0);
  for (int i = 0; i < 1000; ++i) {
    const double p = v(gen), o = v(gen), h = 1e-6;
    const double fd = (height_loss(p + h, o) - height_loss(p - h, o)) / (2.0 * h);
    CHECK(height_loss_grad(p, o) == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("MLP gradient matches central differences") {
  GroundModel model(7);
  model.set_normalization({1.0, -2.0}, {20.0, 30.0}, 0.5, 2.0);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> xy(-40.0, 40.0), z(-2.0, 3.0);
  Eigen::Matrix2Xd pts(2, 64);
  Eigen::VectorXd zs(64);
  for (int i = 0; i < 64; ++i) {
    pts(0, i) = xy(gen);
    pts(1, i) = xy(gen);
    zs(i) = z(gen);
  }
  Eigen::VectorXd grad;
  model.loss_and_gradient(pts, zs, &grad);
  const Eigen::VectorXd theta = model.parameters();
  REQUIRE(static_cast<std::size_t>(grad.size()) == model.parameter_count());
  std::uniform_int_distribution<Eigen::Index> pick(0, theta.size() - 1);
  int checked = 0;
  for (int k = 0; k < 100; ++k) {
    const Eigen::Index i = pick(gen);
    const double h = 1e-5;
    Eigen::VectorXd tp = theta, tm = theta;
    tp(i) += h;
    tm(i) -= h;
    GroundModel mp = model, mm = model;
    mp.set_parameters(tp);
    mm.set_parameters(tm);
    const double fd = (mp.loss(pts, zs) - mm.loss(pts, zs)) / (2.0 * h);
    const double rel = std::abs(grad(i) - fd) / std::max(1e-6, std::abs(grad(i)) + std::abs(fd));
    CHECK(rel < 1e-4);
    ++checked;
  }
  CHECK(checked == 100);
}

TEST_CASE("RANSAC finds a plane among outliers") {
  Rng rng(11);
  const auto r = ransac_ground(plane_cloud(900, 100, flat, 1), 200, 0.05, rng);
  CHECK(r.plane.tilt() < M_PI / 180.0);
  CHECK(r.plane.c > 0.0);
  CHECK(r.inliers.size() >= 880);
  for (const auto& p : r.inliers) CHECK(std::abs(r.plane.distance(p)) <= 0.05);
}

TEST_CASE("RANSAC on an exact plane") {
  Rng rng(12);
  const auto r = ransac_ground(plane_cloud(300, 0, level_two, 2), 50, 0.01, rng);
  CHECK(r.inliers.size() == 300);
  CHECK(-r.plane.d / r.plane.c == doctest::Approx(2.0));
}

TEST_CASE("RANSAC gives up on a uniform cube") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  PointCloud cube{"cube", {}};
  for (int i = 0; i < 1000; ++i) cube.points.push_back({u(gen), u(gen), u(gen)});
  Rng rng(13);
  CHECK(code_of([&] { ransac_ground(cube, 200, 0.05, rng); }) == ErrorCode::kNoGroundFound);
  PointCloud tiny{"tiny", {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}}};
  CHECK(code_of([&] { ransac_ground(tiny, 10, 0.05, rng); }) != ErrorCode::kIo);
}

TEST_CASE("RANSAC is deterministic for a seed") {
  const auto cloud = plane_cloud(500, 200, flat, 5);
  Rng a(99), b(99);
  const auto ra = ransac_ground(cloud, 100, 0.05, a);
  const auto rb = ransac_ground(cloud, 100, 0.05, b);
  CHECK(ra.plane.a == rb.plane.a);
  CHECK(ra.plane.d == rb.plane.d);
  CHECK(ra.inliers.size() == rb.inliers.size());
}

TEST_CASE("fit recovers a tilted plane") {
  const std::vector<PointCloud> clouds{plane_cloud(1500, 150, tilted, 6, "a"), plane_cloud(1500, 150, tilted, 7, "b")};
  Rng rng(21);
  GroundFitOptions opts;
  opts.inlier_threshold = 0.05;
  const auto fit = fit_ground(clouds, GroundModel(21), opts, rng);
  CHECK(fit.frames_used == 2);
  CHECK(fit.inliers >= 2900);
  CHECK(fit.epoch_loss.back() <= fit.epoch_loss.front());
  double sq = 0.0;
  int n = 0;
  for (double x = -45.0; x <= 45.0; x += 3.7) {
    for (double y = -45.0; y <= 45.0; y += 3.7) {
      const double e = fit.model.query(x, y) - tilted(x, y);
      sq += e * e;
      ++n;
    }
  }
  CHECK(std::sqrt(sq / n) < 0.05);
  CHECK(fit.model.query(3.0, 4.0) == fit.model.query(3.0, 4.0));
}

TEST_CASE("fit on constant terrain stays within 5 cm") {
  Rng rng(22);
  const auto fit = fit_ground({plane_cloud(2000, 0, five, 8)}, GroundModel(22), {}, rng);
  for (double x = -48.0; x <= 48.0; x += 8.0) {
    for (double y = -48.0; y <= 48.0; y += 8.0) {
      const double z = fit.model.query(x, y);
      CHECK(z >= 4.95);
      CHECK(z <= 5.05);
    }
  }
}

TEST_CASE("fit propagates no-ground-found") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  PointCloud cube{"cube", {}};
  for (int i = 0; i < 500; ++i) cube.points.push_back({u(gen), u(gen), u(gen)});
  Rng rng(1);
  CHECK(code_of([&] { fit_ground({cube}, GroundModel(1), {}, rng); }) == ErrorCode::kNoGroundFound);
}

TEST_CASE("untrained model is finite and JSON round trip is exact") {
  const GroundModel m(5);
  CHECK(std::isfinite(m.query(12.0, -7.0)));
  CHECK(std::isfinite(GroundModel().query(0.0, 0.0)));
  const auto back = GroundModel::from_json(m.to_json());
  CHECK(back.query(12.0, -7.0) == m.query(12.0, -7.0));
  CHECK(back.to_json() == m.to_json());
  auto j = m.to_json();
  j["schema_version"] = 99;
  CHECK_THROWS_AS(GroundModel::from_json(j), Error);
}

TEST_CASE("point cloud CSV groups by frame") {
  const auto dir = scenesim::test::scratch_dir("clouds");
  std::ofstream(dir / "c.csv") << "frame,x,y,z\nb,0,0,1\na,1,0,2\nb,2,0,3\n";
  const auto clouds = read_point_clouds_csv(dir / "c.csv");
  REQUIRE(clouds.size() == 2);
  CHECK(clouds[0].frame_id == "b");
  CHECK(clouds[0].points.size() == 2);
  CHECK(clouds[1].points[0].z == 2.0);
  std::ofstream(dir / "bad.csv") << "frame,x,y,z\nb,0,zero,1\n";
  CHECK(code_of([&] { read_point_clouds_csv(dir / "bad.csv"); }) == ErrorCode::kParse);
}
