#include <doctest.h>

#include <random>

#include "scenesim/errors.hpp"
#include "scenesim/metrics.hpp"
#include "test_util.hpp"

using namespace scenesim;
using scenesim::test::fixture_map;

namespace {

VehicleState pose(double x, double y, double heading, double length = 4.8, double width = 2.0) {
  VehicleState s;
  s.x = x;
  s.y = y;
  s.heading = heading;
  s.length = length;
  s.width = width;
  return s;
}

bool in_rect(Vec2 p, const VehicleState& s) {
  const double dx = p.x - s.x, dy = p.y - s.y;
  const double u = std::cos(s.heading) * dx + std::sin(s.heading) * dy;
  const double v = -std::sin(s.heading) * dx + std::cos(s.heading) * dy;
  return std::abs(u) <= 0.5 * s.length + 1e-9 && std::abs(v) <= 0.5 * s.width + 1e-9;
}

// Dense sampling of each rectangle (interior and boundary) tested against the other.
bool sampled_overlap(const VehicleState& a, const VehicleState& b) {
  constexpr int n = 60;
  for (const auto* p : {&a, &b}) {
    const auto* q = p == &a ? &b : &a;
    for (int i = 0; i <= n; ++i) {
      for (int j = 0; j <= n; ++j) {
        const Vec2 local{(i / double(n) - 0.5) * p->length, (j / double(n) - 0.5) * p->width};
        if (in_rect(p->position() + rotate(local, p->heading), *q)) return true;
      }
    }
  }
  return false;
}

double boundary_distance(const VehicleState& a, const VehicleState& b) {
  const auto ca = a.footprint().corners(), cb = b.footprint().corners();
  double d = 1e9;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      d = std::min(d, point_segment_distance(ca[i], cb[j], cb[(j + 1) % 4]));
      d = std::min(d, point_segment_distance(cb[i], ca[j], ca[(j + 1) % 4]));
    }
  }
  return d;
}

EpisodeResult episode(long ticks, std::vector<long> vehicle_hits, std::vector<long> layout_hits, bool timed_out,
                      bool aborted = false) {
  EpisodeResult e;
  e.ticks = ticks;
  e.vehicle_collision.assign(static_cast<std::size_t>(ticks), false);
  e.layout_collision.assign(static_cast<std::size_t>(ticks), false);
  for (long t : vehicle_hits) e.vehicle_collision[static_cast<std::size_t>(t)] = true;
  for (long t : layout_hits) e.layout_collision[static_cast<std::size_t>(t)] = true;
  e.timed_out = timed_out;
  e.aborted = aborted;
  e.completed = !timed_out && !aborted && vehicle_hits.empty();
  return e;
}

AgentRecord route_agent(const MapTopology& map, std::vector<std::string> lanes, double s) {
  AgentRecord a;
  a.behavior.set_route(route_from_lanes(lanes, s, map));
  const Vec2 p = a.behavior.route().path.point_at(0.0);
  a.state = pose(p.x, p.y, a.behavior.route().path.heading_at(0.0));
  return a;
}

PlannedTrajectory from_norms(std::array<double, 6> norms, double heading = 0.3) {
  PlannedTrajectory t;
  for (std::size_t i = 0; i < 6; ++i) t.offsets[i] = unit_from_heading(heading) * norms[i];
  return t;
}

}  // namespace

TEST_CASE("obb collision basics") {
  CHECK(obb_collision(pose(3, 4, 1.0), pose(3, 4, 1.0)));
  CHECK_FALSE(obb_collision(pose(0, 0, 0.0), pose(0, 2.1, 0.0)));
  CHECK(obb_collision(pose(0, 0, 0.0), pose(0, 2.0, 0.0)));
}

TEST_CASE("obb collision agrees with dense point sampling") {
  std::mt19937_64 gen(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int disagreements = 0, hits = 0;
  for (int i = 0; i < 1000; ++i) {
    // A 45 degree pair placed around the corner-touching distance.
    const auto a = pose(0, 0, 0.0);
    const double r = 4.0 + 1.5 * u(gen), th = M_PI * u(gen);
    const auto b = pose(r * std::cos(th), r * std::sin(th), M_PI / 4.0 + 0.1 * u(gen));
    const bool sat = obb_collision(a, b);
    hits += sat;
    if (sat != sampled_overlap(a, b)) {
      ++disagreements;
      CHECK(boundary_distance(a, b) < 0.06);
    }
  }
  CHECK(hits > 100);
  CHECK(hits < 900);
  CHECK(disagreements < 20);
}

TEST_CASE("layout collision") {
  const auto map = fixture_map("straight");
  CHECK_FALSE(layout_collision(pose(50, 0, 0.0), map));
  CHECK(layout_collision(pose(50, 30, 0.0), map));
  CHECK(layout_collision(pose(50, 2.6, 0.0), map));
  // Corner exactly on the road edge is still inside.
  CHECK_FALSE(layout_collision(pose(50, 2.5, 0.0), map));
}

TEST_CASE("rates against a naive recount") {
  CHECK(compute_rates({episode(10, {2, 3}, {}, false)}).vcr == doctest::Approx(0.2));
  const auto r = compute_rates({episode(10, {}, {}, false), episode(10, {4}, {}, false), episode(10, {}, {}, true),
                                episode(10, {}, {}, false)});
  CHECK(r.rc == doctest::Approx(0.5));
  CHECK(compute_rates({episode(10, {}, {1, 2, 3}, false)}).rc == 1.0);
  CHECK(compute_rates({episode(10, {}, {1, 2, 3}, false)}).lcr == doctest::Approx(0.3));
  CHECK(compute_rates({episode(10, {}, {}, false, true)}).rc == 0.0);
  CHECK_THROWS_AS(compute_rates({}), Error);

  std::mt19937_64 gen(8);
  std::uniform_int_distribution<int> len(1, 40), count(1, 8);
  std::bernoulli_distribution coin(0.1), half(0.5);
  for (int k = 0; k < 1000; ++k) {
    std::vector<EpisodeResult> eps;
    const int n = count(gen);
    for (int i = 0; i < n; ++i) {
      const long t = len(gen);
      std::vector<long> vh, lh;
      for (long j = 0; j < t; ++j) {
        if (coin(gen)) vh.push_back(j);
        if (coin(gen)) lh.push_back(j);
      }
      eps.push_back(episode(t, vh, lh, half(gen) && coin(gen), coin(gen)));
    }
    double vcr = 0, lcr = 0, rc = 0;
    for (const auto& e : eps) {
      double v = 0, l = 0;
      bool any = false;
      for (long j = 0; j < e.ticks; ++j) {
        v += e.vehicle_collision[j];
        l += e.layout_collision[j];
        any = any || e.vehicle_collision[j];
      }
      vcr += v / e.ticks;
      lcr += l / e.ticks;
      rc += (!any && !e.timed_out && !e.aborted) ? 1.0 : 0.0;
    }
    const auto got = compute_rates(eps);
    CHECK(got.vcr == doctest::Approx(vcr / n).epsilon(1e-12));
    CHECK(got.lcr == doctest::Approx(lcr / n).epsilon(1e-12));
    CHECK(got.rc == doctest::Approx(rc / n).epsilon(1e-12));
    CHECK(got.episodes == static_cast<std::size_t>(n));
  }
}

TEST_CASE("interaction indicator cases") {
  const auto map = fixture_map("intersection");
  const Route ego_route = plan_route({"S_in", 0.0}, {"N_out", 60.0}, map);
  const double progress = 75.0;
  const auto ego = pose(1.75, -15.0, M_PI / 2.0);

  SUBCASE("crossing agent inside the wedge") {
    auto a = route_agent(map, {"W_in", "J_W_S", "E_out"}, 75.0);
    const auto rec = interaction_indicator(ego, ego_route, progress, a, 15.0);
    CHECK(rec.detect);
    CHECK(rec.intersect);
    CHECK(rec.interaction);
  }
  SUBCASE("oncoming agent on a parallel lane") {
    auto a = route_agent(map, {"N_in", "J_N_S", "S_out"}, 50.0);
    const auto rec = interaction_indicator(ego, ego_route, progress, a, 15.0);
    CHECK(rec.detect);
    CHECK_FALSE(rec.intersect);
    CHECK_FALSE(rec.interaction);
  }
  SUBCASE("agent far behind") {
    auto a = route_agent(map, {"S_in", "J_S_S", "N_out"}, 40.0);
    const auto rec = interaction_indicator(ego, ego_route, progress, a, 15.0);
    CHECK_FALSE(rec.detect);
    CHECK_FALSE(rec.interaction);
  }
  SUBCASE("forward wedge reaches twice as far") {
    auto a = route_agent(map, {"S_in", "J_S_S", "N_out"}, 0.0);
    a.state = pose(1.75, 35.0, M_PI / 2.0);  // 50 m ahead: outside r_s = 30, inside r_f = 60
    CHECK(interaction_indicator(ego, ego_route, progress, a, 15.0).detect);
    a.state = pose(-25.0, 10.0, 0.0);  // 40 m away at 48 degrees
    CHECK_FALSE(interaction_indicator(ego, ego_route, progress, a, 15.0).detect);
  }
}

TEST_CASE("interaction equals detect and intersect on random placements") {
  const auto map = fixture_map("intersection");
  const Route ego_route = plan_route({"S_in", 0.0}, {"W_out", 40.0}, map);
  std::mt19937_64 gen(12);
  std::uniform_real_distribution<double> xy(-60.0, 60.0), ang(-M_PI, M_PI), s(0.0, 60.0);
  const std::vector<std::vector<std::string>> chains{{"E_in", "J_E_S", "W_out"}, {"N_in", "J_N_L", "E_out"},
                                                     {"W_in", "J_W_R", "S_out"}};
  for (int k = 0; k < 500; ++k) {
    auto a = route_agent(map, chains[k % 3], s(gen));
    a.state = pose(xy(gen), xy(gen), ang(gen));
    const auto rec = interaction_indicator(pose(1.75, -40.0, M_PI / 2.0), ego_route, 50.0, a, 10.0);
    CHECK(rec.interaction == (rec.detect && rec.intersect));
  }
}

TEST_CASE("interaction rate counts scenes with any interaction") {
  const InteractionRecord yes{true, true, true}, no{true, false, false};
  CHECK(interaction_rate({{no, yes}, {no}, {}, {yes, yes}}) == doctest::Approx(0.5));
  CHECK_THROWS_AS(interaction_rate({}), Error);
}

TEST_CASE("speed alteration counting") {
  CHECK(ego_speed_alteration(from_norms({1.0, 1.2, 1.1, 1.3, 1.2, 1.4})) == 4);
  CHECK(ego_speed_alteration(from_norms({1.0, 1.1, 1.2, 1.3, 1.4, 1.5})) == 0);
  CHECK(ego_speed_alteration(from_norms({1.0, 1.0, 1.0, 1.0, 1.0, 1.0})) == 0);
  // A flat step keeps the previous trend.
  CHECK(ego_speed_alteration(from_norms({1.0, 1.2, 1.2, 1.1, 1.1, 1.3})) == 2);
  CHECK(ego_speed_alteration(from_norms({1.0, 1.0, 0.9, 0.9, 1.0, 1.0})) == 1);
}

TEST_CASE("speed alteration is at most four and direction independent") {
  std::mt19937_64 gen(14);
  std::uniform_real_distribution<double> n(0.0, 2.0), h(-M_PI, M_PI);
  for (int k = 0; k < 2000; ++k) {
    std::array<double, 6> norms{};
    for (auto& v : norms) v = std::round(n(gen) * 4.0) / 4.0;
    const int c = ego_speed_alteration(from_norms(norms, h(gen)));
    CHECK(c >= 0);
    CHECK(c <= 4);
    CHECK(c == ego_speed_alteration(from_norms(norms, 0.0)));
  }
}

TEST_CASE("report and episode JSON round trip") {
  MetricsReport r;
  r.rc = 0.5;
  r.vcr = 0.1;
  r.speed_alteration_histogram = {1, 2, 3, 4, 5};
  r.episodes = 4;
  CHECK(to_json(metrics_report_from_json(to_json(r))) == to_json(r));
  const auto e = episode(5, {1}, {2}, false, true);
  const auto back = episode_result_from_json(to_json(e));
  CHECK(back.vehicle_collision == e.vehicle_collision);
  CHECK(back.aborted);
}
