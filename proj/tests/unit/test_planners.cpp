#include <doctest.h>

#include "scenesim/errors.hpp"
#include "scenesim/planners.hpp"
#include "test_util.hpp"

using namespace scenesim;
using scenesim::test::fixture_map;
using scenesim::test::long_road;

namespace {

PlannerInput privileged_input(const VehicleState& ego, double progress, const MapTopology& map,
                              const std::vector<AgentRecord>& agents) {
  PlannerInput in;
  in.ego = ego;
  in.route_progress = progress;
  in.privileged = PrivilegedView{&agents, &map};
  return in;
}

double turn_entry(const Route& r, RoadOption option) {
  for (const auto& seg : r.segments) {
    if (seg.option == option) return seg.route_s_begin;
  }
  FAIL("route has no such segment");
  return 0.0;
}

}  // namespace

TEST_CASE("expert holds speed and heading at equilibrium") {
  const auto map = long_road();
  const Route ref = plan_route({"R", 0.0}, {"R", 900.0}, map);
  VehicleState ego;
  ego.x = 100.0;
  ego.v = 10.0;
  const std::vector<AgentRecord> none;
  const auto act = expert_plan(privileged_input(ego, 100.0, map, none), ref);
  CHECK(std::abs(act.steer) < 1e-3);
  CHECK(std::abs(act.accel) < 0.05);
}

TEST_CASE("expert brakes for a stopped agent 15 m ahead") {
  const auto map = long_road();
  const Route ref = plan_route({"R", 0.0}, {"R", 900.0}, map);
  VehicleState ego;
  ego.x = 100.0;
  ego.v = 10.0;
  auto agent = make_lane_agent(map, "R", 115.0, 100.0);
  agent.behavior.target_speed = 0.0;
  const std::vector<AgentRecord> agents{agent};
  CHECK(expert_plan(privileged_input(ego, 100.0, map, agents), ref).accel < 0.0);
  auto gone = agent;
  gone.behavior.finished = true;
  const std::vector<AgentRecord> absent{gone};
  CHECK(expert_plan(privileged_input(ego, 100.0, map, absent), ref).accel >= -0.05);
}

TEST_CASE("expert steers back toward the reference") {
  const auto map = long_road();
  const Route ref = plan_route({"R", 0.0}, {"R", 900.0}, map);
  const std::vector<AgentRecord> none;
  for (double v : {2.0, 5.0, 10.0}) {
    VehicleState ego;
    ego.x = 100.0;
    ego.y = -1.0;
    ego.v = v;
    const double steer = expert_plan(privileged_input(ego, 100.0, map, none), ref).steer;
    // Pure-pursuit oracle: arc through the lookahead point on the centreline.
    const double ld = std::max(4.0, 1.2 * v);
    const double kappa = 2.0 * 1.0 / (ld * ld + 1.0);
    const double beta = std::asin(ego.l_f * kappa);
    const double want = std::atan(std::tan(beta) * (ego.l_f + ego.l_r) / ego.l_r);
    CHECK(steer > 0.0);
    CHECK(steer == doctest::Approx(want).epsilon(1e-6));
    ego.y = 1.0;
    CHECK(expert_plan(privileged_input(ego, 100.0, map, none), ref).steer == doctest::Approx(-want).epsilon(1e-6));
  }
}

TEST_CASE("expert output is deterministic and clamped") {
  const auto map = fixture_map("intersection");
  const Route ref = plan_route({"S_in", 20.0}, {"W_out", 40.0}, map);
  const std::vector<AgentRecord> none;
  for (double s = 0.0; s < ref.length(); s += 3.0) {
    VehicleState ego;
    ego.x = ref.path.point_at(s).x;
    ego.y = ref.path.point_at(s).y;
    ego.heading = ref.path.heading_at(s) + 0.3;
    ego.v = 14.0;
    const auto a = expert_plan(privileged_input(ego, s, map, none), ref);
    const auto b = expert_plan(privileged_input(ego, s, map, none), ref);
    CHECK(a == b);
    CHECK(std::abs(a.steer) <= ControlAction::kMaxSteer);
    CHECK(std::abs(a.accel) <= ControlAction::kMaxAccel);
  }
}

TEST_CASE("expert aborts when far off the route") {
  const auto map = long_road();
  const Route ref = plan_route({"R", 0.0}, {"R", 900.0}, map);
  VehicleState ego;
  ego.x = 100.0;
  ego.y = 5.5;
  const std::vector<AgentRecord> none;
  try {
    expert_plan(privileged_input(ego, 100.0, map, none), ref);
    FAIL("expected OffRoute");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kOffRoute);
  }
  ego.y = 4.9;
  CHECK_NOTHROW(expert_plan(privileged_input(ego, 100.0, map, none), ref));
}

TEST_CASE("reference speed respects lane limits and slows before turns") {
  const auto map = fixture_map("intersection");
  const Route ref = plan_route({"S_in", 20.0}, {"E_out", 40.0}, map);
  const double entry = turn_entry(ref, RoadOption::kTurnRight);
  const ExpertConfig cfg;
  CHECK(reference_speed(ref, 0.0, cfg) == doctest::Approx(10.0));
  CHECK(reference_speed(ref, entry + 2.0, cfg) <= 6.0 + 1e-9);
  // The profile can always be followed at the configured braking rate.
  for (double s = 0.0; s + 1.0 < ref.length(); s += 1.0) {
    const double v0 = reference_speed(ref, s, cfg), v1 = reference_speed(ref, s + 1.0, cfg);
    CHECK(v1 * v1 >= v0 * v0 - 2.0 * cfg.braking * 1.0 - 1e-9);
  }
}

TEST_CASE("derive_command uses a 20 m window") {
  const auto map = fixture_map("intersection");
  const Route left = plan_route({"S_in", 20.0}, {"W_out", 40.0}, map);
  const double l_entry = turn_entry(left, RoadOption::kTurnLeft);
  CHECK(derive_command(left, 0.0) == RouteCommand::kStraight);
  CHECK(derive_command(left, l_entry - 10.0) == RouteCommand::kLeft);
  CHECK(derive_command(left, l_entry + 5.0) == RouteCommand::kLeft);
  CHECK(derive_command(left, left.length() - 1.0) == RouteCommand::kStraight);

  const Route right = plan_route({"S_in", 20.0}, {"E_out", 40.0}, map);
  const double r_entry = turn_entry(right, RoadOption::kTurnRight);
  CHECK(derive_command(right, r_entry - 30.0) == RouteCommand::kStraight);
  CHECK(derive_command(right, r_entry - 19.0) == RouteCommand::kRight);

  const Route straight = plan_route({"L1", 10.0}, {"L2", 80.0}, fixture_map("straight"));
  for (double s = 0.0; s < straight.length(); s += 5.0) CHECK(derive_command(straight, s) == RouteCommand::kStraight);

  const Route change = plan_route({"A", 10.0}, {"B", 150.0}, fixture_map("parallel"));
  CHECK(derive_command(change, 0.0) == RouteCommand::kLeft);
}

TEST_CASE("route command strings round trip") {
  for (auto c : {RouteCommand::kStraight, RouteCommand::kLeft, RouteCommand::kRight}) {
    CHECK(route_command_from_string(to_string(c)) == c);
  }
  CHECK_THROWS_AS(route_command_from_string("Up"), Error);
}

TEST_CASE("planner input needs exactly one data source") {
  PlannerInput in;
  CHECK_THROWS_AS(in.validate(), Error);
  in.observation = std::make_shared<ObservationFrame>();
  CHECK_NOTHROW(in.validate());
  in.privileged = PrivilegedView{};
  CHECK_THROWS_AS(in.validate(), Error);
  ConstantVelocityPlanner cv;
  in.privileged.reset();
  CHECK(cv.plan(in) == ControlAction{});
  CHECK_FALSE(cv.privileged());
}

TEST_CASE("track_progress is monotone and windowed") {
  const auto map = long_road();
  const Route r = plan_route({"R", 0.0}, {"R", 500.0}, map);
  CHECK(track_progress(r, {10.0, 0.5}, 0.0) == doctest::Approx(10.0));
  CHECK(track_progress(r, {9.0, 0.0}, 10.0) == doctest::Approx(10.0));
  CHECK(track_progress(r, {200.0, 0.0}, 10.0) == doctest::Approx(30.0));
}
