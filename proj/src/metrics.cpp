#include "scenesim/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "scenesim/errors.hpp"

namespace scenesim {

bool obb_collision(const VehicleState& a, const VehicleState& b) {
  return boxes_overlap(a.footprint(), b.footprint());
}

bool layout_collision(const VehicleState& ego, const MapTopology& map) {
  const auto& area = map.drivable_area();
  for (const Vec2& corner : ego.footprint().corners()) {
    bool inside_any = false;
    for (const auto& poly : area) {
      if (point_in_polygon(corner, poly)) {
        inside_any = true;
        break;
      }
    }
    if (!inside_any) return true;
  }
  return false;
}

MetricsReport compute_rates(const std::vector<EpisodeResult>& episodes) {
  if (episodes.empty()) throw Error(ErrorCode::kEmptyInput, "compute_rates needs at least one episode");
  MetricsReport r;
  r.episodes = episodes.size();
  double vcr = 0.0, lcr = 0.0;
  std::size_t completed = 0;
  for (const auto& e : episodes) {
    const double ticks = static_cast<double>(e.ticks);
    const long vc = std::count(e.vehicle_collision.begin(), e.vehicle_collision.end(), true);
    const long lc = std::count(e.layout_collision.begin(), e.layout_collision.end(), true);
    // A zero-tick episode has no frames to collide in.
    const double ep_vcr = e.ticks > 0 ? static_cast<double>(vc) / ticks : 0.0;
    vcr += ep_vcr;
    lcr += e.ticks > 0 ? static_cast<double>(lc) / ticks : 0.0;
    if (vc == 0 && !e.timed_out && !e.aborted) ++completed;
  }
  const double n = static_cast<double>(episodes.size());
  r.vcr = vcr / n;
  r.lcr = lcr / n;
  r.rc = static_cast<double>(completed) / n;
  return r;
}

InteractionRecord interaction_indicator(const VehicleState& ego, const Route& ego_route,
                                        double ego_progress, const AgentRecord& agent,
                                        double v_max) {
  InteractionRecord rec;
  const double r_surround = kInteractionHorizon * v_max;
  const double r_forward = 2.0 * r_surround;
  const Vec2 d = agent.state.position() - ego.position();
  const double dist = d.norm();
  const double bearing = dist > 0.0 ? std::abs(wrap_angle(std::atan2(d.y, d.x) - ego.heading)) : 0.0;
  rec.detect = (bearing <= kSurroundHalfAngle && dist <= r_surround) ||
               (bearing <= kForwardHalfAngle && dist <= r_forward);

  const auto& agent_route = agent.behavior.route();
  const auto ego_rest = ego_route.path.slice(ego_progress, ego_progress + kRouteLookahead);
  const auto agent_rest = agent_route.path.slice(agent.behavior.route_progress,
                                                 agent.behavior.route_progress + kRouteLookahead);
  rec.intersect = polylines_intersect(ego_rest, agent_rest);
  rec.interaction = rec.detect && rec.intersect;
  return rec;
}

int ego_speed_alteration(const PlannedTrajectory& traj) {
  int count = 0;
  int prev = 0;
  for (std::size_t i = 0; i + 1 < traj.offsets.size(); ++i) {
    const double diff = traj.offsets[i + 1].norm() - traj.offsets[i].norm();
    int sign = diff > 0.0 ? 1 : (diff < 0.0 ? -1 : 0);
    if (sign == 0) sign = prev;  // flat steps keep the running trend
    if (prev != 0 && sign != 0 && sign != prev) ++count;
    if (sign != 0) prev = sign;
  }
  return count;
}

double interaction_rate(const std::vector<std::vector<InteractionRecord>>& scenes) {
  if (scenes.empty()) throw Error(ErrorCode::kEmptyInput, "interaction_rate needs at least one scene");
  std::size_t interactive = 0;
  for (const auto& scene : scenes) {
    if (std::any_of(scene.begin(), scene.end(), [](const InteractionRecord& r) { return r.interaction; })) {
      ++interactive;
    }
  }
  return static_cast<double>(interactive) / static_cast<double>(scenes.size());
}

nlohmann::json to_json(const MetricsReport& r) {
  return {{"rc", r.rc},
          {"vcr", r.vcr},
          {"lcr", r.lcr},
          {"interaction_rate", r.interaction_rate},
          {"speed_alteration_histogram", r.speed_alteration_histogram},
          {"episodes", r.episodes}};
}

MetricsReport metrics_report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.rc = j.at("rc").get<double>();
  r.vcr = j.at("vcr").get<double>();
  r.lcr = j.at("lcr").get<double>();
  r.interaction_rate = j.value("interaction_rate", 0.0);
  if (j.contains("speed_alteration_histogram")) {
    r.speed_alteration_histogram = j.at("speed_alteration_histogram").get<std::array<long, 5>>();
  }
  r.episodes = j.value("episodes", std::size_t{1});
  return r;
}

nlohmann::json to_json(const EpisodeResult& e) {
  return {{"ticks", e.ticks},
          {"vehicle_collision", e.vehicle_collision},
          {"layout_collision", e.layout_collision},
          {"timed_out", e.timed_out},
          {"completed", e.completed},
          {"aborted", e.aborted}};
}

EpisodeResult episode_result_from_json(const nlohmann::json& j) {
  EpisodeResult e;
  e.ticks = j.at("ticks").get<long>();
  e.vehicle_collision = j.at("vehicle_collision").get<std::vector<bool>>();
  e.layout_collision = j.at("layout_collision").get<std::vector<bool>>();
  e.timed_out = j.at("timed_out").get<bool>();
  e.completed = j.at("completed").get<bool>();
  e.aborted = j.value("aborted", false);
  if (e.vehicle_collision.size() != static_cast<std::size_t>(e.ticks) ||
      e.layout_collision.size() != static_cast<std::size_t>(e.ticks)) {
    throw Error(ErrorCode::kParse, "episode flag lists must have one entry per tick");
  }
  return e;
}

}  // namespace scenesim
