#include "scenesim/geometry.hpp"

#include <algorithm>
#include <array>
#include <limits>

namespace scenesim {

namespace {

constexpr double kEps = 1e-12;

int orientation(Vec2 a, Vec2 b, Vec2 c) {
  const double v = cross(b - a, c - a);
  const double scale = std::max({1.0, (b - a).norm() * (c - a).norm()});
  if (v > kEps * scale) return 1;
  if (v < -kEps * scale) return -1;
  return 0;
}

bool on_segment(Vec2 a, Vec2 b, Vec2 p) {
  return std::min(a.x, b.x) - kEps <= p.x && p.x <= std::max(a.x, b.x) + kEps &&
         std::min(a.y, b.y) - kEps <= p.y && p.y <= std::max(a.y, b.y) + kEps;
}

}  // namespace

double wrap_angle(double angle) {
  double a = std::fmod(angle + M_PI, 2.0 * M_PI);
  if (a <= 0.0) a += 2.0 * M_PI;
  return a - M_PI;
}

double wrap_two_pi(double angle) {
  double a = std::fmod(angle, 2.0 * M_PI);
  if (a < 0.0) a += 2.0 * M_PI;
  if (a >= 2.0 * M_PI) a = 0.0;
  return a;
}

bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2) {
  const int o1 = orientation(p1, p2, q1);
  const int o2 = orientation(p1, p2, q2);
  const int o3 = orientation(q1, q2, p1);
  const int o4 = orientation(q1, q2, p2);
  if (o1 != o2 && o3 != o4) return true;
  if (o1 == 0 && on_segment(p1, p2, q1)) return true;
  if (o2 == 0 && on_segment(p1, p2, q2)) return true;
  if (o3 == 0 && on_segment(q1, q2, p1)) return true;
  if (o4 == 0 && on_segment(q1, q2, p2)) return true;
  return false;
}

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  double t = len2 > 0.0 ? dot(p - a, ab) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return distance(p, a + ab * t);
}

double point_polyline_distance(Vec2 p, std::span<const Vec2> polyline) {
  if (polyline.empty()) return std::numeric_limits<double>::infinity();
  if (polyline.size() == 1) return distance(p, polyline[0]);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i + 1 < polyline.size(); ++i) {
    best = std::min(best, point_segment_distance(p, polyline[i], polyline[i + 1]));
  }
  return best;
}

bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon) {
  const std::size_t n = polygon.size();
  if (n < 3) return false;
  for (std::size_t i = 0; i < n; ++i) {
    if (point_segment_distance(p, polygon[i], polygon[(i + 1) % n]) <= 1e-9) {
      return true;
    }
  }
  bool inside = false;
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2 a = polygon[i];
    const Vec2 b = polygon[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double x_cross = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < x_cross) inside = !inside;
    }
  }
  return inside;
}

bool polylines_intersect(std::span<const Vec2> a, std::span<const Vec2> b) {
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    for (std::size_t j = 0; j + 1 < b.size(); ++j) {
      if (segments_intersect(a[i], a[i + 1], b[j], b[j + 1])) return true;
    }
  }
  return false;
}

std::size_t polyline_intersection_count(std::span<const Vec2> a,
                                        std::span<const Vec2> b) {
  std::size_t count = 0;
  for (std::size_t i = 0; i + 1 < a.size(); ++i) {
    for (std::size_t j = 0; j + 1 < b.size(); ++j) {
      if (segments_intersect(a[i], a[i + 1], b[j], b[j + 1])) ++count;
    }
  }
  return count;
}

std::array<Vec2, 4> OrientedBox::corners() const {
  const Vec2 f = unit_from_heading(heading) * (0.5 * length);
  const Vec2 l = unit_from_heading(heading + M_PI_2) * (0.5 * width);
  return {center + f + l, center - f + l, center - f - l, center + f - l};
}

bool OrientedBox::contains(Vec2 p) const {
  const Vec2 d = p - center;
  const Vec2 f = unit_from_heading(heading);
  const Vec2 l{-f.y, f.x};
  return std::abs(dot(d, f)) <= 0.5 * length && std::abs(dot(d, l)) <= 0.5 * width;
}

bool boxes_overlap(const OrientedBox& a, const OrientedBox& b) {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const std::array<Vec2, 4> axes{unit_from_heading(a.heading),
                                 unit_from_heading(a.heading + M_PI_2),
                                 unit_from_heading(b.heading),
                                 unit_from_heading(b.heading + M_PI_2)};
  for (const Vec2& axis : axes) {
    double a_lo = std::numeric_limits<double>::infinity(), a_hi = -a_lo;
    double b_lo = a_lo, b_hi = -a_lo;
    for (const Vec2& c : ca) {
      const double p = dot(c, axis);
      a_lo = std::min(a_lo, p);
      a_hi = std::max(a_hi, p);
    }
    for (const Vec2& c : cb) {
      const double p = dot(c, axis);
      b_lo = std::min(b_lo, p);
      b_hi = std::max(b_hi, p);
    }
    if (a_hi < b_lo || b_hi < a_lo) return false;
  }
  return true;
}

Polyline::Polyline(std::vector<Vec2> points) : points_(std::move(points)) {
  s_.reserve(points_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (i > 0) acc += distance(points_[i - 1], points_[i]);
    s_.push_back(acc);
  }
  for (std::size_t i = 0; i + 1 < points_.size(); i += kChunk) {
    Bounds b{points_[i], points_[i]};
    for (std::size_t k = i + 1; k < std::min(points_.size(), i + kChunk + 1); ++k) {
      b.lo = {std::min(b.lo.x, points_[k].x), std::min(b.lo.y, points_[k].y)};
      b.hi = {std::max(b.hi.x, points_[k].x), std::max(b.hi.y, points_[k].y)};
    }
    chunks_.push_back(b);
  }
}

std::size_t Polyline::segment_index(double s) const {
  if (points_.size() < 2) return 0;
  auto it = std::upper_bound(s_.begin(), s_.end(), s);
  std::size_t idx = it == s_.begin() ? 0 : static_cast<std::size_t>(it - s_.begin()) - 1;
  return std::min(idx, points_.size() - 2);
}

Vec2 Polyline::point_at(double s) const {
  if (points_.empty()) return {};
  if (points_.size() == 1) return points_[0];
  s = std::clamp(s, 0.0, length());
  const std::size_t i = segment_index(s);
  const double seg = s_[i + 1] - s_[i];
  const double t = seg > 0.0 ? (s - s_[i]) / seg : 0.0;
  return points_[i] + (points_[i + 1] - points_[i]) * t;
}

double Polyline::heading_at(double s) const {
  if (points_.size() < 2) return 0.0;
  const std::size_t i = segment_index(std::clamp(s, 0.0, length()));
  const Vec2 d = points_[i + 1] - points_[i];
  return std::atan2(d.y, d.x);
}

Polyline::Projection Polyline::project(Vec2 p) const {
  return project(p, 0.0, length());
}

Polyline::Projection Polyline::project(Vec2 p, double s_lo, double s_hi) const {
  Projection best;
  best.distance = std::numeric_limits<double>::infinity();
  if (points_.size() < 2) {
    if (!points_.empty()) best = {0.0, 0.0, distance(p, points_[0]), 0};
    return best;
  }
  const std::size_t n_seg = points_.size() - 1;
  const auto first = std::lower_bound(s_.begin(), s_.end(), s_lo);
  std::size_t i0 = static_cast<std::size_t>(first - s_.begin());
  i0 = i0 > 0 ? i0 - 1 : 0;
  const auto last = std::upper_bound(s_.begin(), s_.end(), s_hi);
  const std::size_t i1 = std::min(n_seg, static_cast<std::size_t>(last - s_.begin()));  // one past
  if (i0 >= i1) return best;

  auto scan = [&](std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      if (s_[i] > s_hi || s_[i + 1] < s_lo) continue;
      const Vec2 a = points_[i];
      const Vec2 ab = points_[i + 1] - a;
      const double len = s_[i + 1] - s_[i];
      if (len <= 0.0) continue;
      double t = dot(p - a, ab) / (len * len);
      const double t_lo = std::max(0.0, (s_lo - s_[i]) / len);
      const double t_hi = std::min(1.0, (s_hi - s_[i]) / len);
      t = std::clamp(t, t_lo, t_hi);
      const Vec2 off = p - (a + ab * t);
      const double d2 = dot(off, off);
      // Ties go to the lowest segment index whatever the visiting order.
      if (d2 < best.distance || (d2 == best.distance && i < best.segment)) {
        best = {s_[i] + t * len, cross(ab, p - a) / len, d2, i};
      }
    }
  };

  // Best-first over chunk bounding boxes.
  const std::size_t k0 = i0 / kChunk, k1 = (i1 - 1) / kChunk;
  constexpr std::size_t kInline = 32;
  std::array<std::pair<double, std::size_t>, kInline> inline_order;
  std::vector<std::pair<double, std::size_t>> heap_order;
  std::pair<double, std::size_t>* order = inline_order.data();
  if (k1 - k0 + 1 > kInline) {
    heap_order.resize(k1 - k0 + 1);
    order = heap_order.data();
  }
  const std::size_t n_chunks = k1 - k0 + 1;
  for (std::size_t k = k0; k <= k1; ++k) {
    const Bounds& b = chunks_[k];
    const double dx = std::max({b.lo.x - p.x, 0.0, p.x - b.hi.x});
    const double dy = std::max({b.lo.y - p.y, 0.0, p.y - b.hi.y});
    order[k - k0] = {dx * dx + dy * dy, k};
  }
  std::sort(order, order + n_chunks);
  for (std::size_t j = 0; j < n_chunks; ++j) {
    if (order[j].first > best.distance) break;
    const std::size_t k = order[j].second;
    scan(std::max(i0, k * kChunk), std::min(i1, (k + 1) * kChunk));
  }
  best.distance = std::sqrt(best.distance);
  return best;
}

std::pair<Vec2, Vec2> Polyline::bounds(double s_lo, double s_hi) const {
  if (points_.size() < 2) {
    const Vec2 p = points_.empty() ? Vec2{} : points_[0];
    return {p, p};
  }
  const std::size_t k0 = segment_index(std::clamp(s_lo, 0.0, length())) / kChunk;
  const std::size_t k1 = segment_index(std::clamp(s_hi, 0.0, length())) / kChunk;
  Vec2 lo = chunks_[k0].lo, hi = chunks_[k0].hi;
  for (std::size_t k = k0 + 1; k <= k1; ++k) {
    lo = {std::min(lo.x, chunks_[k].lo.x), std::min(lo.y, chunks_[k].lo.y)};
    hi = {std::max(hi.x, chunks_[k].hi.x), std::max(hi.y, chunks_[k].hi.y)};
  }
  return {lo, hi};
}

std::vector<Vec2> Polyline::slice(double s_lo, double s_hi) const {
  std::vector<Vec2> out;
  if (points_.empty()) return out;
  s_lo = std::clamp(s_lo, 0.0, length());
  s_hi = std::clamp(s_hi, s_lo, length());
  out.push_back(point_at(s_lo));
  for (std::size_t i = 0; i < points_.size(); ++i) {
    if (s_[i] > s_lo && s_[i] < s_hi) out.push_back(points_[i]);
  }
  out.push_back(point_at(s_hi));
  return out;
}

}  // namespace scenesim
