#pragma once

#include <array>
#include <cmath>
#include <span>
#include <utility>
#include <vector>

namespace scenesim {

struct Vec2 {
  double x{0.0};
  double y{0.0};

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double k) const { return {x * k, y * k}; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }
inline Vec2 unit_from_heading(double heading) {
  return {std::cos(heading), std::sin(heading)};
}
inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle), s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

// Wraps into (-pi, pi].
double wrap_angle(double angle);
// Wraps into [0, 2pi).
double wrap_two_pi(double angle);

// Closed-segment intersection; collinear overlap and touching endpoints count.
bool segments_intersect(Vec2 p1, Vec2 p2, Vec2 q1, Vec2 q2);

// Closed polygon membership: points on an edge or vertex are inside.
bool point_in_polygon(Vec2 p, std::span<const Vec2> polygon);

// Pairwise brute-force check between two polylines.
bool polylines_intersect(std::span<const Vec2> a, std::span<const Vec2> b);
std::size_t polyline_intersection_count(std::span<const Vec2> a,
                                        std::span<const Vec2> b);

double point_segment_distance(Vec2 p, Vec2 a, Vec2 b);
double point_polyline_distance(Vec2 p, std::span<const Vec2> polyline);

// Oriented rectangle centred at `center`, `length` along `heading`.
struct OrientedBox {
  Vec2 center;
  double heading{0.0};
  double length{0.0};
  double width{0.0};

  // Counter-clockwise: front-left, rear-left, rear-right, front-right.
  std::array<Vec2, 4> corners() const;
  double area() const { return length * width; }
  bool contains(Vec2 p) const;
};

// Separating-axis overlap test; touching boxes count as overlapping.
bool boxes_overlap(const OrientedBox& a, const OrientedBox& b);

// Arclength-parameterised polyline.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> points);

  struct Projection {
    double s{0.0};
    double lateral{0.0};  // signed, positive to the left of travel direction
    double distance{0.0};
    std::size_t segment{0};
  };

  const std::vector<Vec2>& points() const { return points_; }
  const std::vector<double>& arclengths() const { return s_; }
  double length() const { return s_.empty() ? 0.0 : s_.back(); }
  bool empty() const { return points_.size() < 2; }

  Vec2 point_at(double s) const;
  double heading_at(double s) const;
  Projection project(Vec2 p) const;
  // Projection restricted to arclength window [s_lo, s_hi].
  Projection project(Vec2 p, double s_lo, double s_hi) const;

  // Axis-aligned box containing the polyline over [s_lo, s_hi] (may be loose).
  std::pair<Vec2, Vec2> bounds(double s_lo, double s_hi) const;

  // Subsequence covering [s_lo, s_hi] with interpolated endpoints.
  std::vector<Vec2> slice(double s_lo, double s_hi) const;

 private:
  std::size_t segment_index(double s) const;

  static constexpr std::size_t kChunk = 16;  // segments per bounding box
  struct Bounds {
    Vec2 lo, hi;
  };

  std::vector<Vec2> points_;
  std::vector<double> s_;
  std::vector<Bounds> chunks_;
};

}  // namespace scenesim
