#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace tip::geometry {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  friend constexpr Vec2 operator+(Vec2 a, Vec2 b) noexcept { return {a.x + b.x, a.y + b.y}; }
  friend constexpr Vec2 operator-(Vec2 a, Vec2 b) noexcept { return {a.x - b.x, a.y - b.y}; }
  friend constexpr Vec2 operator*(double s, Vec2 a) noexcept { return {s * a.x, s * a.y}; }
  friend constexpr bool operator==(Vec2, Vec2) = default;
};

constexpr double dot(Vec2 a, Vec2 b) noexcept { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) noexcept { return a.x * b.y - a.y * b.x; }
inline double length(Vec2 a) noexcept { return std::hypot(a.x, a.y); }
inline Vec2 heading_vector(double heading) noexcept { return {std::cos(heading), std::sin(heading)}; }

/// Wraps to (-pi, pi].
inline double normalize_angle(double a) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a <= -std::numbers::pi) a += two_pi;
  if (a > std::numbers::pi) a -= two_pi;
  return a;
}

/// Rectangle of given length (along heading) and width.
struct OrientedBox {
  Vec2 center;
  double heading = 0.0;
  double length = 0.0;
  double width = 0.0;

  std::array<Vec2, 4> corners() const noexcept {
    const Vec2 f = heading_vector(heading);
    const Vec2 l{-f.y, f.x};
    const double hl = 0.5 * length;
    const double hw = 0.5 * width;
    return {center + hl * f + hw * l, center - hl * f + hw * l, center - hl * f - hw * l,
            center + hl * f - hw * l};
  }

  double circumradius() const noexcept { return 0.5 * std::hypot(length, width); }
};

namespace detail {

inline bool separated_on(const std::array<Vec2, 4>& a, const std::array<Vec2, 4>& b, Vec2 axis) {
  double amin = std::numeric_limits<double>::infinity(), amax = -amin;
  double bmin = amin, bmax = -amin;
  for (const auto& p : a) {
    const double v = dot(p, axis);
    amin = std::min(amin, v);
    amax = std::max(amax, v);
  }
  for (const auto& p : b) {
    const double v = dot(p, axis);
    bmin = std::min(bmin, v);
    bmax = std::max(bmax, v);
  }
  return amax < bmin || bmax < amin;
}

inline double point_segment_distance(Vec2 p, Vec2 a, Vec2 b) noexcept {
  const Vec2 ab = b - a;
  const double den = dot(ab, ab);
  double t = den > 0.0 ? dot(p - a, ab) / den : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return length(p - (a + t * ab));
}

}  // namespace detail

/// Separating-axis test; touching boxes count as intersecting.
inline bool intersects(const OrientedBox& a, const OrientedBox& b) noexcept {
  const auto ca = a.corners();
  const auto cb = b.corners();
  const Vec2 axes[4] = {heading_vector(a.heading), heading_vector(a.heading + std::numbers::pi / 2),
                        heading_vector(b.heading), heading_vector(b.heading + std::numbers::pi / 2)};
  for (const auto& ax : axes)
    if (detail::separated_on(ca, cb, ax)) return false;
  return true;
}

/// Minimum Euclidean distance between two rectangles (0 when they overlap).
inline double distance(const OrientedBox& a, const OrientedBox& b) noexcept {
  if (intersects(a, b)) return 0.0;
  const auto ca = a.corners();
  const auto cb = b.corners();
  double best = std::numeric_limits<double>::infinity();
  for (int i = 0; i < 4; ++i) {
    const Vec2 a0 = ca[i], a1 = ca[(i + 1) % 4];
    const Vec2 b0 = cb[i], b1 = cb[(i + 1) % 4];
    for (int j = 0; j < 4; ++j) {
      best = std::min(best, detail::point_segment_distance(cb[j], a0, a1));
      best = std::min(best, detail::point_segment_distance(ca[j], b0, b1));
    }
  }
  return best;
}

/// Station/lateral coordinates along a polyline.
struct FrenetPoint {
  double station;
  double lateral;
};

/// Arclength-parametrised polyline; extrapolates linearly past both ends.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Vec2> pts) : pts_(std::move(pts)) {
    stations_.reserve(pts_.size());
    double s = 0.0;
    for (std::size_t i = 0; i < pts_.size(); ++i) {
      if (i > 0) s += length(pts_[i] - pts_[i - 1]);
      stations_.push_back(s);
    }
  }

  const std::vector<Vec2>& points() const noexcept { return pts_; }
  double total_length() const noexcept { return stations_.empty() ? 0.0 : stations_.back(); }

  /// Position and tangent heading at a station.
  std::pair<Vec2, double> at(double station) const noexcept {
    const std::size_t seg = segment_for(station);
    const Vec2 a = pts_[seg], b = pts_[seg + 1];
    const double len = stations_[seg + 1] - stations_[seg];
    const Vec2 t = (1.0 / len) * (b - a);
    return {a + (station - stations_[seg]) * t, std::atan2(t.y, t.x)};
  }

  Vec2 point(FrenetPoint f) const noexcept {
    const auto [p, h] = at(f.station);
    return p + f.lateral * Vec2{-std::sin(h), std::cos(h)};
  }

  /// Closest-point projection (signed lateral, left positive).
  FrenetPoint project(Vec2 p) const noexcept {
    double best_d = std::numeric_limits<double>::infinity();
    FrenetPoint best{0.0, 0.0};
    const std::size_t segs = pts_.size() - 1;
    for (std::size_t i = 0; i < segs; ++i) {
      const Vec2 a = pts_[i], b = pts_[i + 1];
      const Vec2 ab = b - a;
      const double len = stations_[i + 1] - stations_[i];
      double t = dot(p - a, ab) / (len * len);
      if (i > 0) t = std::max(t, 0.0);
      if (i + 1 < segs) t = std::min(t, 1.0);
      const Vec2 c = a + t * ab;
      const double d = length(p - c);
      if (d < best_d) {
        best_d = d;
        const double side = cross(ab, p - a) >= 0.0 ? 1.0 : -1.0;
        best = {stations_[i] + t * len, side * d};
      }
    }
    return best;
  }

 private:
  std::size_t segment_for(double station) const noexcept {
    auto it = std::upper_bound(stations_.begin(), stations_.end(), station);
    std::size_t idx = it == stations_.begin() ? 0 : static_cast<std::size_t>(it - stations_.begin()) - 1;
    return std::min(idx, pts_.size() - 2);
  }

  std::vector<Vec2> pts_;
  std::vector<double> stations_;
};

}  // namespace tip::geometry
