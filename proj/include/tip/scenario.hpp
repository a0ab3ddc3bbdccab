#pragma once

// World model consumed by the planner, synthetic perception-noise injectors,
// and stochastic world-state distributions built from per-object Gaussians.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tip/errors.hpp"
#include "tip/geometry.hpp"
#include "tip/rng.hpp"

namespace tip::scenario {

using geometry::Vec2;

enum class Category { kVehicle, kPedestrian, kCyclist, kCone };

inline std::string_view to_string(Category c) {
  switch (c) {
    case Category::kVehicle: return "vehicle";
    case Category::kPedestrian: return "pedestrian";
    case Category::kCyclist: return "cyclist";
    case Category::kCone: return "cone";
  }
  return "vehicle";
}

inline std::optional<Category> category_from_string(std::string_view s) {
  if (s == "vehicle") return Category::kVehicle;
  if (s == "pedestrian") return Category::kPedestrian;
  if (s == "cyclist") return Category::kCyclist;
  if (s == "cone") return Category::kCone;
  return std::nullopt;
}

struct Size2 {
  double length = 4.5;
  double width = 2.0;
  friend bool operator==(const Size2&, const Size2&) = default;
};

struct WorldObject {
  std::string id;
  Category category = Category::kVehicle;
  Vec2 center;
  double heading = 0.0;  ///< radians, (-pi, pi]
  double speed = 0.0;    ///< m/s
  Size2 size;

  geometry::OrientedBox box_at(double t) const noexcept {
    return {center + (speed * t) * geometry::heading_vector(heading), heading, size.length,
            size.width};
  }

  friend bool operator==(const WorldObject&, const WorldObject&) = default;
};

struct EgoState {
  Vec2 center;
  double heading = 0.0;
  double speed = 0.0;
  Size2 size;
  friend bool operator==(const EgoState&, const EgoState&) = default;
};

struct RoadCorridor {
  std::vector<Vec2> centerline;
  double half_width = 3.0;

  geometry::Polyline polyline() const { return geometry::Polyline(centerline); }
  friend bool operator==(const RoadCorridor&, const RoadCorridor&) = default;
};

struct Scenario {
  std::string id;
  EgoState ego;
  std::vector<WorldObject> objects;
  RoadCorridor corridor;
  double horizon_s = 3.0;
  double dt_s = 0.1;

  std::size_t steps() const noexcept {
    return static_cast<std::size_t>(std::llround(horizon_s / dt_s));
  }

  const WorldObject* find(std::string_view object_id) const noexcept {
    for (const auto& o : objects)
      if (o.id == object_id) return &o;
    return nullptr;
  }

  friend bool operator==(const Scenario&, const Scenario&) = default;
};

namespace detail {

inline bool finite(Vec2 v) noexcept { return std::isfinite(v.x) && std::isfinite(v.y); }

inline void check_size(const Size2& s, const std::string& field) {
  if (!(std::isfinite(s.length) && s.length > 0.0)) throw SchemaError(field + ".length", "must be finite and > 0");
  if (!(std::isfinite(s.width) && s.width > 0.0)) throw SchemaError(field + ".width", "must be finite and > 0");
}

inline void check_heading(double h, const std::string& field) {
  if (!std::isfinite(h)) throw SchemaError(field, "must be finite");
  if (!(h > -std::numbers::pi - 1e-12 && h <= std::numbers::pi + 1e-12)) throw SchemaError(field, "must lie in (-pi, pi]");
}

}  // namespace detail

/// Enforces every type invariant; the field path of the first violation is
/// reported.
inline void validate(const Scenario& s) {
  using detail::finite;
  if (!finite(s.ego.center)) throw SchemaError("ego.center", "must be finite");
  detail::check_heading(s.ego.heading, "ego.heading");
  if (!(std::isfinite(s.ego.speed) && s.ego.speed >= 0.0)) throw SchemaError("ego.speed", "must be finite and >= 0");
  detail::check_size(s.ego.size, "ego.size");

  std::set<std::string> ids;
  for (std::size_t i = 0; i < s.objects.size(); ++i) {
    const auto& o = s.objects[i];
    const std::string f = "objects[" + std::to_string(i) + "]";
    if (o.id.empty()) throw SchemaError(f + ".id", "must be non-empty");
    if (!ids.insert(o.id).second) throw SchemaError(f + ".id", "duplicate object id '" + o.id + "'");
    if (!finite(o.center)) throw SchemaError(f + ".center", "must be finite");
    detail::check_heading(o.heading, f + ".heading");
    if (!(std::isfinite(o.speed) && o.speed >= 0.0)) throw SchemaError(f + ".speed", "must be finite and >= 0");
    detail::check_size(o.size, f + ".size");
  }

  const auto& c = s.corridor;
  if (c.centerline.size() < 2) throw SchemaError("corridor.centerline", "needs at least 2 points");
  for (std::size_t i = 0; i < c.centerline.size(); ++i) {
    if (!finite(c.centerline[i])) throw SchemaError("corridor.centerline", "points must be finite");
    if (i > 0 && !(geometry::length(c.centerline[i] - c.centerline[i - 1]) > 0.0))
      throw SchemaError("corridor.centerline", "arclength must increase strictly");
  }
  if (!(std::isfinite(c.half_width) && c.half_width > 0.0)) throw SchemaError("corridor.half_width", "must be > 0");

  if (!(s.dt_s > 0.0)) throw SchemaError("dt_s", "must be > 0");
  if (!(s.horizon_s > 0.0)) throw SchemaError("horizon_s", "must be > 0");
  const double ratio = s.horizon_s / s.dt_s;
  if (std::abs(ratio - std::round(ratio)) > 1e-9 * std::max(1.0, ratio))
    throw SchemaError("horizon_s", "must be an integer multiple of dt_s");
}

// ---------------------------------------------------------------------------
// Noise injection
// ---------------------------------------------------------------------------

enum class NoiseKind { kFalsePositive, kMissDetection, kLocation, kYaw, kVelocity, kSize };

inline constexpr NoiseKind kAllNoiseKinds[] = {NoiseKind::kFalsePositive, NoiseKind::kMissDetection,
                                              NoiseKind::kLocation,      NoiseKind::kYaw,
                                              NoiseKind::kVelocity,      NoiseKind::kSize};

inline std::string_view to_string(NoiseKind k) {
  switch (k) {
    case NoiseKind::kFalsePositive: return "false_positive";
    case NoiseKind::kMissDetection: return "miss_detection";
    case NoiseKind::kLocation: return "location";
    case NoiseKind::kYaw: return "yaw";
    case NoiseKind::kVelocity: return "velocity";
    case NoiseKind::kSize: return "size";
  }
  return "location";
}

inline std::optional<NoiseKind> noise_kind_from_string(std::string_view s) {
  for (NoiseKind k : kAllNoiseKinds)
    if (to_string(k) == s) return k;
  return std::nullopt;
}

/// magnitude is the ghost count, the miss rate, or the Gaussian sd.
struct NoiseSpec {
  NoiseKind kind = NoiseKind::kLocation;
  double magnitude = 0.0;
  std::uint64_t seed = 0;

  void validate() const {
    if (!std::isfinite(magnitude) || magnitude < 0.0)
      throw ContractError(std::string(to_string(kind)) + " magnitude must be finite and >= 0");
    if (kind == NoiseKind::kMissDetection && magnitude > 1.0)
      throw ContractError("miss detection rate must lie in [0, 1]");
    if (kind == NoiseKind::kFalsePositive && magnitude != std::floor(magnitude))
      throw ContractError("false positive count must be an integer");
  }
};

/// Ghost placement box, ego frame: longitudinal x lateral, metres.
inline constexpr double kGhostBoxLongitudinal = 70.0;
inline constexpr double kGhostBoxLateral = 30.0;
inline constexpr double kGhostHeadingSd = 0.2;
inline constexpr double kGhostSpeedSd = 1.0;
inline constexpr double kMinObjectExtent = 0.1;

/// Applies one synthetic perception error. Pure in (scenario, noise).
inline Scenario inject(const Scenario& s, const NoiseSpec& noise) {
  noise.validate();
  Scenario out = s;
  const std::uint64_t tag = rng::tags::kInjection + static_cast<std::uint64_t>(noise.kind);
  const double m = noise.magnitude;

  switch (noise.kind) {
    case NoiseKind::kMissDetection: {
      out.objects.clear();
      for (std::size_t i = 0; i < s.objects.size(); ++i) {
        rng::CounterRng g(noise.seed, tag, i);
        if (!g.bernoulli(m)) out.objects.push_back(s.objects[i]);
      }
      break;
    }
    case NoiseKind::kFalsePositive: {
      const auto count = static_cast<std::size_t>(m);
      const Vec2 f = geometry::heading_vector(s.ego.heading);
      const Vec2 l{-f.y, f.x};
      std::size_t serial = 0;
      for (std::size_t k = 0; k < count; ++k) {
        rng::CounterRng g(noise.seed, tag, k);
        WorldObject ghost;
        do {
          ghost.id = "ghost-" + std::to_string(serial++);
        } while (out.find(ghost.id) != nullptr);
        ghost.category = Category::kVehicle;
        const double lon = g.uniform(-0.5 * kGhostBoxLongitudinal, 0.5 * kGhostBoxLongitudinal);
        const double lat = g.uniform(-0.5 * kGhostBoxLateral, 0.5 * kGhostBoxLateral);
        ghost.center = s.ego.center + lon * f + lat * l;
        ghost.heading = geometry::normalize_angle(s.ego.heading + g.normal(0.0, kGhostHeadingSd));
        ghost.speed = std::max(0.0, s.ego.speed + g.normal(0.0, kGhostSpeedSd));
        ghost.size = Size2{4.5, 2.0};
        out.objects.push_back(ghost);
      }
      break;
    }
    default: {
      for (std::size_t i = 0; i < out.objects.size(); ++i) {
        rng::CounterRng g(noise.seed, tag, i);
        auto& o = out.objects[i];
        switch (noise.kind) {
          case NoiseKind::kLocation:
            o.center.x += g.normal(0.0, m);
            o.center.y += g.normal(0.0, m);
            break;
          case NoiseKind::kYaw:
            o.heading = geometry::normalize_angle(o.heading + g.normal(0.0, m));
            break;
          case NoiseKind::kVelocity:
            o.speed = std::max(0.0, o.speed + g.normal(0.0, m));
            break;
          case NoiseKind::kSize:
            o.size.length = std::max(kMinObjectExtent, o.size.length + g.normal(0.0, m));
            o.size.width = std::max(kMinObjectExtent, o.size.width + g.normal(0.0, m));
            break;
          default: break;
        }
      }
      break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// World-state distributions
// ---------------------------------------------------------------------------

/// Independent zero-mean Gaussian standard deviations for one object.
struct ObjectUncertainty {
  double location = 0.0;
  double yaw = 0.0;
  double velocity = 0.0;
  double size = 0.0;

  bool is_zero() const noexcept { return location == 0.0 && yaw == 0.0 && velocity == 0.0 && size == 0.0; }
  friend bool operator==(const ObjectUncertainty&, const ObjectUncertainty&) = default;
};

using UncertaintyMap = std::map<std::string, ObjectUncertainty, std::less<>>;

/// A scenario plus per-object Gaussian uncertainty. Without uncertainty it is
/// the point mass at the scenario.
class ScenarioDistribution {
 public:
  ScenarioDistribution(Scenario nominal, UncertaintyMap noise)
      : nominal_(std::move(nominal)), noise_(std::move(noise)) {}

  const Scenario& nominal() const noexcept { return nominal_; }
  const UncertaintyMap& uncertainty() const noexcept { return noise_; }

  bool is_point_mass() const noexcept {
    return std::all_of(noise_.begin(), noise_.end(), [](const auto& kv) { return kv.second.is_zero(); });
  }

  /// Per-object draws are keyed by object id, so two distributions sharing an
  /// object are coupled through that object when fed the same generator.
  Scenario sample(rng::CounterRng& g) const {
    Scenario s = nominal_;
    if (is_point_mass()) return s;
    const std::uint64_t base = g();
    for (auto& o : s.objects) {
      auto it = noise_.find(o.id);
      if (it == noise_.end() || it->second.is_zero()) continue;
      const auto& u = it->second;
      rng::CounterRng og(rng::combine(base, rng::fnv1a(o.id)));
      const double dx = og.normal(), dy = og.normal(), dh = og.normal(), dv = og.normal();
      const double dl = og.normal(), dw = og.normal();
      o.center.x += u.location * dx;
      o.center.y += u.location * dy;
      o.heading = geometry::normalize_angle(o.heading + u.yaw * dh);
      o.speed = std::max(0.0, o.speed + u.velocity * dv);
      o.size.length = std::max(kMinObjectExtent, o.size.length + u.size * dl);
      o.size.width = std::max(kMinObjectExtent, o.size.width + u.size * dw);
    }
    return s;
  }

 private:
  Scenario nominal_;
  UncertaintyMap noise_;
};

inline ScenarioDistribution as_distribution(const Scenario& s, const UncertaintyMap& noise = {}) {
  validate(s);
  for (const auto& [id, u] : noise) {
    if (s.find(id) == nullptr) throw ContractError("uncertainty given for unknown object '" + id + "'");
    for (double v : {u.location, u.yaw, u.velocity, u.size})
      if (!(std::isfinite(v) && v >= 0.0))
        throw ContractError("uncertainty of object '" + id + "' must be finite and >= 0");
  }
  return ScenarioDistribution(s, noise);
}

// ---------------------------------------------------------------------------
// Built-in scenarios
// ---------------------------------------------------------------------------

/// Straight road along +x, ego moving at 14 m/s with its front bumper at x = 0
/// and a parked vehicle 50 m ahead. A positive `obstacle_gap` places a
/// stationary vehicle with its rear face that far ahead of the ego's front
/// bumper; a negative one places it |gap| behind the ego's rear bumper.
inline Scenario braking_study_scenario(std::optional<double> obstacle_gap, double ego_speed = 14.0) {
  Scenario s;
  s.id = obstacle_gap ? "braking-" + std::to_string(static_cast<int>(std::lround(*obstacle_gap))) : "braking-none";
  s.ego.size = Size2{4.5, 2.0};
  s.ego.center = {-0.5 * s.ego.size.length, 0.0};
  s.ego.heading = 0.0;
  s.ego.speed = ego_speed;
  s.corridor.centerline = {{-200.0, 0.0}, {300.0, 0.0}};
  s.corridor.half_width = 3.0;

  WorldObject parked;
  parked.id = "parked";
  parked.category = Category::kVehicle;
  parked.size = Size2{4.5, 2.0};
  parked.center = {50.0 + 0.5 * parked.size.length, 0.0};
  s.objects.push_back(parked);

  if (obstacle_gap) {
    WorldObject obstacle = parked;
    obstacle.id = "obstacle";
    const double g = *obstacle_gap;
    obstacle.center.x = g >= 0.0 ? g + 0.5 * obstacle.size.length
                                 : -s.ego.size.length + g - 0.5 * obstacle.size.length;
    s.objects.insert(s.objects.begin(), obstacle);
  }
  return s;
}

/// Random urban-ish scene on a straight three-lane road: lead traffic in the
/// ego lane, traffic in both adjacent lanes, roadside pedestrians/cones, and a
/// follower behind the ego.
inline Scenario synthetic_scenario(std::uint64_t seed, std::size_t index) {
  rng::CounterRng g(seed, 0x5ce7a110ULL, index);
  constexpr double lane = 3.5;
  Scenario s;
  s.id = "synthetic-" + std::to_string(index);
  s.ego.size = Size2{4.5, 2.0};
  s.ego.center = {0.0, 0.0};
  s.ego.speed = g.uniform(8.0, 15.0);
  s.corridor.centerline = {{-200.0, 0.0}, {400.0, 0.0}};
  s.corridor.half_width = 1.5 * lane;

  std::size_t serial = 0;
  auto add = [&](Category c, Vec2 center, double heading, double speed, Size2 size) {
    WorldObject o;
    o.id = std::string(to_string(c)) + "-" + std::to_string(serial++);
    o.category = c;
    o.center = center;
    o.heading = geometry::normalize_angle(heading);
    o.speed = std::max(0.0, speed);
    o.size = size;
    s.objects.push_back(o);
  };

  const int leads = 1 + static_cast<int>(g.uniform() * 2.0);
  double x = 0.0;
  for (int i = 0; i < leads; ++i) {
    x += g.uniform(15.0, 35.0);
    add(Category::kVehicle, {x, g.normal(0.0, 0.2)}, g.normal(0.0, 0.02), s.ego.speed * g.uniform(0.2, 0.9),
        Size2{g.uniform(4.0, 5.0), g.uniform(1.8, 2.1)});
  }
  for (double side : {-1.0, 1.0}) {
    const int n = 1 + static_cast<int>(g.uniform() * 2.0);
    for (int i = 0; i < n; ++i)
      add(Category::kVehicle, {g.uniform(-15.0, 45.0), side * lane + g.normal(0.0, 0.2)}, g.normal(0.0, 0.02),
          s.ego.speed * g.uniform(0.6, 1.1), Size2{g.uniform(4.0, 5.0), g.uniform(1.8, 2.1)});
  }
  if (g.bernoulli(0.6))
    add(Category::kPedestrian, {g.uniform(10.0, 40.0), (g.bernoulli(0.5) ? 1.0 : -1.0) * g.uniform(4.0, 5.5)},
        g.uniform(-std::numbers::pi, std::numbers::pi), g.uniform(0.0, 1.5), Size2{0.6, 0.6});
  if (g.bernoulli(0.5))
    add(Category::kCone, {g.uniform(10.0, 45.0), (g.bernoulli(0.5) ? 1.0 : -1.0) * g.uniform(1.8, 2.6)}, 0.0,
        0.0, Size2{0.4, 0.4});
  if (g.bernoulli(0.5))
    add(Category::kCyclist, {g.uniform(5.0, 40.0), (g.bernoulli(0.5) ? 1.0 : -1.0) * g.uniform(2.8, 4.0)},
        g.normal(0.0, 0.05), g.uniform(3.0, 6.0), Size2{1.8, 0.7});
  add(Category::kVehicle, {-g.uniform(10.0, 25.0), g.normal(0.0, 0.2)}, 0.0, s.ego.speed * g.uniform(0.8, 1.1),
      Size2{4.5, 2.0});
  return s;
}

}  // namespace tip::scenario
