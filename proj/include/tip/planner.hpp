#pragma once

// A deterministic utility-maximising planner over a finite candidate lattice:
// jerk-limited longitudinal profiles (one per target acceleration) crossed
// with smooth lateral swerves that return to the lane centre. Actions are
// scored by the Monte-Carlo expected utility over sampled world states.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tip/errors.hpp"
#include "tip/estimator.hpp"
#include "tip/geometry.hpp"
#include "tip/rng.hpp"
#include "tip/scenario.hpp"

namespace tip::planner {

using scenario::Scenario;

/// One weight per cost group.
struct UtilityWeights {
  double jerk_weight = 0.1;
  double safety_weight = 1.0;
  double legal_weight = 1.0;
  double progress_weight = 1.0;
  double collision_penalty = 200.0;

  friend bool operator==(const UtilityWeights&, const UtilityWeights&) = default;
};

struct PlannerConfig {
  std::string name = "custom";
  double accel_min = -6.0;  ///< m/s^2
  double accel_max = 2.0;
  double jerk_min = -12.0;  ///< m/s^3, used when decelerating
  double jerk_max = 4.0;    ///< m/s^3, used when accelerating
  std::vector<double> lateral_offsets{-1.5, 0.0, 1.5};
  std::vector<double> accel_targets{-6.0, -4.0, -2.0, 0.0, 1.0};
  UtilityWeights weights;
  double utility_bound_m = 1000.0;
  double safe_distance_m = 1.5;
  /// Per-pose Gaussian position noise applied inside utility sampling; 0 = off.
  double control_noise_sd = 0.0;

  void validate() const {
    if (!(accel_min < 0.0 && accel_max > 0.0)) throw ContractError("planner config needs accel_min < 0 < accel_max");
    if (!(jerk_min < 0.0 && jerk_max > 0.0)) throw ContractError("planner config needs jerk_min < 0 < jerk_max");
    if (!(utility_bound_m > 0.0)) throw ContractError("planner config needs utility_bound_m > 0");
    const auto& w = weights;
    for (double v : {w.jerk_weight, w.safety_weight, w.legal_weight, w.progress_weight, w.collision_penalty})
      if (!(v >= 0.0)) throw ContractError("utility weights must be non-negative");
    if (w.collision_penalty > utility_bound_m)
      throw ContractError("collision_penalty must not exceed utility_bound_m");
    if (!(safe_distance_m >= 0.0)) throw ContractError("safe_distance_m must be >= 0");
    if (!(control_noise_sd >= 0.0)) throw ContractError("control_noise_sd must be >= 0");
  }

  friend bool operator==(const PlannerConfig&, const PlannerConfig&) = default;
};

/// Comfort-oriented preset: braking capped at -4 m/s^2, jerk -4 m/s^3.
inline PlannerConfig av1_preset() {
  PlannerConfig c;
  c.name = "av1";
  c.accel_min = -4.0;
  c.jerk_min = -4.0;
  return c;
}

/// Safety-oriented preset: braking down to -6 m/s^2, jerk -12 m/s^3.
inline PlannerConfig av2_preset() {
  PlannerConfig c;
  c.name = "av2";
  c.accel_min = -6.0;
  c.jerk_min = -12.0;
  return c;
}

// ---------------------------------------------------------------------------
// Longitudinal motion
// ---------------------------------------------------------------------------

struct LongitudinalState {
  double s;
  double v;
  double a;
  double j;
};

/// Ramp from zero acceleration to `target` at the jerk limit, hold, and stop
/// (speed floored at zero) when decelerating.
class LongitudinalProfile {
 public:
  LongitudinalProfile(double v0, double target, double jerk_up, double jerk_down)
      : v0_(std::max(0.0, v0)), target_(target) {
    jerk_ = target >= 0.0 ? jerk_up : jerk_down;
    ramp_ = target == 0.0 ? 0.0 : target / jerk_;
    stop_ = std::numeric_limits<double>::infinity();
    if (target < 0.0) {
      const double v_ramp = v0_ + 0.5 * jerk_ * ramp_ * ramp_;
      stop_ = v_ramp <= 0.0 ? std::sqrt(-2.0 * v0_ / jerk_) : ramp_ + v_ramp / -target;
    }
  }

  double stop_time() const noexcept { return stop_; }
  double ramp_time() const noexcept { return ramp_; }

  LongitudinalState at(double t) const noexcept {
    if (t >= stop_) {
      const auto s = moving(stop_);
      return {s.s, 0.0, 0.0, 0.0};
    }
    return moving(t);
  }

 private:
  LongitudinalState moving(double t) const noexcept {
    if (t < ramp_) return {v0_ * t + jerk_ * t * t * t / 6.0, v0_ + 0.5 * jerk_ * t * t, jerk_ * t, jerk_};
    const double sr = v0_ * ramp_ + jerk_ * ramp_ * ramp_ * ramp_ / 6.0;
    const double vr = v0_ + 0.5 * jerk_ * ramp_ * ramp_;
    const double tau = t - ramp_;
    return {sr + vr * tau + 0.5 * target_ * tau * tau, vr + target_ * tau, target_, 0.0};
  }

  double v0_;
  double target_;
  double jerk_;
  double ramp_;
  double stop_;
};

/// Distance to standstill when ramping the deceleration at `jerk_limit` up to
/// `accel_limit` and holding it; triangular profile when the speed runs out
/// during the ramp.
inline double stopping_distance(double v0, double accel_limit, double jerk_limit) {
  if (!(accel_limit < 0.0 && jerk_limit < 0.0)) throw ContractError("stopping_distance needs negative limits");
  if (v0 <= 0.0) return 0.0;
  const double ramp = accel_limit / jerk_limit;
  const double v_ramp = v0 + 0.5 * jerk_limit * ramp * ramp;
  if (v_ramp <= 0.0) {
    const double t = std::sqrt(-2.0 * v0 / jerk_limit);
    return v0 * t + jerk_limit * t * t * t / 6.0;
  }
  const double d_ramp = v0 * ramp + jerk_limit * ramp * ramp * ramp / 6.0;
  return d_ramp + v_ramp * v_ramp / (-2.0 * accel_limit);
}

// ---------------------------------------------------------------------------
// Trajectories
// ---------------------------------------------------------------------------

struct Pose {
  double t;
  double x;
  double y;
  double heading;
  double speed;
  double accel;
  double jerk;
  double station;  ///< arclength along the corridor centreline
  double lateral;  ///< offset from the centreline, left positive

  friend bool operator==(const Pose&, const Pose&) = default;
};

struct Trajectory {
  std::string action_id;
  double accel_target = 0.0;
  double lateral_offset = 0.0;
  std::vector<Pose> poses;

  double progress() const noexcept { return poses.empty() ? 0.0 : poses.back().station - poses.front().station; }
  double horizon() const noexcept { return poses.empty() ? 0.0 : poses.back().t; }
};

inline std::string action_id(double accel_target, double lateral_offset) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "acc%+.2f_lat%+.2f", accel_target, lateral_offset);
  return buf;
}

namespace detail {

inline double smoothstep5(double x) noexcept { return x * x * x * (10.0 + x * (-15.0 + 6.0 * x)); }
inline double smoothstep5_d(double x) noexcept { return 30.0 * x * x * (1.0 - x) * (1.0 - x); }

/// Shift out over the first third of the path, hold, return over the last third.
inline double swerve(double u) noexcept {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  if (u < 1.0 / 3.0) return smoothstep5(3.0 * u);
  if (u <= 2.0 / 3.0) return 1.0;
  return smoothstep5(3.0 * (1.0 - u));
}
inline double swerve_d(double u) noexcept {
  if (u <= 0.0 || u >= 1.0) return 0.0;
  if (u < 1.0 / 3.0) return 3.0 * smoothstep5_d(3.0 * u);
  if (u <= 2.0 / 3.0) return 0.0;
  return -3.0 * smoothstep5_d(3.0 * (1.0 - u));
}

}  // namespace detail

/// Trajectory for one (target acceleration, lateral offset) pair.
inline Trajectory make_trajectory(const Scenario& s, const PlannerConfig& c, double accel_target,
                                  double lateral_offset) {
  const geometry::Polyline path = s.corridor.polyline();
  const geometry::FrenetPoint start = path.project(s.ego.center);
  const LongitudinalProfile lon(s.ego.speed, accel_target, c.jerk_max, c.jerk_min);
  const std::size_t steps = s.steps();
  const double total = lon.at(static_cast<double>(steps) * s.dt_s).s;

  Trajectory traj;
  traj.action_id = action_id(accel_target, lateral_offset);
  traj.accel_target = accel_target;
  traj.lateral_offset = lateral_offset;
  traj.poses.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    const double t = static_cast<double>(k) * s.dt_s;
    const auto st = lon.at(t);
    double l = 0.0, dl_ds = 0.0;
    if (total > 1e-6 && lateral_offset != 0.0) {
      const double u = st.s / total;
      l = lateral_offset * detail::swerve(u);
      dl_ds = lateral_offset * detail::swerve_d(u) / total;
    }
    const geometry::FrenetPoint f{start.station + st.s, start.lateral + l};
    const auto [base, tangent] = path.at(f.station);
    const geometry::Vec2 p = path.point(f);
    (void)base;
    traj.poses.push_back({t, p.x, p.y, geometry::normalize_angle(tangent + std::atan(dl_ds)), st.v, st.a, st.j,
                          f.station, f.lateral});
  }
  return traj;
}

/// Accel targets outside [accel_min, accel_max] are dropped. Every kept
/// target is paired with every lateral offset; the zero/zero "maintain"
/// action is always present.
inline std::vector<Trajectory> generate_candidates(const Scenario& s, const PlannerConfig& c) {
  c.validate();
  if (c.accel_targets.empty()) throw ContractError("planner config has no accel targets");
  if (c.lateral_offsets.empty()) throw ContractError("planner config has no lateral offsets");
  std::vector<double> targets;
  for (double a : c.accel_targets)
    if (a >= c.accel_min && a <= c.accel_max) targets.push_back(a);
  if (std::find(targets.begin(), targets.end(), 0.0) == targets.end()) targets.push_back(0.0);
  std::vector<double> offsets = c.lateral_offsets;
  if (std::find(offsets.begin(), offsets.end(), 0.0) == offsets.end()) offsets.push_back(0.0);

  std::vector<Trajectory> out;
  out.reserve(targets.size() * offsets.size());
  for (double a : targets)
    for (double l : offsets) out.push_back(make_trajectory(s, c, a, l));
  return out;
}

/// Checks speed >= 0, acceleration and jerk limits, and that every step is
/// the exact constant-jerk integral of its starting state. Steps containing a
/// phase switch (end of ramp, standstill) are checked against the speed
/// bracket instead. Returns a description of the first violation.
inline std::optional<std::string> check_kinematics(const Trajectory& traj, const PlannerConfig& c,
                                                   double tol = 1e-6) {
  const auto& p = traj.poses;
  for (std::size_t k = 0; k < p.size(); ++k) {
    const auto& q = p[k];
    if (!(q.speed >= 0.0)) return "negative speed at pose " + std::to_string(k);
    if (q.accel < c.accel_min - tol || q.accel > c.accel_max + tol)
      return "acceleration outside limits at pose " + std::to_string(k);
    if (q.jerk < c.jerk_min - tol || q.jerk > c.jerk_max + tol) return "jerk outside limits at pose " + std::to_string(k);
    if (k + 1 == p.size()) break;
    const auto& n = p[k + 1];
    const double dt = n.t - q.t;
    const double ds = n.station - q.station;
    const bool event = q.jerk != n.jerk || n.speed == 0.0;
    if (!event) {
      const double s_pred = q.speed * dt + 0.5 * q.accel * dt * dt + q.jerk * dt * dt * dt / 6.0;
      const double v_pred = q.speed + q.accel * dt + 0.5 * q.jerk * dt * dt;
      const double a_pred = q.accel + q.jerk * dt;
      if (std::abs(ds - s_pred) > tol || std::abs(n.speed - v_pred) > tol || std::abs(n.accel - a_pred) > tol)
        return "inconsistent kinematics between poses " + std::to_string(k) + " and " + std::to_string(k + 1);
    } else {
      const double lo = dt * std::min(q.speed, n.speed) - tol;
      const double hi = dt * std::max(q.speed, n.speed) + tol;
      if (ds < lo || ds > hi)
        return "displacement outside speed bracket between poses " + std::to_string(k) + " and " +
               std::to_string(k + 1);
    }
  }
  return std::nullopt;
}

// ---------------------------------------------------------------------------
// Utility
// ---------------------------------------------------------------------------

/// Cost groups of one (state, trajectory) pair, before weighting.
struct UtilityBreakdown {
  double mean_squared_jerk = 0.0;
  double safety = 0.0;  ///< sum over time and objects of hinge(d_safe - d)^2
  double corridor_violation = 0.0;  ///< m*s outside the corridor
  bool collision = false;
  double progress_shortfall = 0.0;  ///< metres short of the reference distance
  double value = 0.0;               ///< weighted, clamped utility
};

/// Distance the ego would cover holding accel_max from the first pose; the
/// progress term is measured against it so utilities stay <= 0.
inline double reference_progress(const Trajectory& traj, const PlannerConfig& c) {
  const double T = traj.horizon();
  return traj.poses.front().speed * T + 0.5 * c.accel_max * T * T;
}

inline UtilityBreakdown utility_breakdown(const Scenario& state, const Trajectory& traj, const PlannerConfig& c,
                                          rng::CounterRng* control_noise = nullptr) {
  UtilityBreakdown b;
  const auto& poses = traj.poses;
  if (poses.empty()) throw ContractError("trajectory has no poses");

  // Smooth motion: longitudinal jerk plus third differences of the lateral offset.
  double jerk2 = 0.0;
  for (std::size_t k = 0; k < poses.size(); ++k) {
    double lat_jerk = 0.0;
    if (k + 3 < poses.size()) {
      const double dt = poses[k + 1].t - poses[k].t;
      lat_jerk = (poses[k + 3].lateral - 3.0 * poses[k + 2].lateral + 3.0 * poses[k + 1].lateral - poses[k].lateral) /
                 (dt * dt * dt);
    }
    jerk2 += poses[k].jerk * poses[k].jerk + lat_jerk * lat_jerk;
  }
  b.mean_squared_jerk = jerk2 / static_cast<double>(poses.size());

  const geometry::Polyline corridor = state.corridor.polyline();
  const double d_safe = c.safe_distance_m;
  const double ego_r = 0.5 * std::hypot(state.ego.size.length, state.ego.size.width);
  const bool noisy = control_noise != nullptr && c.control_noise_sd > 0.0;

  for (std::size_t k = 0; k < poses.size(); ++k) {
    const auto& p = poses[k];
    geometry::Vec2 centre{p.x, p.y};
    if (noisy) {
      centre.x += control_noise->normal(0.0, c.control_noise_sd);
      centre.y += control_noise->normal(0.0, c.control_noise_sd);
    }
    const geometry::OrientedBox ego{centre, p.heading, state.ego.size.length, state.ego.size.width};
    for (const auto& o : state.objects) {
      const geometry::OrientedBox box = o.box_at(p.t);
      const double gap_bound = geometry::length(box.center - centre) - ego_r - box.circumradius();
      if (gap_bound > d_safe) continue;
      const double d = geometry::distance(ego, box);
      if (d == 0.0) b.collision = true;
      if (d < d_safe) b.safety += (d_safe - d) * (d_safe - d);
    }
    if (k + 1 < poses.size()) {
      const double lateral = std::abs(corridor.project(centre).lateral);
      const double excess = lateral + 0.5 * state.ego.size.width - state.corridor.half_width;
      if (excess > 0.0) b.corridor_violation += excess * (poses[k + 1].t - p.t);
    }
  }

  b.progress_shortfall = std::max(0.0, reference_progress(traj, c) - traj.progress());

  const auto& w = c.weights;
  const double penalty = w.jerk_weight * b.mean_squared_jerk + w.safety_weight * b.safety +
                         w.legal_weight * b.corridor_violation + (b.collision ? w.collision_penalty : 0.0) +
                         w.progress_weight * b.progress_shortfall;
  b.value = std::clamp(-penalty, -c.utility_bound_m, 0.0);
  return b;
}

/// U(s, a) in [-utility_bound_m, 0].
inline double utility(const Scenario& state, const Trajectory& traj, const PlannerConfig& c,
                      rng::CounterRng* control_noise = nullptr) {
  return utility_breakdown(state, traj, c, control_noise).value;
}

// ---------------------------------------------------------------------------
// Expected-utility maximisation
// ---------------------------------------------------------------------------

/// World-state draws for the estimator. A point mass is drawn once: the mean
/// of n identical utilities is that utility.
template <estimator::StateDistribution D>
std::vector<Scenario> draw_states(const D& dist, const estimator::SampleSpec& spec,
                                  std::uint64_t tag = rng::tags::kGroundTruth) {
  if (dist.is_point_mass()) return estimator::sample_states(dist, estimator::SampleSpec{1, spec.seed}, tag);
  return estimator::sample_states(dist, spec, tag);
}

/// Utility of one trajectory at every state; control-noise draws come from
/// stream (seed, kControlNoise, state index).
inline std::vector<double> utilities(const std::vector<Scenario>& states, const Trajectory& traj,
                                     const PlannerConfig& c, std::uint64_t seed) {
  std::vector<double> out(states.size());
  for (std::size_t i = 0; i < states.size(); ++i) {
    rng::CounterRng g(seed, rng::tags::kControlNoise, i);
    const double u = utility(states[i], traj, c, &g);
    if (!(std::abs(u) <= c.utility_bound_m))
      throw ContractError("utility bound violated at state index " + std::to_string(i) + " for action '" +
                          traj.action_id + "'");
    out[i] = u;
  }
  return out;
}

struct PlanResult {
  std::size_t a_star = 0;
  std::vector<Trajectory> candidates;
  std::vector<double> eu;

  const Trajectory& best() const { return candidates.at(a_star); }
};

/// Index of the maximum; ties go to the lexicographically smallest action id.
inline std::size_t argmax_action(const std::vector<Trajectory>& candidates, const std::vector<double>& eu) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < eu.size(); ++i) {
    if (eu[i] > eu[best] || (eu[i] == eu[best] && candidates[i].action_id < candidates[best].action_id)) best = i;
  }
  return best;
}

template <estimator::StateDistribution D>
PlanResult plan(const D& dist, const PlannerConfig& c, const estimator::SampleSpec& spec) {
  spec.validate();
  PlanResult r;
  r.candidates = generate_candidates(dist.nominal(), c);
  if (r.candidates.empty()) throw ContractError("planner produced no candidates");
  const auto states = draw_states(dist, spec);
  r.eu.reserve(r.candidates.size());
  for (const auto& traj : r.candidates) {
    const auto u = utilities(states, traj, c, spec.seed);
    double s = 0.0;
    for (double v : u) s += v;
    r.eu.push_back(s / static_cast<double>(u.size()));
  }
  r.a_star = argmax_action(r.candidates, r.eu);
  return r;
}

}  // namespace tip::planner
