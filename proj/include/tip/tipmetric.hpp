#pragma once

/**
 * @file tipmetric.hpp
 * @brief Planner-centric perception score and baseline metrics.
 *
 * The score of a perception result q against ground truth p is the largest
 * drop, over every candidate action a, of the planner's preference for its
 * ground-truth optimal action a*:
 *
 *   dxi_a = E_q[U(s,a*) - U(s,a)] - E_p[U(s,a*) - U(s,a)]
 *   J     = min_a dxi_a  (<= 0, since a = a* contributes exactly 0)
 *
 * Candidates are the union of those the planner proposes under p and under q.
 * Expectations are sample means over draws that are shared by all actions.
 */

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tip/errors.hpp"
#include "tip/estimator.hpp"
#include "tip/hilbert.hpp"
#include "tip/planner.hpp"
#include "tip/preference.hpp"

namespace tip::metric {

// ---------------------------------------------------------------------------
// Aggregation
// ---------------------------------------------------------------------------

struct Aggregation {
  enum class Mode { kMin, kMean, kPercentile };
  Mode mode = Mode::kMin;
  double k = 0.0;  ///< percentile in [0, 100]

  static Aggregation min() { return {}; }
  static Aggregation mean() { return {Mode::kMean, 0.0}; }
  static Aggregation percentile(double k) {
    if (!(k >= 0.0 && k <= 100.0)) throw ContractError("percentile must lie in [0, 100]");
    return {Mode::kPercentile, k};
  }

  /// "min", "mean", or "pK" / "percentile:K".
  static Aggregation parse(const std::string& s) {
    if (s == "min") return min();
    if (s == "mean") return mean();
    std::string num;
    if (s.rfind("percentile:", 0) == 0) num = s.substr(11);
    else if (s.size() > 1 && s[0] == 'p') num = s.substr(1);
    else throw ContractError("unknown aggregation '" + s + "'");
    std::size_t used = 0;
    double k = 0.0;
    try {
      k = std::stod(num, &used);
    } catch (const std::exception&) {
      throw ContractError("unknown aggregation '" + s + "'");
    }
    if (used != num.size()) throw ContractError("unknown aggregation '" + s + "'");
    return percentile(k);
  }

  std::string to_string() const {
    switch (mode) {
      case Mode::kMin: return "min";
      case Mode::kMean: return "mean";
      case Mode::kPercentile: {
        std::string s = std::to_string(k);
        s.erase(s.find_last_not_of('0') + 1);
        if (!s.empty() && s.back() == '.') s.pop_back();
        return "p" + s;
      }
    }
    return "min";
  }
};

/// Percentiles interpolate linearly between order statistics at rank
/// k/100 * (n - 1).
inline double aggregate(std::span<const double> values, const Aggregation& agg) {
  if (values.empty()) throw ContractError("cannot aggregate an empty list");
  switch (agg.mode) {
    case Aggregation::Mode::kMin: return *std::min_element(values.begin(), values.end());
    case Aggregation::Mode::kMean: {
      double s = 0.0;
      for (double v : values) s += v;
      return s / static_cast<double>(values.size());
    }
    case Aggregation::Mode::kPercentile: {
      std::vector<double> sorted(values.begin(), values.end());
      std::sort(sorted.begin(), sorted.end());
      const double rank = agg.k / 100.0 * static_cast<double>(sorted.size() - 1);
      const auto lo = static_cast<std::size_t>(std::floor(rank));
      const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
      const double frac = rank - static_cast<double>(lo);
      return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
    }
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Scenario path
// ---------------------------------------------------------------------------

struct ActionDelta {
  std::string action_id;
  double delta_xi;
};

struct TipOptions {
  Aggregation aggregation;
  /// Accuracy attached to the report's tail bound.
  double epsilon = 0.5;
  /// Draw i of p and of q from the same stream (common random numbers).
  bool paired = true;
  /// One set of draws for all actions; otherwise each action gets its own.
  bool share_streams = true;
};

struct TipReport {
  double tip_score = 0.0;
  std::vector<ActionDelta> per_action;
  std::string a_star_id;
  std::size_t candidate_count = 0;
  std::size_t n = 0;
  std::uint64_t seed = 0;
  std::string aggregation = "min";
  std::optional<estimator::TailBound> bound;
  /// Ground-truth optimal trajectory.
  planner::Trajectory a_star;

  double delta_xi(const std::string& id) const {
    for (const auto& d : per_action)
      if (d.action_id == id) return d.delta_xi;
    throw ContractError("no action '" + id + "' in report");
  }
};

namespace detail {

inline bool same_poses(const planner::Trajectory& a, const planner::Trajectory& b, double tol = 1e-9) {
  if (a.poses.size() != b.poses.size()) return false;
  for (std::size_t k = 0; k < a.poses.size(); ++k) {
    const auto& p = a.poses[k];
    const auto& q = b.poses[k];
    for (auto [u, v] : {std::pair{p.t, q.t}, {p.x, q.x}, {p.y, q.y}, {p.heading, q.heading}, {p.speed, q.speed},
                        {p.accel, q.accel}, {p.jerk, q.jerk}})
      if (std::abs(u - v) > tol) return false;
  }
  return true;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// D_a = D_{a,p} u D_{a,q}. Equal ids with equal poses merge; a q-side action
/// whose id collides with a different p-side trajectory is kept with a "#q"
/// suffix.
inline std::vector<planner::Trajectory> union_candidates(std::vector<planner::Trajectory> from_p,
                                                         const std::vector<planner::Trajectory>& from_q) {
  for (const auto& tq : from_q) {
    auto it = std::find_if(from_p.begin(), from_p.end(), [&](const auto& t) { return t.action_id == tq.action_id; });
    if (it == from_p.end()) {
      from_p.push_back(tq);
    } else if (!detail::same_poses(*it, tq)) {
      planner::Trajectory renamed = tq;
      renamed.action_id += "#q";
      from_p.push_back(std::move(renamed));
    }
  }
  return from_p;
}

/// Scores perception distribution q against ground-truth distribution p.
template <estimator::StateDistribution P, estimator::StateDistribution Q>
TipReport tip_score(const P& p, const Q& q, const planner::PlannerConfig& config, const estimator::SampleSpec& spec,
                    const TipOptions& opt = {}) {
  spec.validate();
  const planner::PlanResult truth = planner::plan(p, config, spec);
  const auto candidates = union_candidates(truth.candidates, planner::generate_candidates(q.nominal(), config));
  const planner::Trajectory& a_star = truth.best();

  TipReport rep;
  rep.a_star_id = a_star.action_id;
  rep.a_star = a_star;
  rep.candidate_count = candidates.size();
  rep.n = spec.n;
  rep.seed = spec.seed;
  rep.aggregation = opt.aggregation.to_string();

  const std::uint64_t q_tag = opt.paired ? rng::tags::kGroundTruth : rng::tags::kPerception;

  struct Draws {
    std::vector<planner::Scenario> p, q;
    std::vector<double> star_p, star_q;
  };
  auto draw = [&](std::uint64_t seed) {
    const estimator::SampleSpec s{spec.n, seed};
    Draws d{planner::draw_states(p, s, rng::tags::kGroundTruth), planner::draw_states(q, s, q_tag), {}, {}};
    d.star_p = planner::utilities(d.p, a_star, config, seed);
    d.star_q = planner::utilities(d.q, a_star, config, seed);
    return d;
  };

  std::optional<Draws> shared;
  if (opt.share_streams) shared = draw(spec.seed);

  std::vector<double> values;
  std::vector<double> worst_terms;
  double worst = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < candidates.size(); ++j) {
    const auto& a = candidates[j];
    double dxi = 0.0;
    std::vector<double> terms;
    if (a.action_id != a_star.action_id) {
      const Draws d = shared ? *shared : draw(rng::combine(spec.seed, j + 1));
      const auto alt_p = planner::utilities(d.p, a, config, shared ? spec.seed : rng::combine(spec.seed, j + 1));
      const auto alt_q = planner::utilities(d.q, a, config, shared ? spec.seed : rng::combine(spec.seed, j + 1));
      std::vector<double> diff_p(d.p.size()), diff_q(d.q.size());
      for (std::size_t i = 0; i < diff_p.size(); ++i) diff_p[i] = d.star_p[i] - alt_p[i];
      for (std::size_t i = 0; i < diff_q.size(); ++i) diff_q[i] = d.star_q[i] - alt_q[i];
      dxi = detail::mean(diff_q) - detail::mean(diff_p);
      if (diff_p.size() == diff_q.size()) {
        terms.resize(diff_p.size());
        for (std::size_t i = 0; i < terms.size(); ++i) terms[i] = diff_q[i] - diff_p[i];
      }
    }
    rep.per_action.push_back({a.action_id, dxi});
    values.push_back(dxi);
    if (dxi < worst) {
      worst = dxi;
      worst_terms = std::move(terms);
    }
  }
  rep.tip_score = aggregate(values, opt.aggregation);

  // Each term is a difference of two utility gaps, each in [-M, M].
  const double variance = worst_terms.size() > 1 ? estimator::moments(worst_terms).variance : 0.0;
  rep.bound = estimator::tail_bound(spec.n, opt.epsilon, 2.0 * config.utility_bound_m, variance);
  return rep;
}

// ---------------------------------------------------------------------------
// Grid path (scalar state)
// ---------------------------------------------------------------------------

struct GridTipReport {
  double tip_score = 0.0;
  std::string a_star_id;
  std::vector<ActionDelta> per_action;
};

/// Same score on embedded distributions: a* maximises <mu_p, U_a>, and each
/// dxi_a is the parallel component of mu_q - mu_p along U_{a*} - U_a.
inline GridTipReport tip_score_grid(const hilbert::GridFunction& mu_p, const hilbert::GridFunction& mu_q,
                                    const std::vector<preference::ActionUtility>& actions,
                                    const Aggregation& agg = {}) {
  if (actions.empty()) throw ContractError("tip_score_grid needs at least one action");
  std::size_t best = 0;
  std::vector<double> eu;
  for (const auto& a : actions) eu.push_back(hilbert::expectation(mu_p, a.u()));
  for (std::size_t i = 1; i < actions.size(); ++i)
    if (eu[i] > eu[best] || (eu[i] == eu[best] && actions[i].id() < actions[best].id())) best = i;

  GridTipReport r;
  r.a_star_id = actions[best].id();
  std::vector<double> values;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    double dxi = 0.0;
    if (i != best) {
      try {
        const auto dir = preference::behavior_direction(actions[best], actions[i]);
        dxi = preference::decompose(mu_p, mu_q, dir).delta_xi;
      } catch (const IndistinctActions&) {
        dxi = 0.0;
      }
    }
    r.per_action.push_back({actions[i].id(), dxi});
    values.push_back(dxi);
  }
  r.tip_score = aggregate(values, agg);
  return r;
}

// ---------------------------------------------------------------------------
// Baselines
// ---------------------------------------------------------------------------

using DistanceCost = std::function<double(double)>;

/// Gradient-magnitude impact: |cost'(d_true)| * |d_noisy - d_true|, with a
/// central difference of step 1e-6 * d_true.
inline double ipa_score(const DistanceCost& cost, double d_true, double d_noisy) {
  if (!(d_true > 0.0 && d_noisy > 0.0)) throw ContractError("ipa_score needs positive distances");
  const double h = 1e-6 * d_true;
  const double grad = (cost(d_true + h) - cost(d_true - h)) / (2.0 * h);
  return std::abs(grad) * std::abs(d_noisy - d_true);
}

/// |cost(d_noisy) - cost(d_true)|.
inline double true_cost_delta(const DistanceCost& cost, double d_true, double d_noisy) {
  if (!(d_true > 0.0 && d_noisy > 0.0)) throw ContractError("true_cost_delta needs positive distances");
  return std::abs(cost(d_noisy) - cost(d_true));
}

/// KL divergence between per-step isotropic Gaussians centred on the two
/// trajectories' positions, summed over steps: sum ||dp||^2 / (2 sigma^2).
/// A behaviour-change proxy only.
inline double behavior_divergence(const planner::Trajectory& traj_p, const planner::Trajectory& traj_q,
                                  double sigma) {
  if (traj_p.poses.size() != traj_q.poses.size())
    throw ContractError("behavior_divergence needs equal step counts (" + std::to_string(traj_p.poses.size()) +
                        " vs " + std::to_string(traj_q.poses.size()) + ")");
  if (!(sigma > 0.0)) throw ContractError("behavior_divergence needs sigma > 0");
  double kl = 0.0;
  for (std::size_t k = 0; k < traj_p.poses.size(); ++k) {
    const double dx = traj_p.poses[k].x - traj_q.poses[k].x;
    const double dy = traj_p.poses[k].y - traj_q.poses[k].y;
    kl += (dx * dx + dy * dy) / (2.0 * sigma * sigma);
  }
  return kl;
}

}  // namespace tip::metric
