#pragma once

// Monte-Carlo expected-utility estimation over arbitrary state spaces, and the
// exponential tail bound that makes the sample size independent of the state
// dimension.

#include <algorithm>
#include <cmath>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "tip/errors.hpp"
#include "tip/rng.hpp"

namespace tip::estimator {

struct SampleSpec {
  std::size_t n = 10000;
  std::uint64_t seed = 0;

  void validate() const {
    if (n == 0) throw ContractError("sample size n must be at least 1");
  }
};

/// Anything that draws a world state from a counter-based generator.
/// Point masses report themselves so callers can skip redundant work.
template <class D>
concept StateDistribution = requires(const D& d, rng::CounterRng& g) {
  d.sample(g);
  { d.is_point_mass() } -> std::convertible_to<bool>;
};

template <class D>
using state_t = std::decay_t<decltype(std::declval<const D&>().sample(std::declval<rng::CounterRng&>()))>;

/// Deterministic state.
template <class T>
struct PointMass {
  T value;

  const T& sample(rng::CounterRng&) const noexcept { return value; }
  static constexpr bool is_point_mass() noexcept { return true; }
};

/// n i.i.d. draws; draw i comes from stream (spec.seed, tag, i).
template <StateDistribution D>
std::vector<state_t<D>> sample_states(const D& dist, const SampleSpec& spec,
                                      std::uint64_t tag = rng::tags::kGroundTruth) {
  spec.validate();
  std::vector<state_t<D>> out;
  out.reserve(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    rng::CounterRng g(spec.seed, tag, i);
    out.push_back(dist.sample(g));
  }
  return out;
}

/// Mean and unbiased variance of a sample.
struct Moments {
  double mean = 0.0;
  double variance = 0.0;
  std::size_t n = 0;

  double standard_error() const noexcept {
    return n > 0 ? std::sqrt(variance / static_cast<double>(n)) : 0.0;
  }
};

inline Moments moments(const std::vector<double>& xs) {
  Moments m;
  m.n = xs.size();
  if (xs.empty()) return m;
  // Welford
  double mean = 0.0;
  double m2 = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double d = xs[i] - mean;
    mean += d / static_cast<double>(i + 1);
    m2 += d * (xs[i] - mean);
  }
  m.mean = mean;
  m.variance = xs.size() > 1 ? m2 / static_cast<double>(xs.size() - 1) : 0.0;
  return m;
}

namespace detail {

template <class U, class S>
double checked_utility(const U& utility, const S& state, double m, std::size_t index) {
  const double v = utility(state);
  if (!(std::abs(v) <= m))
    throw ContractError("utility bound violated at state index " + std::to_string(index) +
                        ": |U| = " + std::to_string(std::abs(v)) + " > M = " + std::to_string(m));
  return v;
}

}  // namespace detail

/// Utility values of every state, each checked against |U| <= m.
template <class U, class S>
std::vector<double> utilities(const U& utility, const std::vector<S>& states, double m) {
  std::vector<double> out(states.size());
  for (std::size_t i = 0; i < states.size(); ++i)
    out[i] = detail::checked_utility(utility, states[i], m, i);
  return out;
}

/// EU_a = (1/n) sum_i U(S_i, a).
template <class U, class S>
double estimate_eu(const U& utility, const std::vector<S>& states, double m) {
  if (states.empty()) throw ContractError("estimate_eu needs at least one state");
  double s = 0.0;
  for (std::size_t i = 0; i < states.size(); ++i)
    s += detail::checked_utility(utility, states[i], m, i);
  return s / static_cast<double>(states.size());
}

/// Per-sample terms U(s_q,a*) - U(s_q,a) - U(s_p,a*) + U(s_p,a).
/// With `paired`, draw i of p and of q share the same stream (common random
/// numbers), so q == p cancels exactly; otherwise q uses its own stream tag.
template <StateDistribution P, StateDistribution Q, class UStar, class UAlt>
std::vector<double> delta_xi_terms(const P& p, const Q& q, const UStar& u_star, const UAlt& u_alt,
                                   const SampleSpec& spec, double m, bool paired = true) {
  const auto sp = sample_states(p, spec, rng::tags::kGroundTruth);
  const auto sq = sample_states(q, spec, paired ? rng::tags::kGroundTruth : rng::tags::kPerception);
  std::vector<double> terms(spec.n);
  for (std::size_t i = 0; i < spec.n; ++i) {
    terms[i] = detail::checked_utility(u_star, sq[i], m, i) - detail::checked_utility(u_alt, sq[i], m, i) -
               detail::checked_utility(u_star, sp[i], m, i) + detail::checked_utility(u_alt, sp[i], m, i);
  }
  return terms;
}

/// Sampling estimate of Delta xi(a*, a; q, p).
template <StateDistribution P, StateDistribution Q, class UStar, class UAlt>
double estimate_delta_xi(const P& p, const Q& q, const UStar& u_star, const UAlt& u_alt,
                         const SampleSpec& spec, double m, bool paired = true) {
  return moments(delta_xi_terms(p, q, u_star, u_alt, spec, m, paired)).mean;
}

// ---------------------------------------------------------------------------
// Tail bound
// ---------------------------------------------------------------------------

/// Pr(|EU_a - E[U]| > epsilon) < probability, with
/// L = min(M^2, Var + M epsilon / 3). The first branch is Hoeffding, the
/// second Bernstein.
struct TailBound {
  std::size_t n;
  double epsilon;
  double m;
  double variance;
  double l_value;
  double probability;

  bool hoeffding_branch() const noexcept { return l_value == m * m; }
};

inline TailBound tail_bound(std::size_t n, double epsilon, double m, double variance) {
  if (!(epsilon > 0.0)) throw ContractError("tail bound needs epsilon > 0");
  if (!(m > 0.0)) throw ContractError("tail bound needs M > 0");
  if (!(variance >= 0.0)) throw ContractError("tail bound needs variance >= 0");
  if (n == 0) throw ContractError("tail bound needs n >= 1");
  const double l = std::min(m * m, variance + m * epsilon / 3.0);
  const double p = 2.0 * std::exp(-static_cast<double>(n) * epsilon * epsilon / (2.0 * l));
  return {n, epsilon, m, variance, l, std::min(1.0, p)};
}

/// Smallest n whose tail bound is at most delta.
inline std::size_t required_n(double epsilon, double delta, double m, double variance) {
  if (!(delta > 0.0 && delta < 1.0)) throw ContractError("required_n needs 0 < delta < 1");
  const TailBound probe = tail_bound(1, epsilon, m, variance);
  const double guess = 2.0 * probe.l_value * std::log(2.0 / delta) / (epsilon * epsilon);
  auto n = static_cast<std::size_t>(std::max(1.0, std::ceil(guess)));
  // Settle rounding in the closed form against the bound itself.
  while (n > 1 && tail_bound(n - 1, epsilon, m, variance).probability <= delta) --n;
  while (tail_bound(n, epsilon, m, variance).probability > delta) ++n;
  return n;
}

}  // namespace tip::estimator
