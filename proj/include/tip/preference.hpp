#pragma once

// Behaviour directions, preference scores and the split of a perception error
// into its planning-critical (parallel to the behaviour direction) and
// planning-invariant (orthogonal) components.

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>
#include <utility>

#include "tip/errors.hpp"
#include "tip/hilbert.hpp"

namespace tip::preference {

using hilbert::GridFunction;

/// U(s, a) over the state domain, bounded by M in absolute value.
class ActionUtility {
 public:
  ActionUtility(std::string action_id, GridFunction u, double bound_m)
      : id_(std::move(action_id)), u_(std::move(u)), bound_m_(bound_m) {
    if (!(bound_m > 0.0)) throw ContractError("utility bound M must be positive");
    for (double v : u_.values())
      if (std::abs(v) > bound_m)
        throw ContractError("utility of action '" + id_ + "' exceeds its bound M=" +
                            std::to_string(bound_m));
  }

  const std::string& id() const noexcept { return id_; }
  const GridFunction& u() const noexcept { return u_; }
  double bound_m() const noexcept { return bound_m_; }

 private:
  std::string id_;
  GridFunction u_;
  double bound_m_;
};

/// Delta U = U_{a*} - U_a and its unit vector.
struct BehaviorDirection {
  GridFunction delta_u;
  GridFunction unit;
  double delta_u_norm;
};

struct DecompositionResult {
  GridFunction delta_mu;
  GridFunction parallel;       ///< planning-critical error
  GridFunction perpendicular;  ///< planning-invariant error
  double delta_xi;
  double pce_energy_fraction;

  double pie_energy_fraction() const noexcept {
    return delta_mu.is_zero() ? 0.0 : 1.0 - pce_energy_fraction;
  }
};

inline BehaviorDirection behavior_direction(const GridFunction& u_star, const GridFunction& u_alt) {
  GridFunction du = u_star - u_alt;
  const double n = hilbert::norm(du);
  if (!(n > 0.0)) throw IndistinctActions("actions have identical utilities; no behaviour direction");
  GridFunction unit = du * (1.0 / n);
  return {std::move(du), std::move(unit), n};
}

inline BehaviorDirection behavior_direction(const ActionUtility& u_star, const ActionUtility& u_alt) {
  try {
    return behavior_direction(u_star.u(), u_alt.u());
  } catch (const IndistinctActions&) {
    throw IndistinctActions("actions '" + u_star.id() + "' and '" + u_alt.id() +
                            "' have identical utilities");
  }
}

/// xi(q; a*, a) = <mu_q, Delta U> = EU(q, a*) - EU(q, a).
inline double preference_score(const GridFunction& mu_q, const BehaviorDirection& dir) {
  return hilbert::inner_product(mu_q, dir.delta_u);
}

/// Strict: a tie does not count as preferring a*.
inline bool in_planning_halfspace(const GridFunction& mu_q, const BehaviorDirection& dir) {
  return preference_score(mu_q, dir) > 0.0;
}

/// Projects an error Delta mu onto the behaviour direction.
inline DecompositionResult decompose_error(GridFunction delta_mu, const BehaviorDirection& dir) {
  const double along = hilbert::inner_product(delta_mu, dir.delta_u);
  GridFunction parallel = dir.delta_u * (along / (dir.delta_u_norm * dir.delta_u_norm));
  GridFunction perpendicular = delta_mu - parallel;

#ifndef NDEBUG
  // Only the parallel part moves the preference score.
  const double via_parallel = hilbert::inner_product(parallel, dir.delta_u);
  if (std::abs(via_parallel - along) > 1e-9 * std::max(1.0, std::abs(along)))
    throw Error("decompose: <dmu, dU> and <dmu_par, dU> disagree");
#endif

  const double total = hilbert::inner_product(delta_mu, delta_mu);
  const double fraction = total > 0.0 ? hilbert::inner_product(parallel, parallel) / total : 0.0;
  return {std::move(delta_mu), std::move(parallel), std::move(perpendicular), along,
          std::min(1.0, std::max(0.0, fraction))};
}

/// Delta mu = mu_q - mu_p split against Delta U.
inline DecompositionResult decompose(const GridFunction& mu_p, const GridFunction& mu_q,
                                     const BehaviorDirection& dir) {
  return decompose_error(mu_q - mu_p, dir);
}

/// Grid columns x_mid,delta_mu,parallel,perpendicular followed by one
/// `#`-prefixed summary row.
inline void write_csv(std::ostream& os, const DecompositionResult& r) {
  os << "x_mid,delta_mu,parallel,perpendicular\n";
  const auto& d = r.delta_mu.domain();
  for (std::size_t i = 0; i < r.delta_mu.size(); ++i)
    os << d.midpoint(i) << ',' << r.delta_mu[i] << ',' << r.parallel[i] << ','
       << r.perpendicular[i] << '\n';
  os << "#summary,delta_xi=" << r.delta_xi << ",pce_fraction=" << r.pce_energy_fraction
     << ",pie_fraction=" << r.pie_energy_fraction() << '\n';
}

}  // namespace tip::preference
