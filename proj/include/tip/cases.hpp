#pragma once

// Scalar worked examples on a 6 m wide road, x in [-3, 3].
//
//   forward: U = -10 on [-1, 1] (an obstacle there), 0 elsewhere
//   brake:   U = -5 everywhere
//
// "two-object" case: truth U[-3,-2], perception U[-1,0], a* = forward.
// "peace of mind" case: truth U[-1.5,1.5], perception U[-0.5,0.5], a* = brake.

#include <string>

#include "tip/hilbert.hpp"
#include "tip/preference.hpp"

namespace tip::cases {

struct DecompositionCase {
  std::string name;
  hilbert::Domain1D domain;
  hilbert::GridFunction mu_p;
  hilbert::GridFunction mu_q;
  hilbert::GridFunction u_star;
  hilbert::GridFunction u_alt;
};

struct CaseSummary {
  double xi_p;
  double xi_q;
  preference::DecompositionResult decomposition;
};

inline constexpr std::size_t kDefaultCells = 6000;

inline hilbert::Domain1D road_domain(std::size_t cells = kDefaultCells) { return {-3.0, 3.0, cells}; }

inline hilbert::GridFunction forward_utility(const hilbert::Domain1D& d) {
  return hilbert::GridFunction::indicator(d, -1.0, 1.0, -10.0);
}

inline hilbert::GridFunction brake_utility(const hilbert::Domain1D& d) { return hilbert::GridFunction::constant(d, -5.0); }

inline DecompositionCase figure3(std::size_t cells = kDefaultCells) {
  const auto d = road_domain(cells);
  return {"figure3",
          d,
          hilbert::embed(hilbert::AnalyticDensity::uniform(-3.0, -2.0), d),
          hilbert::embed(hilbert::AnalyticDensity::uniform(-1.0, 0.0), d),
          forward_utility(d),
          brake_utility(d)};
}

inline DecompositionCase figure8b(std::size_t cells = kDefaultCells) {
  const auto d = road_domain(cells);
  return {"figure8b",
          d,
          hilbert::embed(hilbert::AnalyticDensity::uniform(-1.5, 1.5), d),
          hilbert::embed(hilbert::AnalyticDensity::uniform(-0.5, 0.5), d),
          brake_utility(d),
          forward_utility(d)};
}

/// Throws IndistinctActions when u_star == u_alt.
inline CaseSummary summarize(const DecompositionCase& c) {
  const auto dir = preference::behavior_direction(c.u_star, c.u_alt);
  return {preference::preference_score(c.mu_p, dir), preference::preference_score(c.mu_q, dir),
          preference::decompose(c.mu_p, c.mu_q, dir)};
}

}  // namespace tip::cases
