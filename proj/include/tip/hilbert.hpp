#pragma once

/**
 * @file hilbert.hpp
 * @brief Square-integrable functions on a compact 1D state domain.
 *
 * Distributions over a scalar world state are embedded as their densities,
 * so that an expectation E_p[g] becomes the L2 inner product <mu_p, g>.
 * Functions are stored as midpoint samples on a uniform grid and integrals
 * use the midpoint rule, which is exact for piecewise-constant integrands
 * whose breakpoints coincide with cell boundaries.
 *
 * Exact Dirac masses are not in L2. Mixed distributions are represented by
 * replacing each atom with a normalised indicator bump of radius r; the
 * inner product against any continuous g converges to the mixed expectation
 * as r -> 0.
 */

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <numeric>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "tip/errors.hpp"
#include "tip/rng.hpp"

namespace tip::hilbert {

/// Closed interval [lo, hi].
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double length() const noexcept { return hi - lo; }
  bool contains(double x) const noexcept { return x >= lo && x <= hi; }
};

/// Uniform grid of `cells` cells over [lo, hi].
class Domain1D {
 public:
  Domain1D(double lo, double hi, std::size_t cells) : lo_(lo), hi_(hi), cells_(cells) {
    if (!std::isfinite(lo) || !std::isfinite(hi) || !(lo < hi))
      throw ContractError("Domain1D requires finite lo < hi");
    if (cells == 0) throw ContractError("Domain1D requires at least one cell");
  }

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  std::size_t cells() const noexcept { return cells_; }
  double width() const noexcept { return (hi_ - lo_) / static_cast<double>(cells_); }
  double midpoint(std::size_t i) const noexcept {
    return lo_ + (static_cast<double>(i) + 0.5) * width();
  }
  double cell_lo(std::size_t i) const noexcept { return lo_ + static_cast<double>(i) * width(); }
  double cell_hi(std::size_t i) const noexcept { return lo_ + static_cast<double>(i + 1) * width(); }
  Interval extent() const noexcept { return {lo_, hi_}; }

  /// Same grid with `cells` replaced.
  Domain1D with_cells(std::size_t cells) const { return Domain1D(lo_, hi_, cells); }

  friend bool operator==(const Domain1D&, const Domain1D&) = default;

 private:
  double lo_;
  double hi_;
  std::size_t cells_;
};

/// A real function sampled at the cell midpoints of a Domain1D.
class GridFunction {
 public:
  explicit GridFunction(Domain1D domain) : domain_(domain), values_(domain.cells(), 0.0) {}

  GridFunction(Domain1D domain, std::vector<double> values)
      : domain_(domain), values_(std::move(values)) {
    if (values_.size() != domain_.cells())
      throw ContractError("GridFunction: value count " + std::to_string(values_.size()) +
                          " does not match cell count " + std::to_string(domain_.cells()));
    for (double v : values_)
      if (!std::isfinite(v)) throw ContractError("GridFunction: non-finite sample");
  }

  template <class F>
  static GridFunction from_function(const Domain1D& domain, F&& f) {
    std::vector<double> v(domain.cells());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = f(domain.midpoint(i));
    return GridFunction(domain, std::move(v));
  }

  static GridFunction constant(const Domain1D& domain, double c) {
    return GridFunction(domain, std::vector<double>(domain.cells(), c));
  }

  /// value * 1[x in [a, b]] on midpoints.
  static GridFunction indicator(const Domain1D& domain, double a, double b, double value = 1.0) {
    return from_function(domain, [=](double x) { return (x >= a && x <= b) ? value : 0.0; });
  }

  const Domain1D& domain() const noexcept { return domain_; }
  std::span<const double> values() const noexcept { return values_; }
  double operator[](std::size_t i) const noexcept { return values_[i]; }
  std::size_t size() const noexcept { return values_.size(); }

  /// Quadrature of the function itself (total mass for a density).
  double integral() const noexcept {
    return std::accumulate(values_.begin(), values_.end(), 0.0) * domain_.width();
  }

  bool is_zero() const noexcept {
    return std::all_of(values_.begin(), values_.end(), [](double v) { return v == 0.0; });
  }

  GridFunction& operator+=(const GridFunction& o) {
    require_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
    return *this;
  }
  GridFunction& operator-=(const GridFunction& o) {
    require_same(o);
    for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
    return *this;
  }
  GridFunction& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }

  friend GridFunction operator+(GridFunction a, const GridFunction& b) { return a += b; }
  friend GridFunction operator-(GridFunction a, const GridFunction& b) { return a -= b; }
  friend GridFunction operator*(GridFunction a, double s) { return a *= s; }
  friend GridFunction operator*(double s, GridFunction a) { return a *= s; }
  friend GridFunction operator-(GridFunction a) { return a *= -1.0; }

  void require_same(const GridFunction& o) const {
    if (!(domain_ == o.domain_)) throw DomainMismatch("grid functions live on different domains");
  }

 private:
  Domain1D domain_;
  std::vector<double> values_;
};

/// <f, g> by the midpoint rule.
inline double inner_product(const GridFunction& f, const GridFunction& g) {
  f.require_same(g);
  const auto a = f.values();
  const auto b = g.values();
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * f.domain().width();
}

inline double norm(const GridFunction& f) { return std::sqrt(inner_product(f, f)); }

/// E_p[g] = <mu_p, g>.
inline double expectation(const GridFunction& mu, const GridFunction& g) {
  return inner_product(mu, g);
}

/// CSV with columns x_mid,value.
inline void write_csv(std::ostream& os, const GridFunction& f) {
  os << "x_mid,value\n";
  const auto& d = f.domain();
  for (std::size_t i = 0; i < f.size(); ++i) os << d.midpoint(i) << ',' << f[i] << '\n';
}

// ---------------------------------------------------------------------------
// Densities
// ---------------------------------------------------------------------------

class AnalyticDensity;

struct Uniform {
  double a;
  double b;
};

/// Gaussian restricted to [lo, hi] and renormalised there.
struct TruncatedGaussian {
  double mean;
  double sd;
  double lo;
  double hi;
};

/// levels[i] on [breakpoints[i], breakpoints[i+1]).
struct PiecewiseConstant {
  std::vector<double> breakpoints;
  std::vector<double> levels;
};

struct Mixture {
  std::vector<double> weights;
  std::vector<AnalyticDensity> components;
};

/// Absolutely continuous density with compact support.
class AnalyticDensity {
 public:
  using Kind = std::variant<Uniform, TruncatedGaussian, PiecewiseConstant, Mixture>;

  static AnalyticDensity uniform(double a, double b) {
    if (!(a < b)) throw ContractError("uniform density requires a < b");
    return AnalyticDensity(Uniform{a, b});
  }

  static AnalyticDensity truncated_gaussian(double mean, double sd, double lo, double hi) {
    if (!(sd > 0.0)) throw ContractError("truncated gaussian requires sd > 0");
    if (!(lo < hi)) throw ContractError("truncated gaussian requires lo < hi");
    return AnalyticDensity(TruncatedGaussian{mean, sd, lo, hi});
  }

  /// Levels are rescaled so the density integrates to one.
  static AnalyticDensity piecewise_constant(std::vector<double> breakpoints,
                                            std::vector<double> levels) {
    if (breakpoints.size() < 2 || levels.size() + 1 != breakpoints.size())
      throw ContractError("piecewise constant density needs n+1 breakpoints for n levels");
    double mass = 0.0;
    for (std::size_t i = 0; i < levels.size(); ++i) {
      if (!(breakpoints[i + 1] > breakpoints[i]))
        throw ContractError("piecewise constant breakpoints must increase strictly");
      if (levels[i] < 0.0) throw ContractError("piecewise constant levels must be non-negative");
      mass += levels[i] * (breakpoints[i + 1] - breakpoints[i]);
    }
    if (!(mass > 0.0)) throw ContractError("piecewise constant density has zero mass");
    for (double& l : levels) l /= mass;
    return AnalyticDensity(PiecewiseConstant{std::move(breakpoints), std::move(levels)});
  }

  static AnalyticDensity mixture(std::vector<double> weights,
                                 std::vector<AnalyticDensity> components) {
    if (weights.empty() || weights.size() != components.size())
      throw ContractError("mixture needs one weight per component");
    double total = 0.0;
    for (double w : weights) {
      if (!(w > 0.0)) throw ContractError("mixture weights must be positive");
      total += w;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ContractError("mixture weights must sum to 1");
    return AnalyticDensity(Mixture{std::move(weights), std::move(components)});
  }

  const Kind& kind() const noexcept { return kind_; }

  double pdf(double x) const {
    return std::visit([x](const auto& k) { return pdf_of(k, x); }, kind_);
  }

  Interval support() const {
    return std::visit([](const auto& k) { return support_of(k); }, kind_);
  }

  /// One draw. Consumes a data-dependent number of words from `g`.
  double sample(rng::CounterRng& g) const {
    return std::visit([&g](const auto& k) { return sample_of(k, g); }, kind_);
  }

  static constexpr bool is_point_mass() noexcept { return false; }

 private:
  explicit AnalyticDensity(Kind k) : kind_(std::move(k)) {}

  static double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

  static double truncated_mass(const TruncatedGaussian& t) {
    return normal_cdf((t.hi - t.mean) / t.sd) - normal_cdf((t.lo - t.mean) / t.sd);
  }

  static double pdf_of(const Uniform& u, double x) {
    return (x >= u.a && x <= u.b) ? 1.0 / (u.b - u.a) : 0.0;
  }
  static double pdf_of(const TruncatedGaussian& t, double x) {
    if (x < t.lo || x > t.hi) return 0.0;
    const double z = (x - t.mean) / t.sd;
    return std::exp(-0.5 * z * z) / (t.sd * std::sqrt(2.0 * std::numbers::pi) * truncated_mass(t));
  }
  static double pdf_of(const PiecewiseConstant& p, double x) {
    const auto& b = p.breakpoints;
    if (x < b.front() || x > b.back()) return 0.0;
    auto it = std::upper_bound(b.begin(), b.end(), x);
    std::size_t i = (it == b.end()) ? p.levels.size() - 1
                                     : static_cast<std::size_t>(it - b.begin()) - 1;
    return p.levels[i];
  }
  static double pdf_of(const Mixture& m, double x) {
    double s = 0.0;
    for (std::size_t i = 0; i < m.weights.size(); ++i) s += m.weights[i] * m.components[i].pdf(x);
    return s;
  }

  static Interval support_of(const Uniform& u) { return {u.a, u.b}; }
  static Interval support_of(const TruncatedGaussian& t) { return {t.lo, t.hi}; }
  static Interval support_of(const PiecewiseConstant& p) {
    return {p.breakpoints.front(), p.breakpoints.back()};
  }
  static Interval support_of(const Mixture& m) {
    Interval r = m.components.front().support();
    for (const auto& c : m.components) {
      const Interval s = c.support();
      r.lo = std::min(r.lo, s.lo);
      r.hi = std::max(r.hi, s.hi);
    }
    return r;
  }

  static double sample_of(const Uniform& u, rng::CounterRng& g) { return g.uniform(u.a, u.b); }
  static double sample_of(const TruncatedGaussian& t, rng::CounterRng& g) {
    if (truncated_mass(t) < 1e-3)
      throw ContractError("truncated gaussian keeps less than 0.1% of its mass; rejection sampling refused");
    for (;;) {
      const double x = g.normal(t.mean, t.sd);
      if (x >= t.lo && x <= t.hi) return x;
    }
  }
  static double sample_of(const PiecewiseConstant& p, rng::CounterRng& g) {
    double u = g.uniform();
    for (std::size_t i = 0; i < p.levels.size(); ++i) {
      const double w = p.levels[i] * (p.breakpoints[i + 1] - p.breakpoints[i]);
      if (u < w || i + 1 == p.levels.size())
        return g.uniform(p.breakpoints[i], p.breakpoints[i + 1]);
      u -= w;
    }
    return p.breakpoints.back();
  }
  static double sample_of(const Mixture& m, rng::CounterRng& g) {
    double u = g.uniform();
    for (std::size_t i = 0; i < m.weights.size(); ++i) {
      if (u < m.weights[i] || i + 1 == m.weights.size()) return m.components[i].sample(g);
      u -= m.weights[i];
    }
    return m.components.back().sample(g);
  }

  Kind kind_;
};

/// Atom of a mixed distribution.
struct Atom {
  double location;
  double mass;
};

/// lambda * F_ac + (1 - lambda) * sum_i b_i * step(x - a_i).
struct MixedDensity {
  AnalyticDensity continuous;
  double lambda;
  std::vector<Atom> atoms;

  void validate() const {
    if (!(lambda > 0.0 && lambda <= 1.0)) throw ContractError("mixed density needs lambda in (0, 1]");
    double total = 0.0;
    for (const auto& a : atoms) {
      if (!(a.mass > 0.0)) throw ContractError("atom masses must be positive");
      total += a.mass;
    }
    if (!atoms.empty() && std::abs(total - 1.0) > 1e-9)
      throw ContractError("atom masses must sum to 1");
    if (atoms.empty() && lambda != 1.0)
      throw ContractError("mixed density with lambda < 1 needs atoms");
  }
};

// ---------------------------------------------------------------------------
// Square-integrability
// ---------------------------------------------------------------------------

enum class Integrability { kConvergent, kDivergent };

struct IntegrabilityDiagnostic {
  Integrability verdict;
  /// Estimate of the integral of f^2 on the finest grid evaluated.
  double l2_mass;
  /// Estimates along the refinement schedule.
  std::vector<double> schedule;

  bool convergent() const noexcept { return verdict == Integrability::kConvergent; }
};

inline constexpr std::size_t kIntegrabilityBaseCells = 8;
inline constexpr std::size_t kIntegrabilityLevels = 5;
inline constexpr double kIntegrabilityGrowth = 0.10;

/// Refines the grid by factors of two from a fixed coarse start. The estimate
/// of the integral of f^2 is DIVERGENT when it grows by more than 10% at every
/// refinement, CONVERGENT otherwise.
inline IntegrabilityDiagnostic is_square_integrable(const std::function<double(double)>& pdf,
                                                    const Domain1D& domain) {
  auto l2 = [&](std::size_t cells) {
    const Domain1D d = domain.with_cells(cells);
    double s = 0.0;
    for (std::size_t i = 0; i < cells; ++i) {
      const double v = pdf(d.midpoint(i));
      s += v * v;
    }
    return s * d.width();
  };

  IntegrabilityDiagnostic out{Integrability::kDivergent, 0.0, {}};
  std::size_t cells = kIntegrabilityBaseCells;
  for (std::size_t level = 0; level < kIntegrabilityLevels; ++level, cells *= 2)
    out.schedule.push_back(l2(cells));

  bool always_growing = true;
  for (std::size_t k = 0; k + 1 < out.schedule.size(); ++k) {
    const double prev = out.schedule[k];
    const double next = out.schedule[k + 1];
    const bool grew = (prev == 0.0) ? next > 0.0 : (next - prev) / prev > kIntegrabilityGrowth;
    if (!grew) always_growing = false;
  }
  out.verdict = always_growing ? Integrability::kDivergent : Integrability::kConvergent;
  const std::size_t finest = std::max(domain.cells(), cells / 2);
  out.l2_mass = out.convergent() ? l2(finest) : out.schedule.back();
  return out;
}

inline IntegrabilityDiagnostic is_square_integrable(const AnalyticDensity& density,
                                                    const Domain1D& domain) {
  return is_square_integrable([&density](double x) { return density.pdf(x); }, domain);
}

// ---------------------------------------------------------------------------
// Embeddings
// ---------------------------------------------------------------------------

namespace detail {

inline void require_support_inside(const Interval& s, const Domain1D& domain) {
  const double tol = 1e-12 * (domain.hi() - domain.lo());
  if (s.lo < domain.lo() - tol || s.hi > domain.hi() + tol)
    throw DomainMismatch("density support [" + std::to_string(s.lo) + ", " +
                         std::to_string(s.hi) + "] leaves the domain [" +
                         std::to_string(domain.lo()) + ", " + std::to_string(domain.hi()) + "]");
}

inline GridFunction normalised_samples(const std::function<double(double)>& pdf,
                                       const Domain1D& domain) {
  GridFunction f = GridFunction::from_function(domain, pdf);
  const double mass = f.integral();
  if (!(mass > 0.0)) throw ResolutionError("density has no mass on the grid midpoints");
  return f * (1.0 / mass);
}

}  // namespace detail

/// Midpoint samples of the density, rescaled so the quadrature mass is exactly
/// one (the rescaling is a no-op when breakpoints align with cells).
inline GridFunction embed(const AnalyticDensity& density, const Domain1D& domain) {
  detail::require_support_inside(density.support(), domain);
  return detail::normalised_samples([&density](double x) { return density.pdf(x); }, domain);
}

/// Embedding of an arbitrary closed-form density. Rejects densities that the
/// integrability diagnostic flags as divergent.
inline GridFunction embed(const std::function<double(double)>& pdf, const Interval& support,
                          const Domain1D& domain) {
  detail::require_support_inside(support, domain);
  if (!is_square_integrable(pdf, domain).convergent())
    throw NotSquareIntegrable("density is not square-integrable on the domain");
  return detail::normalised_samples(pdf, domain);
}

/// Normalised indicator of [a - r, a + r], height 1/(2r). Cells straddling the
/// bump edge carry their overlap fraction, so the mass is one for any r.
inline GridFunction dirac_bump(double a, double r, const Domain1D& domain) {
  if (!(r >= domain.width() * (1.0 - 1e-12)))
    throw ResolutionError("bump radius " + std::to_string(r) + " is below the cell width " +
                          std::to_string(domain.width()));
  const double tol = 1e-12 * (domain.hi() - domain.lo());
  if (a - r < domain.lo() - tol || a + r > domain.hi() + tol)
    throw DomainMismatch("bump support leaves the domain");
  std::vector<double> v(domain.cells(), 0.0);
  const double h = domain.width();
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double overlap =
        std::max(0.0, std::min(domain.cell_hi(i), a + r) - std::max(domain.cell_lo(i), a - r));
    v[i] = overlap / (2.0 * r * h);
  }
  return GridFunction(domain, std::move(v));
}

/// Embedding of a mixed distribution with every atom smeared to radius r.
/// r defaults to four cell widths.
inline GridFunction embed(const MixedDensity& mixed, const Domain1D& domain, double r = 0.0) {
  mixed.validate();
  if (r <= 0.0) r = 4.0 * domain.width();
  GridFunction out = embed(mixed.continuous, domain) * mixed.lambda;
  for (const auto& atom : mixed.atoms) out += dirac_bump(atom.location, r, domain) * ((1.0 - mixed.lambda) * atom.mass);
  return out;
}

}  // namespace tip::hilbert
