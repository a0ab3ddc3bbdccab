#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "tip/cases.hpp"
#include "tip/preference.hpp"

using namespace tip;
using namespace tip::hilbert;
using namespace tip::preference;

namespace {

GridFunction random_function(const Domain1D& d, std::mt19937_64& g, double sd = 1.0) {
  std::normal_distribution<double> n(0.0, sd);
  std::vector<double> v(d.cells());
  for (double& x : v) x = n(g);
  return GridFunction(d, std::move(v));
}

/// Random density on the grid: positive samples normalised to unit mass.
GridFunction random_embedding(const Domain1D& d, std::mt19937_64& g) {
  std::gamma_distribution<double> gam(0.5, 1.0);
  std::vector<double> v(d.cells());
  for (double& x : v) x = gam(g);
  GridFunction f(d, std::move(v));
  return f * (1.0 / f.integral());
}

}  // namespace

TEST(ActionUtility, EnforcesBound) {
  const Domain1D d(-3, 3, 60);
  EXPECT_THROW(ActionUtility("a", GridFunction::constant(d, -11.0), 10.0), ContractError);
  EXPECT_THROW(ActionUtility("a", GridFunction::constant(d, 0.0), 0.0), ContractError);
  EXPECT_NO_THROW(ActionUtility("a", GridFunction::constant(d, -10.0), 10.0));
}

TEST(BehaviorDirection, TwoObjectAndPeaceOfMindSigns) {
  const auto d = cases::road_domain();
  const auto fwd = cases::forward_utility(d);
  const auto brk = cases::brake_utility(d);
  const auto fig3 = behavior_direction(fwd, brk);
  const auto fig8 = behavior_direction(brk, fwd);
  for (std::size_t i = 0; i < d.cells(); ++i) {
    const double x = d.midpoint(i);
    const bool inside = x >= -1.0 && x <= 1.0;
    ASSERT_EQ(fig3.delta_u[i], inside ? -5.0 : 5.0);
    ASSERT_EQ(fig8.delta_u[i], inside ? 5.0 : -5.0);
  }
  EXPECT_NEAR(norm(fig3.unit), 1.0, 1e-9);
  EXPECT_NEAR(fig3.delta_u_norm, std::sqrt(150.0), 1e-6);
}

TEST(BehaviorDirection, IdenticalActionsAreRejected) {
  const auto d = cases::road_domain(60);
  const ActionUtility a("brake", cases::brake_utility(d), 10.0);
  const ActionUtility b("brake-again", cases::brake_utility(d), 10.0);
  try {
    behavior_direction(a, b);
    FAIL() << "expected IndistinctActions";
  } catch (const IndistinctActions& e) {
    EXPECT_NE(std::string(e.what()).find("brake-again"), std::string::npos);
  }
}

TEST(PreferenceScore, PeaceOfMindCase) {
  const auto c = cases::figure8b();
  const auto dir = behavior_direction(c.u_star, c.u_alt);
  EXPECT_NEAR(preference_score(c.mu_p, dir), 5.0 / 3.0, 1e-3);
  EXPECT_NEAR(preference_score(c.mu_q, dir), 5.0, 1e-3);
  EXPECT_TRUE(in_planning_halfspace(c.mu_q, dir));
  EXPECT_TRUE(in_planning_halfspace(c.mu_p, dir));
  EXPECT_EQ(decompose(c.mu_p, c.mu_p, dir).delta_xi, 0.0);
}

TEST(PreferenceScore, TwoObjectErrorFlipsTheDecision) {
  const auto c = cases::figure3();
  const auto dir = behavior_direction(c.u_star, c.u_alt);
  EXPECT_NEAR(preference_score(c.mu_q, dir), -5.0, 1e-3);
  EXPECT_FALSE(in_planning_halfspace(c.mu_q, dir));
  EXPECT_TRUE(in_planning_halfspace(c.mu_p, dir));
}

TEST(PreferenceScore, TieIsNotPreferred) {
  const Domain1D d(0, 1, 10);
  const auto dir = behavior_direction(GridFunction::indicator(d, 0, 0.5, 1.0), GridFunction::indicator(d, 0.5, 1, 1.0));
  const auto mu = GridFunction::constant(d, 1.0);
  EXPECT_EQ(preference_score(mu, dir), 0.0);
  EXPECT_FALSE(in_planning_halfspace(mu, dir));
}

TEST(PreferenceScore, DomainMismatch) {
  const auto c = cases::figure8b(600);
  const auto dir = behavior_direction(c.u_star, c.u_alt);
  EXPECT_THROW(preference_score(GridFunction::constant(Domain1D(-3, 3, 601), 1.0), dir), DomainMismatch);
}

TEST(Decompose, TwoObjectEnergySplit) {
  const auto c = cases::figure3();
  const auto s = cases::summarize(c);
  const auto& r = s.decomposition;
  EXPECT_NEAR(r.pce_energy_fraction, 1.0 / 3.0, 1e-3);
  EXPECT_NEAR(r.pie_energy_fraction(), 2.0 / 3.0, 1e-3);
  EXPECT_NEAR(r.delta_xi, -10.0, 1e-3);
  EXPECT_NEAR(inner_product(r.perpendicular, c.u_star - c.u_alt), 0.0, 1e-6);
  EXPECT_NEAR(s.xi_p, 5.0, 1e-3);
  EXPECT_NEAR(s.xi_q, -5.0, 1e-3);
}

TEST(Decompose, PeaceOfMindDelta) {
  const auto s = cases::summarize(cases::figure8b());
  EXPECT_NEAR(s.decomposition.delta_xi, 10.0 / 3.0, 1e-3);
  EXPECT_GT(s.decomposition.delta_xi, 0.0);
}

TEST(Decompose, OrthogonalPerturbation) {
  const auto d = cases::road_domain();
  const auto dir = behavior_direction(cases::forward_utility(d), cases::brake_utility(d));
  // dU = -5 on [-1,1] and +5 on [2,3]: moving mass between [-1,0] and
  // [0,1] keeps <dmu, dU> = 0.
  const auto mu_p = embed(AnalyticDensity::uniform(-1.0, 0.0), d);
  const auto mu_q = embed(AnalyticDensity::uniform(0.0, 1.0), d);
  const auto r = decompose(mu_p, mu_q, dir);
  EXPECT_NEAR(r.delta_xi, 0.0, 1e-9);
  EXPECT_LT(norm(r.parallel), 1e-9);
  EXPECT_NEAR(r.pce_energy_fraction, 0.0, 1e-12);
}

TEST(Decompose, ZeroErrorHasZeroFractions) {
  const auto c = cases::figure3(600);
  const auto r = decompose(c.mu_p, c.mu_p, behavior_direction(c.u_star, c.u_alt));
  EXPECT_EQ(r.pce_energy_fraction, 0.0);
  EXPECT_EQ(r.pie_energy_fraction(), 0.0);
  EXPECT_TRUE(r.parallel.is_zero());
}

TEST(Decompose, CsvLayout) {
  const auto c = cases::figure3(6);
  std::ostringstream os;
  write_csv(os, cases::summarize(c).decomposition);
  const std::string s = os.str();
  EXPECT_EQ(s.rfind("x_mid,delta_mu,parallel,perpendicular\n", 0), 0u);
  EXPECT_NE(s.find("\n#summary,delta_xi="), std::string::npos);
  EXPECT_EQ(std::count(s.begin(), s.end(), '\n'), 1 + 6 + 1);
}

// ---------------------------------------------------------------------------
// Properties
// ---------------------------------------------------------------------------

TEST(PreferenceProperties, PythagorasAndReconstruction) {
  std::mt19937_64 g(11);
  const Domain1D d(-3, 3, 120);
  for (int k = 0; k < 1000; ++k) {
    const auto mu_p = random_embedding(d, g), mu_q = random_embedding(d, g);
    const auto dir = behavior_direction(random_function(d, g, 5.0), random_function(d, g, 5.0));
    const auto r = decompose(mu_p, mu_q, dir);
    const double total = inner_product(r.delta_mu, r.delta_mu);
    ASSERT_NEAR(total, inner_product(r.parallel, r.parallel) + inner_product(r.perpendicular, r.perpendicular),
                1e-9 * total);
    const auto back = r.parallel + r.perpendicular;
    for (std::size_t i = 0; i < d.cells(); ++i)
      ASSERT_NEAR(back[i], r.delta_mu[i], 1e-9 * std::max(1.0, std::abs(r.delta_mu[i])));
    ASSERT_NEAR(inner_product(r.perpendicular, dir.delta_u), 0.0, 1e-6 * norm(r.delta_mu) * dir.delta_u_norm);
    ASSERT_GE(r.pce_energy_fraction, 0.0);
    ASSERT_LE(r.pce_energy_fraction, 1.0);
  }
}

TEST(PreferenceProperties, DeltaXiIgnoresPlanningInvariantError) {
  std::mt19937_64 g(12);
  const Domain1D d(-3, 3, 120);
  for (int k = 0; k < 1000; ++k) {
    const auto mu_p = random_embedding(d, g), mu_q = random_embedding(d, g);
    const auto dir = behavior_direction(random_function(d, g, 5.0), random_function(d, g, 5.0));
    auto v = random_function(d, g);
    v -= dir.unit * inner_product(v, dir.unit);  // v orthogonal to dU
    const double base = decompose(mu_p, mu_q, dir).delta_xi;
    const double moved = decompose(mu_p, mu_q + v, dir).delta_xi;
    const double scale = std::max(std::abs(base), norm(mu_q - mu_p) * dir.delta_u_norm);
    ASSERT_NEAR(moved, base, 1e-9 * scale) << k;
  }
}

TEST(PreferenceProperties, SignCasesAndHalfspaceFlip) {
  std::mt19937_64 g(13);
  const Domain1D d(-3, 3, 60);
  int negative = 0, positive = 0;
  for (int k = 0; k < 1000; ++k) {
    const auto mu_p = random_embedding(d, g), mu_q = random_embedding(d, g);
    const auto dir = behavior_direction(random_function(d, g), random_function(d, g));
    const double xi_p = preference_score(mu_p, dir), xi_q = preference_score(mu_q, dir);
    const double dxi = decompose(mu_p, mu_q, dir).delta_xi;
    ASSERT_NEAR(dxi, xi_q - xi_p, 1e-9 * (1.0 + std::abs(xi_p) + std::abs(xi_q)));
    (dxi < 0 ? negative : positive)++;
    ASSERT_EQ(in_planning_halfspace(mu_q, dir), xi_q > 0.0);
    ASSERT_EQ(in_planning_halfspace(mu_p, dir), xi_p > 0.0);
  }
  EXPECT_GT(negative, 0);
  EXPECT_GT(positive, 0);
}

TEST(PreferenceProperties, Idempotence) {
  std::mt19937_64 g(14);
  const Domain1D d(-3, 3, 60);
  for (int k = 0; k < 1000; ++k) {
    const auto dir = behavior_direction(random_function(d, g), random_function(d, g));
    const auto first = decompose_error(random_function(d, g), dir);
    const auto again = decompose_error(first.parallel, dir);
    const double scale = std::max(1e-300, norm(first.parallel));
    ASSERT_LT(norm(again.perpendicular), 1e-9 * scale);
    ASSERT_LT(norm(again.parallel - first.parallel), 1e-9 * scale);
  }
}
