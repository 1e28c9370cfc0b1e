#include <cmath>

#include <gtest/gtest.h>

#include "fklab/discretize.hpp"
#include "fklab/rates.hpp"
#include "fklab/spectral.hpp"
#include "test_util.hpp"

using namespace fklab;

namespace {

KernelSpec truncated(double alpha) {
  KernelSpec k;
  k.alpha1 = k.alpha2 = alpha;
  return k;
}

PotentialSpec exp_log_valley() {
  PotentialSpec p = make_valley(3, 0.5, make_power(2));
  p.radius_law = ValleyRadiusLaw::exp_log;
  p.c6 = 1;
  p.eta1 = 1;
  p.eta2 = 2;
  p.validate();
  return p;
}

}  // namespace

TEST(GeneralizedInverse, Examples) {
  EXPECT_NEAR(generalized_inverse([](double r) { return r * r; }, Monotone::increasing, 4.0), 2.0, 1e-9);
  EXPECT_NEAR(generalized_inverse([](double s) { return std::exp(-s); }, Monotone::decreasing, std::exp(-3.0)), 3.0,
              1e-9);
}

TEST(GeneralizedInverse, PhiRoundTrip) {
  const PotentialSpec p = make_power_log(1, 3);
  const double y = phi_of_R(p, 5.0);
  EXPECT_NEAR(generalized_inverse([&](double R) { return phi_of_R(p, R); }, Monotone::increasing, y), 5.0, 1e-9);
  const RateBundle b(truncated(1), p, 0.05);
  EXPECT_NEAR(phi_inverse(b, y), 5.0, 1e-9);
}

TEST(GeneralizedInverse, NoBracketIsUnbounded) {
  expect_error(ErrorKind::UnboundedInverse,
               [] { generalized_inverse([](double) { return 0.0; }, Monotone::increasing, 1.0); });
}

TEST(Rates, EpsOutsideRangeRejected) {
  expect_error(ErrorKind::Parameter, [] { RateBundle(truncated(1), make_power(2), 0.1); });
}

TEST(Rates, AlphaByDirectSubstitution) {
  const double eps = 1.0 / 22;
  const RateBundle b(truncated(0.5), make_power(2), eps);
  // phi(3) with sup V over |z| <= 3 + 2 eps; s = 1 gives 1 + s^{-2} = 2
  const double sup = std::pow(3 + 2 * eps, 2);
  const double want = b.c_kappa * std::exp(2 * (1 / (1 - 6 * eps)) * 3 * std::log(1 + 3 + sup)) * 2;
  EXPECT_NEAR(alpha_rate(b, 2, 1), want, 1e-10 * want);
}

TEST(Rates, AlphaLimitsAndMonotonicity) {
  const RateBundle b(truncated(0.5), make_power(2), 0.05);
  const double lim = b.c_kappa / std::pow(b.comparison().value(2 + 1), 2);
  EXPECT_NEAR(alpha_rate(b, 2, 1e12), lim, 1e-9 * lim);
  for (double r : {1.0, 2.0, 4.0, 8.0}) EXPECT_GT(alpha_rate(b, 2 * r, 0.3), alpha_rate(b, r, 0.3));
  expect_error(ErrorKind::Range, [&] { alpha_rate(b, 0.5, 1); });
}

TEST(Rates, GammaVanishesForPower) {
  const RateBundle b(truncated(1), make_power(2), 0.05);
  for (double s : {1e-4, 1e-2, 0.5}) EXPECT_EQ(gamma_rate(b, s), 0.0);
}

TEST(Rates, BetaNonIncreasingAndFrozen) {
  const RateBundle b(truncated(1), make_power_log(1, 2), 0.05);
  const double s0 = b.s0();
  double prev = -kInf;
  for (int i = 0; i < 50; ++i) {
    const double s = s0 * std::pow(10.0, -6.0 + 6.0 * i / 49);
    const double lb = log_beta(b, s);
    if (i) EXPECT_LE(lb, prev + 1e-12) << s;
    prev = lb;
  }
  EXPECT_EQ(beta_rate(b, 2 * s0), beta_rate(b, s0));
}

TEST(Rates, ClosedFormTable) {
  EXPECT_FALSE(closed_form_iuc(0.5, 0));
  EXPECT_FALSE(closed_form_iuc(1, 1));
  EXPECT_FALSE(closed_form_iuc(1, 2));
  EXPECT_TRUE(closed_form_iuc(1, 3));
  EXPECT_TRUE(closed_form_iuc(1.5, 0));
  EXPECT_TRUE(closed_form_iuc(2, -1));
}

TEST(IntegralTest, AgreesWithClosedForm) {
  for (auto [t1, t2] : std::vector<std::pair<double, double>>{{1, 3}, {1.5, 0}, {2, -1}, {0.5, 0}, {1, 1}}) {
    const auto r = iuc_integral_test([&](double u) { return power_log_rate_inverse(t1, t2, u); }, 10.0);
    const auto want = closed_form_iuc(t1, t2) ? IntegralVerdict::converges : IntegralVerdict::diverges;
    EXPECT_EQ(r.verdict, want) << t1 << " " << t2 << " -> " << to_string(r.verdict);
  }
}

TEST(IntegralTest, BoundaryCaseNeverConverges) {
  // 1/log^2: the integral grows like log log, too slowly to call at any finite horizon
  const auto r = iuc_integral_test([](double u) { return power_log_rate_inverse(1, 2, u); }, 10.0);
  EXPECT_NE(r.verdict, IntegralVerdict::converges);
}

TEST(IntegralTest, ConstantRateDiverges) {
  const auto r = iuc_integral_test([](double) { return 0.3; }, 10.0);
  EXPECT_EQ(r.verdict, IntegralVerdict::diverges);
}

TEST(Slicing, RejectsVanishingGamma) {
  const RateBundle b(truncated(1), make_power(2), 0.05);
  expect_error(ErrorKind::SlicingInapplicable, [&] { slicing_schedule(b, 0.01); });
}

TEST(Slicing, RejectsPowerLawValley) {
  const RateBundle b(truncated(0.5), make_valley(3, 0.5, make_power(2)), 0.05);
  expect_error(ErrorKind::SlicingInapplicable, [&] { slicing_schedule(b, 0.01); });
}

TEST(Slicing, ExpLogValleySummable) {
  const RateBundle b(truncated(0.5), exp_log_valley(), 0.05);
  long prev = -1;
  for (double s : {1e-3, 1e-2, 1e-1}) {
    const SlicingResult r = slicing_schedule(b, s);
    EXPECT_TRUE(std::isfinite(r.log_summability_sum));
    EXPECT_GT(r.n0, 0);
    EXPECT_TRUE(std::isfinite(r.log_beta_tilde));
    if (prev >= 0) EXPECT_LE(r.n0, prev) << s;
    prev = r.n0;
  }
}

TEST(Slicing, LogGammaFiniteWhereGammaUnderflows) {
  const RateBundle b(truncated(0.5), exp_log_valley(), 0.05);
  for (double s : {1e-1, 1e-3, 1e-6}) EXPECT_TRUE(std::isfinite(log_gamma_rate(b, s))) << s;
}

TEST(Witness, ZeroAndHomogeneity) {
  const KernelSpec k = truncated(1);
  const PotentialSpec p = make_power(2);
  const Grid g = Grid::make(5, 101);
  const OperatorAssembly as = assemble_generator(k, &p, g);
  const SpectralResult sp = solve_spectrum(as, 2);
  const RateBundle b(k, p, 0.05);
  const Eigen::VectorXd phi = sp.ground_state.cwiseAbs();

  const auto z = mixed_sp_witness(b, as.Bform, g.h, phi, Eigen::VectorXd::Zero(g.N), 0.1, kInf);
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_EQ(z.rhs, 0.0);

  Eigen::VectorXd f = (-g.nodes().array().square()).exp();
  const auto w1 = mixed_sp_witness(b, as.Bform, g.h, phi, f, 0.1, kInf);
  const auto w2 = mixed_sp_witness(b, as.Bform, g.h, phi, 2 * f, 0.1, kInf);
  EXPECT_NEAR(w2.lhs, 4 * w1.lhs, 1e-12 * w2.lhs);
  EXPECT_NEAR(w2.rhs, 4 * w1.rhs, 1e-12 * w2.rhs);

  const auto g1 = mixed_sp_witness(b, as.Bform, g.h, phi, phi, 1e-3, kInf);
  EXPECT_LE(g1.lhs, g1.rhs);
}

TEST(Tabulate, RowsMatchRateFunctions) {
  const RateBundle b(truncated(1), make_power_log(1, 2), 0.05);
  const auto rows = tabulate_rates(b, {1e-3, 1e-2, 0.1, 1.0}, false);
  ASSERT_EQ(rows.size(), 4u);
  for (const auto& r : rows) {
    // beta itself may overflow a double at small s; its log may not
    EXPECT_TRUE(std::isfinite(log_beta(b, r.s)));
    EXPECT_EQ(r.beta, beta_rate(b, r.s));
    EXPECT_EQ(r.gamma, 0.0);
  }
  EXPECT_TRUE(std::isfinite(rows.back().beta));
}
