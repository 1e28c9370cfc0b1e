#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fklab/error.hpp"
#include "fklab/model.hpp"
#include "test_util.hpp"

using namespace fklab;

namespace {

KernelSpec truncated(double alpha, double kappa = 1.0) {
  KernelSpec k;
  k.family = KernelFamily::truncated;
  k.alpha1 = k.alpha2 = alpha;
  k.kappa = kappa;
  return k;
}

// sum over the explicit ball list; a ball straddling R is clipped exactly
double theta_oracle(const PotentialSpec& p, double R, long nmax) {
  double s = 0;
  for (long n = nmax; n >= 1; --n) {
    const double x = valley_center(p, n), r = valley_radius(p, n);
    if (x - R >= r) s += 2 * r;
    else if (R - x < r) s += r + (x - R);  // not x + r - R: r can be far below ulp(x)
  }
  return s;
}

}  // namespace

TEST(Kernel, TruncatedClosedForm) {
  const KernelSpec k = truncated(0.5);
  EXPECT_NEAR(eval_kernel(k, 0.0, 0.5), std::pow(0.5, -1.5), 1e-12);
  EXPECT_NEAR(eval_kernel(k, 0.0, 0.5), 2.82843, 1e-5);
  EXPECT_EQ(eval_kernel(k, 0.0, 2.0), 0.0);
}

TEST(Kernel, DiagonalIsDomainError) {
  expect_error(ErrorKind::Domain, [] { eval_kernel(truncated(1.0), 0.3, 0.3); });
}

TEST(Kernel, SymmetricForAllFamilies) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  std::vector<KernelSpec> ks;
  for (auto f : {KernelFamily::stable_like, KernelFamily::truncated, KernelFamily::tempered,
                 KernelFamily::variable_order}) {
    KernelSpec k;
    k.family = f;
    k.alpha1 = 0.6;
    k.alpha2 = f == KernelFamily::variable_order ? 1.4 : 0.6;
    if (f == KernelFamily::tempered) k.gamma = 2.0;
    k.validate();
    ks.push_back(k);
  }
  for (const auto& k : ks)
    for (int i = 0; i < 100; ++i) {
      const double x = u(rng), y = u(rng);
      EXPECT_EQ(eval_kernel(k, x, y), eval_kernel(k, y, x));
    }
}

TEST(Kernel, SandwichOnNearRange) {
  KernelSpec k;
  k.family = KernelFamily::variable_order;
  k.alpha1 = 0.5;
  k.alpha2 = 1.5;
  k.c1 = 0.5;
  k.c2 = 2.0;
  k.validate();
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-5, 5), z(1e-4, 1.0);
  for (int i = 0; i < 1000; ++i) {
    const double x = u(rng), r = z(rng), y = x + (i % 2 ? r : -r);
    const double j = eval_kernel(k, x, y);
    EXPECT_LE(k.c1 * std::pow(r, -1 - k.alpha1), j * (1 + 1e-14));
    EXPECT_LE(j, k.c2 * std::pow(r, -1 - k.alpha2) * (1 + 1e-14));
  }
}

TEST(Kernel, MomentsClosedForm) {
  const KernelSpec k = truncated(0.5);
  const auto m = kernel_moments(k, 0.25);
  EXPECT_NEAR(m.L1, 4.0, 1e-12);
  EXPECT_NEAR(kernel_moments(k, 1.0).L2, 2.0 / 1.5, 1e-12);
  EXPECT_EQ(kernel_moments(k, 1.0).L1, 0.0);
}

TEST(Kernel, MomentsMatchQuadrature) {
  for (double alpha : {0.3, 0.5, 1.0, 1.7})
    for (double s : {0.01, 0.1, 0.5, 0.9}) {
      const KernelSpec k = truncated(alpha);
      const auto a = kernel_moments(k, s), q = kernel_moments_quadrature(k, s);
      EXPECT_NEAR(q.L1, a.L1, 1e-8 * a.L1) << alpha << " " << s;
      EXPECT_NEAR(q.L2, a.L2, 1e-8 * a.L2) << alpha << " " << s;
    }
}

TEST(Kernel, MomentRadiusBeyondKappaIsRangeError) {
  expect_error(ErrorKind::Range, [] { kernel_moments(truncated(0.5), 1.5); });
}

TEST(Kernel, InvalidParametersRejected) {
  KernelSpec k = truncated(1.0);
  k.alpha1 = 2.5;
  expect_error(ErrorKind::Parameter, [&] { k.validate(); });
  k = truncated(1.0);
  k.family = KernelFamily::tempered;
  expect_error(ErrorKind::Parameter, [&] { k.validate(); });
}

TEST(Potential, Evaluation) {
  EXPECT_DOUBLE_EQ(eval_potential(make_power(2), 3.0), 9.0);
  EXPECT_EQ(eval_potential(make_power_log(1, 3), 0.0), 0.0);
  const PotentialSpec v = make_valley(3, 0.5, make_power(2));
  EXPECT_EQ(eval_potential(v, 1.0), 1.0);
  EXPECT_GT(eval_potential(v, 4.5), 1.0);
}

TEST(Potential, PhiOfRPower) {
  const PotentialSpec p = make_power(2);
  EXPECT_DOUBLE_EQ(phi_of_R(p, 0.5), 1.0);
  for (double R : {1.0, 2.0, 7.5}) EXPECT_NEAR(phi_of_R(p, R), R * R, 1e-12 * R * R);
}

TEST(Potential, PhiMonotoneThetaNonIncreasing) {
  const std::vector<PotentialSpec> ps = {make_power(0.5), make_power(2), make_power_log(1, 2),
                                         make_valley(3, 0.5, make_power(2))};
  for (const auto& p : ps) {
    double prev_phi = 0, prev_theta = kInf;
    for (double R = 0.05; R < 1e4; R *= 1.3) {
      const double ph = phi_of_R(p, R), th = theta_of_R(p, R);
      EXPECT_GE(ph, prev_phi) << to_string(p.family) << " R=" << R;
      EXPECT_LE(th, prev_theta) << to_string(p.family) << " R=" << R;
      prev_phi = ph;
      prev_theta = th;
    }
    EXPECT_LT(theta_of_R(p, 1e6), 1e-6 * theta_of_R(p, 0.5) + 1e-300);
  }
}

TEST(Potential, ThetaPowerVanishesBeyondOne) {
  for (double R : {1.0, 2.0, 50.0}) EXPECT_EQ(theta_of_R(make_power(2), R), 0.0);
}

TEST(Potential, ValleyThetaMatchesBallList) {
  const PotentialSpec p = make_valley(3, 0.5, make_power(2));
  for (double R : {1.5, 8.0, 8.01, 27.0, 100.0, 1000.0}) {
    const double o = theta_oracle(p, R, 200000);
    EXPECT_NEAR(theta_of_R(p, R), o, 1e-9 * o) << "R=" << R;
  }
}

TEST(Potential, LogThetaAgreesWhereThetaIsRepresentable) {
  PotentialSpec p = make_valley(3, 0.5, make_power(2));
  for (double R : {2.0, 30.0, 500.0}) EXPECT_NEAR(log_theta_of_R(p, R), std::log(theta_of_R(p, R)), 1e-10);
  p.radius_law = ValleyRadiusLaw::exp_log;
  p.validate();
  double prev = kInf;
  for (double R = 2; R < 1e5; R *= 2) {
    const double lt = log_theta_of_R(p, R);
    EXPECT_TRUE(std::isfinite(lt)) << R;
    EXPECT_LE(lt, prev);
    prev = lt;
  }
}

TEST(Potential, ValleyTailBoundedForPowerLaw) {
  const PotentialSpec p = make_valley(5, 0.5, make_power(2));
  std::vector<double> Rs;
  for (int m = 2; m <= 30; ++m) Rs.push_back(std::pow(m, 5.0));
  const auto rep = valley_tail_bound_check(p, Rs, 0.5);
  EXPECT_TRUE(rep.bounded);
  ASSERT_EQ(rep.tail.size(), Rs.size());
  // tail at a center m^k0: half the m-th ball plus the rest of the series
  const double m = 10, o = theta_oracle(p, std::pow(m, 5.0), 100000);
  EXPECT_NEAR(valley_tail_measure(p, std::pow(m, 5.0)), o, 1e-9 * o);
}

TEST(Potential, ValleyTailConstantAcrossEps) {
  // ratio tail * R^{d/alpha - eps}: on R >= 1 a larger eps lowers every ratio, so the fitted c0 cannot grow
  const PotentialSpec p = make_valley(5, 0.5, make_power(2));
  std::vector<double> Rs;
  for (int m = 2; m <= 20; ++m) Rs.push_back(std::pow(m, 5.0));
  const auto a = valley_tail_bound_check(p, Rs, 0.5), b = valley_tail_bound_check(p, Rs, 1.0);
  EXPECT_LE(b.c0, a.c0);
  for (size_t i = 0; i < Rs.size(); ++i) EXPECT_NEAR(b.ratio[i], a.ratio[i] * std::pow(Rs[i], -0.5), 1e-9 * a.ratio[i]);
}

TEST(Potential, SingleBallValley) {
  PotentialSpec p = make_valley(3, 0.5, make_power(2));
  p.max_balls = 1;
  EXPECT_NEAR(valley_tail_measure(p, 0.0 + 1e-9), 2.0, 1e-8);  // ball [0, 2]
  EXPECT_EQ(valley_tail_measure(p, 2.5), 0.0);
}

TEST(Potential, TailCheckNeedsValley) {
  expect_error(ErrorKind::Type, [] { valley_tail_bound_check(make_power(2), {1, 2}, 0.5); });
}
