#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "fklab/bounds.hpp"
#include "test_util.hpp"

using namespace fklab;

namespace {

Eigen::VectorXd nodes(double R, int N) { return Eigen::VectorXd::LinSpaced(N, -R, R); }

}  // namespace

TEST(Envelope, Ex12LowerArithmetic) {
  Envelope e;
  e.kind = EnvelopeKind::ex12_gamma_inf;
  e.upper = false;
  e.theta = 2;
  e.eps = 0.1;
  EXPECT_NEAR(eval_envelope(e, 10), -(1 + 0.1) * 2 * 10 * std::log(11.0), 1e-12);
  EXPECT_NEAR(eval_envelope(e, 10), -52.75, 0.01);
}

TEST(Envelope, ZeroAtOrigin) {
  PotentialSpec V = make_power(2);
  for (auto k : {EnvelopeKind::prop31_lower, EnvelopeKind::thm12_lower, EnvelopeKind::thm12_upper,
                 EnvelopeKind::ex12_gamma_inf, EnvelopeKind::ex12_gamma_finite, EnvelopeKind::prop41_power,
                 EnvelopeKind::prop41_exp}) {
    Envelope e;
    e.kind = k;
    e.potential = &V;
    EXPECT_EQ(eval_envelope(e, 0.0), 0.0) << to_string(k);
  }
}

TEST(Envelope, LowerBelowUpper) {
  Envelope lo, hi;
  lo.kind = EnvelopeKind::thm12_lower;
  hi.kind = EnvelopeKind::thm12_upper;
  Envelope elo, ehi;
  elo.upper = false;
  ehi.upper = true;
  for (double x : {0.5, 2.0, 10.0, 100.0}) {
    EXPECT_LE(eval_envelope(lo, x), eval_envelope(hi, x));
    EXPECT_LE(eval_envelope(elo, x), eval_envelope(ehi, x));
  }
}

TEST(Envelope, GammaFiniteShape) {
  Envelope e;
  e.kind = EnvelopeKind::ex12_gamma_finite;
  e.gamma = 2;
  e.theta = 2;
  // |x| log^{1/2}(1+|x|) shape: ratio at two points fixed by the shape alone
  const double r = eval_envelope(e, 20) / eval_envelope(e, 5);
  EXPECT_NEAR(r, 20 * std::sqrt(std::log(21.0)) / (5 * std::sqrt(std::log(6.0))), 1e-12);
}

TEST(Envelope, Prop41ContinuityInTheta6) {
  Envelope e;
  e.kind = EnvelopeKind::prop41_power;
  e.theta6 = 1e-6;
  for (double x : {1.0, 5.0, 20.0}) EXPECT_NEAR(eval_envelope(e, x), -x, 1e-4 * x);
}

TEST(Envelope, ParameterErrors) {
  Envelope e;
  e.kind = EnvelopeKind::prop31_lower;
  expect_error(ErrorKind::Parameter, [&] { e.validate(); });  // no potential
  e.kind = EnvelopeKind::ex12_gamma_finite;
  e.gamma = kInf;
  expect_error(ErrorKind::Parameter, [&] { e.validate(); });
  e = Envelope{};
  e.eps = 1.5;
  expect_error(ErrorKind::Parameter, [&] { e.validate(); });
  expect_error(ErrorKind::Config, [] { envelope_kind_from_string("nope"); });
}

TEST(Fit, ExactRecovery) {
  const Eigen::VectorXd x = nodes(20, 401);
  Eigen::VectorXd phi(x.size());
  for (int i = 0; i < x.size(); ++i) phi[i] = std::exp(-2 * std::abs(x[i]) * std::log1p(std::abs(x[i])));
  const auto f = fit_decay(x, phi, 20, DecayModel::b_fixed, 1.0);
  EXPECT_NEAR(f.a, 2.0, 1e-6);
  EXPECT_NEAR(f.b, 1.0, 0.0);
  const auto g = fit_decay(x, phi, 20, DecayModel::b_free);
  EXPECT_NEAR(g.a, 2.0, 1e-6);
  EXPECT_NEAR(g.b, 1.0, 1e-6);
}

TEST(Fit, NoisyRecovery) {
  const Eigen::VectorXd x = nodes(20, 401);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> N(0, 0.01);
  Eigen::VectorXd phi(x.size());
  for (int i = 0; i < x.size(); ++i) {
    const double ax = std::abs(x[i]);
    phi[i] = std::exp(-2 * ax * std::log1p(ax) * (1 + N(rng)));
  }
  EXPECT_NEAR(fit_decay(x, phi, 20, DecayModel::b_fixed, 1.0).a, 2.0, 2e-2);
}

TEST(Fit, TooFewNodes) {
  const Eigen::VectorXd x = nodes(2, 9);  // six nodes in the window
  const Eigen::VectorXd phi = Eigen::VectorXd::Ones(9);
  expect_error(ErrorKind::InsufficientData, [&] { fit_decay(x, phi, 2, DecayModel::b_fixed, 1.0); });
}

TEST(Sandwich, SelfComparisonHasNoViolations) {
  const Eigen::VectorXd x = nodes(20, 401);
  Envelope lo, hi;
  lo.upper = false;
  hi.upper = true;
  Eigen::VectorXd phi(x.size());
  for (int i = 0; i < x.size(); ++i) phi[i] = std::exp(eval_envelope(lo, x[i]));
  const auto r = envelope_sandwich_report(x, phi, lo, hi, 20);
  EXPECT_GT(r.nodes, 10);
  EXPECT_EQ(r.violations, 0);
  EXPECT_EQ(r.violation_fraction, 0.0);
}

TEST(Sandwich, SteeperDecayViolates) {
  const Eigen::VectorXd x = nodes(20, 401);
  Envelope lo, hi;
  lo.upper = false;
  hi.upper = true;
  Eigen::VectorXd phi(x.size());
  for (int i = 0; i < x.size(); ++i) phi[i] = std::exp(3 * eval_envelope(lo, x[i]));
  EXPECT_GT(envelope_sandwich_report(x, phi, lo, hi, 20).violations, 0);
}
