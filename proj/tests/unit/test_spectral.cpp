#include <cmath>

#include <gtest/gtest.h>

#include "fklab/spectral.hpp"
#include "test_util.hpp"

using namespace fklab;

namespace {

struct Fixture {
  KernelSpec k;
  PotentialSpec p = make_power(2);
  Grid g = Grid::make(5, 201);
  OperatorAssembly as;
  SpectralResult sp;
  Fixture() {
    as = assemble_generator(k, &p, g);
    sp = solve_spectrum(as, g.N);
  }
};

const Fixture& fx() {
  static const Fixture f;
  return f;
}

}  // namespace

TEST(Spectrum, TwoByTwo) {
  Grid g;
  g.R = 1;
  g.N = 2;
  g.h = 1;
  Eigen::MatrixXd A(2, 2);
  A << 2, -1, -1, 2;
  const auto s = solve_spectrum(A, g, 2);
  EXPECT_NEAR(s.eigenvalues[0], 1, 1e-14);
  EXPECT_NEAR(s.eigenvalues[1], 3, 1e-14);
}

TEST(Spectrum, ContractOnPowerPotential) {
  const auto& s = fx().sp;
  EXPECT_GT(s.lambda1(), 0);
  EXPECT_GT(s.eigenvalues[1] - s.eigenvalues[0], 0);
  EXPECT_LE(s.max_residual, 1e-8);
  EXPECT_LE(s.orthonormality_defect, 1e-8);
  const Eigen::VectorXd& phi = s.ground_state;
  for (int i = 0; i < phi.size(); ++i) EXPECT_GT(phi[i], 0) << i;
}

TEST(Spectrum, ConstantShift) {
  const auto& f = fx();
  const double c = 3.25;
  const Eigen::MatrixXd B = f.as.A + c * Eigen::MatrixXd::Identity(f.g.N, f.g.N);
  const auto s = solve_spectrum(B, f.g, 6);
  for (int n = 0; n < 6; ++n) EXPECT_NEAR(s.eigenvalues[n], f.sp.eigenvalues[n] + c, 1e-9 * (1 + s.eigenvalues[n]));
  EXPECT_NEAR(std::abs(s.ground_state.dot(f.sp.ground_state) * f.g.h), 1.0, 1e-9);
}

TEST(Spectrum, VariationalIdentity) {
  const auto& f = fx();
  const Eigen::VectorXd& phi = f.sp.ground_state;
  const double D = phi.dot(f.as.Bform * phi) * f.g.h / (phi.squaredNorm() * f.g.h);
  EXPECT_NEAR(D, f.sp.lambda1(), 1e-6 * f.sp.lambda1());
}

TEST(Spectrum, ModeCountOutOfRange) {
  expect_error(ErrorKind::Precondition, [] { solve_spectrum(fx().as, 0); });
}

TEST(HeatKernel, SymmetryAndChapmanKolmogorov) {
  const auto& f = fx();
  const auto P = heat_kernel(f.sp, 0.5), P2 = heat_kernel(f.sp, 1.0);
  EXPECT_EQ((P.p - P.p.transpose()).cwiseAbs().maxCoeff(), 0.0);
  const double ck = (P.p * P.p * f.g.h - P2.p).cwiseAbs().maxCoeff() / P2.p.cwiseAbs().maxCoeff();
  EXPECT_LT(ck, 1e-8);
  expect_error(ErrorKind::Domain, [&] { heat_kernel(f.sp, 0.0); });
}

TEST(HeatKernel, LargeTimeLimitIsGroundStateProjector) {
  const auto& f = fx();
  const double gap = f.sp.eigenvalues[1] - f.sp.eigenvalues[0];
  const double t = 50 / gap;
  const auto P = heat_kernel(f.sp, t);
  const Eigen::VectorXd& phi = f.sp.ground_state;
  const Eigen::MatrixXd lim = phi * phi.transpose();
  const Eigen::MatrixXd got = std::exp(f.sp.lambda1() * t) * P.p;
  EXPECT_LT((got - lim).cwiseAbs().maxCoeff(), 1e-9 * lim.maxCoeff());
}

TEST(HeatKernel, SemigroupAgreesWithSpectralSum) {
  const auto& f = fx();
  const auto A = heat_kernel(f.sp, 1.0), B = semigroup_kernel(f.as, 1.0);
  EXPECT_LT((A.p - B.p).cwiseAbs().maxCoeff(), 1e-9 * A.p.maxCoeff());
  for (int i = 0; i < f.g.N; ++i)
    for (int j = 0; j < f.g.N; ++j) ASSERT_GT(B.p(i, j), 0);
}

TEST(HeatKernel, EigenRelationAndPerron) {
  const auto& f = fx();
  const auto P = semigroup_kernel(f.as, 1.0);
  const auto gs = perron_ground_state(P);
  EXPECT_NEAR(gs.lambda1, f.sp.lambda1(), 1e-9 * f.sp.lambda1());
  const Eigen::VectorXd Pphi = std::exp(gs.lambda1) * P.p * gs.phi * P.h;
  EXPECT_LT((Pphi - gs.phi).cwiseAbs().maxCoeff(), 1e-8 * gs.phi.maxCoeff());
  EXPECT_GT(gs.phi.minCoeff(), 0);
}

TEST(Intrinsic, RowSumsAndNorm) {
  const auto& f = fx();
  const Eigen::VectorXd& phi = f.sp.ground_state;
  double prev = kInf;
  for (double t : {0.5, 1.0, 2.0}) {
    const auto P = heat_kernel(f.sp, t);
    EXPECT_LT(intrinsic_row_defect(P, phi, f.sp.lambda1(), f.g), 1e-6);
    const auto n = intrinsic_norm(P, phi, f.sp.lambda1(), f.g);
    EXPECT_GE(n.value, 1 - 1e-9);
    EXPECT_LE(n.value, prev * (1 + 1e-9));
    prev = n.value;
    EXPECT_GE(iuc_ratio(P, phi, f.g).value, std::exp(-f.sp.lambda1() * t) * (1 - 1e-9));
  }
}

TEST(Supersolution, EigenfunctionAndConstant) {
  const auto& f = fx();
  const Eigen::VectorXd& phi = f.sp.ground_state;
  const auto r = supersolution_check(f.as, phi, phi);
  EXPECT_NEAR(r.lambda_star, -f.sp.lambda1(), 1e-4 * f.sp.lambda1());  // tail entries are tiny
  EXPECT_NEAR(r.ratio_bound, 1.0, 1e-12);
  const auto c = supersolution_check(f.as, Eigen::VectorXd::Ones(f.g.N), phi);
  EXPECT_LE(c.lambda_star, 1e-9);
  Eigen::VectorXd bad = phi;
  bad[3] = 0;
  expect_error(ErrorKind::Domain, [&] { supersolution_check(f.as, bad, phi); });
}

TEST(Supersolution, ExamplePsiIsBounded) {
  const auto& f = fx();
  const Eigen::VectorXd psi = psi_theorem12(f.g, 1.0, 1.0);
  const auto r = supersolution_check(f.as, psi, f.sp.ground_state);
  EXPECT_TRUE(std::isfinite(r.lambda_star));
  EXPECT_TRUE(std::isfinite(r.ratio_bound));
  expect_error(ErrorKind::Parameter, [] { psi_example12_c0(kInf, 1); });
}

TEST(Condition13, FiniteAtOriginAndSentinel) {
  const auto& f = fx();
  const auto P = heat_kernel(f.sp, 1.0);
  const double r = condition13_ratio(P, f.g, 0.0);
  EXPECT_TRUE(std::isfinite(r));
  EXPECT_GT(r, 0);
  HeatKernel Z = P;
  Z.p.setZero();
  EXPECT_TRUE(std::isinf(condition13_ratio(Z, f.g, 0.0)));
}
