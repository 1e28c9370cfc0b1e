#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <random>

#include <gtest/gtest.h>

#include "fklab/discretize.hpp"
#include "test_util.hpp"

using namespace fklab;

namespace {

KernelSpec truncated(double alpha, double kappa = 1.0) {
  KernelSpec k;
  k.alpha1 = k.alpha2 = alpha;
  k.kappa = kappa;
  return k;
}

}  // namespace

TEST(Grid, Construction) {
  const Grid g = Grid::make(5, 101);
  EXPECT_DOUBLE_EQ(g.h, 0.1);
  EXPECT_DOUBLE_EQ(g.x(0), -5);
  EXPECT_NEAR(g.x(100), 5, 1e-12);
  EXPECT_EQ(g.index_of(0.04), 50);
  expect_error(ErrorKind::Parameter, [] { Grid::make(5, 100); });
  expect_error(ErrorKind::Parameter, [] { Grid::make(-1, 101); });
}

TEST(Assembly, StructuralProperties) {
  const PotentialSpec p = make_power(2);
  for (double alpha : {0.5, 1.0, 1.5}) {
    const Grid g = Grid::make(5, 201);
    const auto as = assemble_generator(truncated(alpha), &p, g);
    EXPECT_EQ((as.A - as.A.transpose()).cwiseAbs().maxCoeff(), 0.0);
    for (int i = 0; i < g.N; ++i)
      for (int j = 0; j < g.N; ++j)
        if (i != j) EXPECT_LE(as.A(i, j), 0.0);
    EXPECT_TRUE(is_psd(as.A));
  }
}

TEST(Assembly, RowSumsAreKillingPlusPotential) {
  const PotentialSpec p = make_power(2);
  const Grid g = Grid::make(5, 201);
  const auto as = assemble_generator(truncated(1.0), &p, g);
  const Eigen::VectorXd ones = Eigen::VectorXd::Ones(g.N);
  const Eigen::VectorXd Af = as.A * ones;
  for (int i = 0; i < g.N; ++i) {
    EXPECT_NEAR(Af[i], as.V[i] + as.kill[i], 1e-9 * (1 + std::abs(Af[i])));
    if (std::abs(g.x(i)) < g.R - 1.0 - 1e-9) EXPECT_EQ(as.kill[i], 0.0) << g.x(i);
  }
}

TEST(Assembly, ConstantsAnnihilatedAwayFromBoundary) {
  const Grid g = Grid::make(5, 201);
  const auto as = assemble_generator(truncated(1.0), nullptr, g);
  const Eigen::VectorXd Af = as.A * Eigen::VectorXd::Ones(g.N);
  for (int i = 0; i < g.N; ++i)
    if (std::abs(g.x(i)) < g.R - 1.0 - 1e-9) EXPECT_NEAR(Af[i], 0.0, 1e-9 * as.A(i, i)) << g.x(i);
}

TEST(Assembly, FormMatchesDoubleSumAndBform) {
  const PotentialSpec p = make_power(2);
  const Grid g = Grid::make(5, 201);
  const KernelSpec k = truncated(1.0);
  const auto as = assemble_generator(k, &p, g);
  std::mt19937_64 rng(3);
  for (int n = 0; n < 20; ++n) {
    const Eigen::VectorXd f = random_test_function(rng, g, 4.0);
    const double a = f.dot(as.A * f) * g.h;
    const double b = f.dot(as.Bform * f) * g.h;
    const double o = form_double_sum(k, as, f);
    EXPECT_LT(std::abs(a - o), 1e-2 * std::abs(a));
    EXPECT_LT(std::abs(a - b), 1e-2 * std::abs(a));
  }
}

TEST(Assembly, SpacingPrecondition) {
  const PotentialSpec p = make_power(2);
  expect_error(ErrorKind::Precondition, [&] { assemble_generator(truncated(1.0, 0.2), &p, Grid::make(5, 51)); });
}

TEST(LocalSp, ZeroFunction) {
  const Grid g = Grid::make(8, 321);
  const auto r = local_sp_explicit_check(g, truncated(1.0), Eigen::VectorXd::Zero(g.N), 2, 0.5);
  EXPECT_EQ(r.lhs, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
}

TEST(LocalSp, ConstantOnBall) {
  const Grid g = Grid::make(8, 321);
  const double r = 2, s = 0.5, c = 1.7;
  Eigen::VectorXd f(g.N);
  for (int i = 0; i < g.N; ++i) f[i] = std::abs(g.x(i)) <= r + s + 1e-9 ? c : 0.0;
  const auto sp = local_sp_explicit_check(g, truncated(1.0), f, r, s);
  EXPECT_NEAR(sp.lhs, (2 * r + g.h) * c * c, 1e-9);
  EXPECT_GE(sp.rhs, sp.lhs);
}

TEST(LocalSp, RandomSuiteHasNoViolations) {
  const Grid g = Grid::make(8, 321);
  std::mt19937_64 rng(11);
  int bad = 0;
  for (int n = 0; n < 60; ++n) {
    const Eigen::VectorXd f = random_test_function(rng, g, 5.0, TestFunctionKind::piecewise_linear);
    for (double r : {1.0, 2.0, 4.0})
      for (double s : {0.25, 0.5, 1.0}) {
        const auto sp = local_sp_explicit_check(g, truncated(1.0), f, r, s);
        if (sp.lhs > sp.rhs) ++bad;
      }
  }
  EXPECT_EQ(bad, 0);
}

TEST(LocalSp, RangeErrors) {
  const Grid g = Grid::make(8, 321);
  const Eigen::VectorXd f = Eigen::VectorXd::Zero(g.N);
  expect_error(ErrorKind::Range, [&] { local_sp_explicit_check(g, truncated(1.0), f, 2, 1.5); });
  expect_error(ErrorKind::Range, [&] { local_sp_explicit_check(g, truncated(1.0), f, 0.5, 0.25); });
}

TEST(Sobolev, InapplicableWhenAlphaReachesDimension) {
  const Grid g = Grid::make(5, 101);
  const Eigen::MatrixXd B = assemble_form(truncated(1.0), nullptr, g);
  expect_error(ErrorKind::CriterionInapplicable,
               [&] { sobolev_check(g, truncated(1.0), B, Eigen::VectorXd::Ones(g.N)); });
}

TEST(Sobolev, TentFunction) {
  const Grid g = Grid::make(5, 201);
  const KernelSpec k = truncated(0.5);
  const Eigen::MatrixXd B = assemble_form(k, nullptr, g);
  const auto z = sobolev_check(g, k, B, Eigen::VectorXd::Zero(g.N));
  EXPECT_EQ(z.lhs, 0.0);
  EXPECT_EQ(z.rhs, 0.0);
  Eigen::VectorXd f(g.N);
  for (int i = 0; i < g.N; ++i) f[i] = std::max(0.0, 1 - 2 * std::abs(g.x(i)));
  const auto r = sobolev_check(g, k, B, f);
  EXPECT_GT(r.lhs, 0);
  EXPECT_GT(r.rhs, 0);
  EXPECT_TRUE(std::isfinite(r.lhs / r.rhs));
}

TEST(MatrixExport, BinaryLayout) {
  const Grid g = Grid::make(2, 17);
  Eigen::MatrixXd M(g.N, g.N);
  for (int i = 0; i < g.N; ++i)
    for (int j = 0; j < g.N; ++j) M(i, j) = i * 100 + j;
  const auto path = std::filesystem::temp_directory_path() / "fklab_matrix_test.bin";
  write_matrix_binary(path.string(), g, M);
  std::ifstream is(path, std::ios::binary);
  std::int64_t N;
  double R, h;
  is.read(reinterpret_cast<char*>(&N), 8);
  is.read(reinterpret_cast<char*>(&R), 8);
  is.read(reinterpret_cast<char*>(&h), 8);
  EXPECT_EQ(N, 17);
  EXPECT_EQ(R, 2.0);
  EXPECT_EQ(h, g.h);
  std::vector<double> v(N * N);
  is.read(reinterpret_cast<char*>(v.data()), 8 * N * N);
  EXPECT_TRUE(is.good());
  EXPECT_EQ(v[1], 1.0);    // row-major
  EXPECT_EQ(v[17], 100.0);
  EXPECT_EQ(std::filesystem::file_size(path), 24u + 8u * N * N);
  std::filesystem::remove(path);
}
