#pragma once
#include <cstdint>
#include <random>
#include <string>

#include <Eigen/Dense>

#include "fklab/model.hpp"

namespace fklab {

struct Grid {
  double R = 10.0;
  int N = 401;
  double h = 0.05;

  static Grid make(double R, int N);
  static Grid from_spacing(double R, double h);
  double x(int i) const { return -R + i * h; }
  Eigen::VectorXd nodes() const;
  int index_of(double x) const;  // nearest node
};

struct OperatorAssembly {
  Grid grid;
  Eigen::MatrixXd A;      // -L^V with Dirichlet truncation
  Eigen::MatrixXd Bform;  // f' B f h = D^V(f,f)
  Eigen::VectorXd kill;
  Eigen::VectorXd V;
  Eigen::VectorXd sigma2;  // near-diagonal second moments
  double asymmetry_defect = 0;  // relative, before symmetrization
};

// jump part only (no potential) when potential == nullptr
OperatorAssembly assemble_generator(const KernelSpec& kernel, const PotentialSpec* potential, const Grid& grid);
Eigen::MatrixXd assemble_form(const KernelSpec& kernel, const PotentialSpec* potential, const Grid& grid);

// explicit double-sum evaluation of the form, used as an independent oracle
double form_double_sum(const KernelSpec& kernel, const OperatorAssembly& as, const Eigen::VectorXd& f);

// smallest-eigenvalue test by a shifted Cholesky
bool is_psd(const Eigen::MatrixXd& M, double rel_tol = 1e-8);

enum class TestFunctionKind { piecewise_linear, tent, gaussian_mix, mixed };
// grid-independent random function with support in [-support, support]
Eigen::VectorXd random_test_function(std::mt19937_64& rng, const Grid& g, double support,
                                     TestFunctionKind kind = TestFunctionKind::mixed);

struct SidePair {
  double lhs = 0, rhs = 0;
};
SidePair local_sp_explicit_check(const Grid& g, const KernelSpec& k, const Eigen::VectorXd& f, double r, double s);
SidePair sobolev_check(const Grid& g, const KernelSpec& k, const Eigen::MatrixXd& jump_form, const Eigen::VectorXd& f);

// row-major doubles after a header (int64 N, double R, double h)
void write_matrix_binary(const std::string& path, const Grid& g, const Eigen::MatrixXd& M);

}  // namespace fklab
