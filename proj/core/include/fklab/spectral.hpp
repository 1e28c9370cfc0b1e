#pragma once
#include <Eigen/Dense>

#include "fklab/discretize.hpp"

namespace fklab {

struct SpectralResult {
  Grid grid;
  Eigen::VectorXd eigenvalues;   // ascending
  Eigen::MatrixXd eigenvectors;  // columns orthonormal under sum f g h
  Eigen::VectorXd ground_state;
  double max_residual = 0;       // relative to |A|
  double orthonormality_defect = 0;
  double norm_A = 0;
  double lambda1() const { return eigenvalues[0]; }
};

SpectralResult solve_spectrum(const OperatorAssembly& as, int k);
SpectralResult solve_spectrum(const Eigen::MatrixXd& A, const Grid& g, int k);

// p(t)_ij; (P f)_i = sum_j p_ij f_j h
struct HeatKernel {
  double t = 0;
  double h = 1;
  Eigen::MatrixXd p;
};

HeatKernel heat_kernel(const SpectralResult& s, double t);
// exp(-tA)/h by uniformization and squaring; every operation is on non-negative
// matrices so tiny entries keep their relative accuracy
HeatKernel semigroup_kernel(const OperatorAssembly& as, double t);

struct GroundState {
  double lambda1 = 0;
  Eigen::VectorXd phi;  // positive, sum phi^2 h = 1
  int iterations = 0;
};
// Perron vector of the positive kernel by power iteration
GroundState perron_ground_state(const HeatKernel& P, int max_iter = 20000, double tol = 1e-13);

struct RatioDiagnostic {
  double value = 0;
  int excluded = 0;
  int arg_i = -1, arg_j = -1;
};

RatioDiagnostic iuc_ratio(const HeatKernel& P, const Eigen::VectorXd& phi1, const Grid& g, double window = 0.9);
RatioDiagnostic intrinsic_norm(const HeatKernel& P, const Eigen::VectorXd& phi1, double lambda1, const Grid& g,
                               double window = 0.9);
// max_i |sum_j ptilde_ij phi_j^2 h - 1|
double intrinsic_row_defect(const HeatKernel& P, const Eigen::VectorXd& phi1, double lambda1, const Grid& g,
                            double window = 0.9);

struct SupersolutionReport {
  double lambda_star = 0;
  double ratio_bound = 0;
};
SupersolutionReport supersolution_check(const OperatorAssembly& as, const Eigen::VectorXd& psi,
                                        const Eigen::VectorXd& phi1, double window = 0.75);
Eigen::VectorXd psi_theorem12(const Grid& g, double lambda, double kappa);
// exp(-(c0 theta)^{(g-1)/g} sqrt(1+x^2) log^{(g-1)/g} sqrt(1+x^2))
Eigen::VectorXd psi_example12(const Grid& g, double theta, double gamma, double lambda);
double psi_example12_c0(double gamma, double lambda);

// T_t(1_{B(x,r_num)})(x) / T_t(1_{B(0,r_den)})(x)
double condition13_ratio(const HeatKernel& P, const Grid& g, double x, double r_num = 1.0, double r_den = 1.0);

}  // namespace fklab
