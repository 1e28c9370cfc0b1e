#pragma once
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "fklab/model.hpp"

namespace fklab {

enum class Monotone { increasing, decreasing };

// increasing: inf{s > 0 : f(s) >= r}; decreasing: inf{s > 0 : f(s) <= r}
double generalized_inverse(const std::function<double(double)>& f, Monotone dir, double r, double lo = 1e-12,
                           double hi = 1e12);

struct ComparisonFunction {
  double kappa = 1.0;
  double eps = 0.05;
  const PotentialSpec* potential = nullptr;

  double log_value(double x) const;
  double value(double x) const;
};

struct RateBundle {
  KernelSpec kernel;
  PotentialSpec potential;
  double eps = 0.05;
  double C0 = 1.0;
  double c_kappa = 1.0;
  double c0_sobolev = 1.0;
  double sobolev_p = 0.0;  // 0 when d <= alpha1
  double delta = 2.718281828459045;
  double c1_slicing = 1.0;

  RateBundle() = default;
  RateBundle(const KernelSpec& k, const PotentialSpec& p, double eps);

  double r0() const { return kernel.kappa; }
  double s0() const;
  ComparisonFunction comparison() const { return {kernel.kappa, eps, &potential}; }
};

double log_alpha_rate(const RateBundle& b, double r, double s);
double alpha_rate(const RateBundle& b, double r, double s);

double phi_inverse(const RateBundle& b, double y);  // inf{R : Phi(R) >= y}
double log_beta(const RateBundle& b, double s);
double beta_rate(const RateBundle& b, double s);
double log_gamma_rate(const RateBundle& b, double s);
double gamma_rate(const RateBundle& b, double s);
double psi_rate(const RateBundle& b, double R);
double log_beta_hat(const RateBundle& b, double s);
double beta_hat(const RateBundle& b, double s);

// beta^{-1}(e^u) = inf{s : log beta(s) <= u}
double beta_inverse_log(const RateBundle& b, double u);
double gamma_inverse(const RateBundle& b, double y);
double gamma_inverse_log(const RateBundle& b, double ly);

struct SlicingResult {
  long n0 = 0;
  long n_start = 0;
  std::vector<double> s_n;
  double summability_sum = 0;  // may overflow to inf; the log is exact
  double log_summability_sum = 0;
  long summability_terms = 0;
  double log_beta_tilde = 0;
  double beta_tilde = 0;
};

// log of sum gamma(s_n) delta^n; throws SlicingInapplicable when it does not converge
double slicing_log_summability(const RateBundle& b, long* terms = nullptr, long* n_start = nullptr);
SlicingResult slicing_schedule(const RateBundle& b, double s);

enum class IntegralVerdict { converges, diverges, undecided };
std::string to_string(IntegralVerdict v);

struct IntegralTestResult {
  IntegralVerdict verdict = IntegralVerdict::undecided;
  std::vector<double> w;           // block left ends in w = log log r
  std::vector<double> increments;  // integral of beta^{-1}(r)/r over each block
  double partial = 0;
  double extrapolated = 0;
  double tail_ratio = 0;
  double power_exponent = 0;
};

// inv_of_log(u) = beta^{-1}(e^u); the integral int_{t0} beta^{-1}(s)/s ds is taken in u = log s
IntegralTestResult iuc_integral_test(const std::function<double(double)>& inv_of_log, double t0,
                                     double w_max = 600.0);
// closed-form table for power_log(theta1, theta2)
bool closed_form_iuc(double theta1, double theta2);
// 1 / (log^{t1}(1+r) log^{t2-t1} log(e+r)) written in u = log r
double power_log_rate_inverse(double theta1, double theta2, double u);

struct WitnessSides {
  double lhs = 0, rhs = 0;
};
// lhs = sum f^2 h; rhs = s D(f,f) + beta(s ^ s0) (sum |f| phi1 h)^2 + gamma(s ^ s0)^{(p-2)/p} |f|_p^2
WitnessSides mixed_sp_witness(const RateBundle& b, const Eigen::MatrixXd& form, double h, const Eigen::VectorXd& phi1,
                              const Eigen::VectorXd& f, double s, double p);

struct RateRow {
  double s, beta, gamma, beta_hat, beta_tilde;
};
std::vector<RateRow> tabulate_rates(const RateBundle& b, const std::vector<double>& s_grid, bool with_slicing);

}  // namespace fklab
