#pragma once
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace fklab {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

double ball_volume(int d, double s);

enum class KernelFamily { stable_like, truncated, tempered, variable_order };

// Near range (|z| <= kappa): c1 |z|^{-d-alpha1}, or |z|^{-d-a(x,y)} scaled by c1 for variable_order.
// Beyond kappa: stable_like c_tail |z|^{-d-alpha1}; tempered c_tail exp(-|z|^gamma); else 0.
struct KernelSpec {
  int d = 1;
  KernelFamily family = KernelFamily::truncated;
  double alpha1 = 1.0;
  double alpha2 = 1.0;
  double kappa = 1.0;
  double gamma = kInf;
  double c1 = 1.0;
  double c2 = 1.0;
  double c_tail = 1.0;

  void validate() const;
  bool translation_invariant() const { return family != KernelFamily::variable_order; }
};

KernelFamily kernel_family_from_string(const std::string& s);
std::string to_string(KernelFamily f);

double eval_kernel(const KernelSpec& k, double x, double y);
// radial profile of a translation-invariant kernel
double kernel_profile(const KernelSpec& k, double z);
// local order a(x,y); constant alpha1 unless variable_order
double kernel_order(const KernelSpec& k, double x, double y);
// int_a^inf rho(z) dz for translation-invariant kernels, a > 0
double kernel_tail_integral(const KernelSpec& k, double a);

struct KernelMoments {
  double L1 = 0, L2 = 0, L = 0;
};
KernelMoments kernel_moments(const KernelSpec& k, double s);
// same quantities by numerical quadrature, independent of the closed forms
KernelMoments kernel_moments_quadrature(const KernelSpec& k, double s);

enum class PotentialFamily { power, power_log, exp_power, valley };
enum class ValleyRadiusLaw { power, exp_log };

PotentialFamily potential_family_from_string(const std::string& s);
std::string to_string(PotentialFamily f);

struct PotentialSpec {
  PotentialFamily family = PotentialFamily::power;
  double c = 1.0;        // c3 for power / power_log, c for exp_power
  double theta = 2.0;    // power, exp_power
  double theta1 = 1.0;   // power_log
  double theta2 = 0.0;
  double K = -1.0;       // < 0 means default

  // valley geometry: centers n^k0 on the positive half-line
  double k0 = 3.0;
  double alpha = 0.5;
  int dim = 1;
  ValleyRadiusLaw radius_law = ValleyRadiusLaw::power;
  double c6 = 1.0;       // exp_log law: r_n = exp(-c6 x_n^eta1 log^eta2(1+x_n)) / 2
  double eta1 = 1.0;
  double eta2 = 2.0;
  long max_balls = 0;    // 0 = unbounded
  std::shared_ptr<const PotentialSpec> off_valley;

  void validate() const;
  double threshold() const;
  bool radial() const { return family != PotentialFamily::valley; }
};

PotentialSpec make_power(double theta, double c = 1.0);
PotentialSpec make_power_log(double theta1, double theta2, double c = 1.0);
PotentialSpec make_valley(double k0, double alpha, const PotentialSpec& off);

double eval_potential(const PotentialSpec& p, double x);
// V on the radial profile (radial families) evaluated at |x| = rho
double radial_potential(const PotentialSpec& p, double rho);
// sup of V over the closed ball |z| <= rho
double sup_potential(const PotentialSpec& p, double rho);

// sup{rho >= 0 : V(rho) <= K} for a monotone radial profile, -1 if empty, inf if unbounded
double radial_level(const PotentialSpec& p, double K);

double phi_of_R(const PotentialSpec& p, double R);
double theta_of_R(const PotentialSpec& p, double R);
// log Theta(R); stays finite where Theta itself underflows (exp_log valleys)
double log_theta_of_R(const PotentialSpec& p, double R);

struct Ball {
  double center, radius;
};
// balls of the valley family whose measure matters to relative tol; tail_estimate collects the rest
std::vector<Ball> valley_balls(const PotentialSpec& p, double tol, double* tail_estimate = nullptr);
double valley_center(const PotentialSpec& p, long n);
double valley_radius(const PotentialSpec& p, long n);
double valley_log_radius(const PotentialSpec& p, long n);
// |{x in A : |x| >= R}|
double valley_tail_measure(const PotentialSpec& p, double R);

struct ValleyTailReport {
  std::vector<double> R, tail, bound, ratio;
  double c0 = 0;
  double decay_exponent = 0;  // fitted exponent of the worst-case ratio along centers
  bool bounded = false;
};
ValleyTailReport valley_tail_bound_check(const PotentialSpec& p, const std::vector<double>& R_list,
                                         double eps);

}  // namespace fklab
