#include "fklab/model.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <boost/math/special_functions/gamma.hpp>

#include "fklab/error.hpp"
#include "fklab/quadrature.hpp"

namespace fklab {

namespace {

bool in_open(double v, double lo, double hi) { return v > lo && v < hi; }

}  // namespace

double ball_volume(int d, double s) {
  const double pi = std::numbers::pi;
  return std::pow(pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0) * std::pow(s, d);
}

KernelFamily kernel_family_from_string(const std::string& s) {
  if (s == "stable_like") return KernelFamily::stable_like;
  if (s == "truncated") return KernelFamily::truncated;
  if (s == "tempered") return KernelFamily::tempered;
  if (s == "variable_order") return KernelFamily::variable_order;
  fail(ErrorKind::Config, "unknown kernel family '" + s + "'");
}

std::string to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::stable_like: return "stable_like";
    case KernelFamily::truncated: return "truncated";
    case KernelFamily::tempered: return "tempered";
    case KernelFamily::variable_order: return "variable_order";
  }
  return "?";
}

void KernelSpec::validate() const {
  if (d < 1) fail(ErrorKind::Parameter, "kernel dimension must be >= 1");
  if (!in_open(alpha1, 0, 2) || !in_open(alpha2, 0, 2))
    fail(ErrorKind::Parameter, "stability orders must lie in (0,2)");
  if (alpha1 > alpha2) fail(ErrorKind::Parameter, "alpha1 must not exceed alpha2");
  if (!(kappa > 0)) fail(ErrorKind::Parameter, "kappa must be positive");
  if (!(c1 > 0) || !(c2 > 0)) fail(ErrorKind::Parameter, "c1, c2 must be positive");
  if (c1 > c2) fail(ErrorKind::Parameter, "c1 must not exceed c2");
  if (!(c_tail >= 0)) fail(ErrorKind::Parameter, "c_tail must be non-negative");
  // c1|z|^{-d-a1} <= c2|z|^{-d-a2} on |z|<=kappa needs kappa<=1 when the orders differ
  if (alpha1 < alpha2 && kappa > 1)
    fail(ErrorKind::Parameter, "alpha1 < alpha2 requires kappa <= 1 for the kernel sandwich");
  if (family == KernelFamily::tempered && !(gamma > 1 && std::isfinite(gamma)))
    fail(ErrorKind::Parameter, "tempered family needs 1 < gamma < inf");
}

double kernel_order(const KernelSpec& k, double x, double y) {
  if (k.family != KernelFamily::variable_order) return k.alpha1;
  return k.alpha1 + (k.alpha2 - k.alpha1) * (1.0 + std::sin(x + y)) / 2.0;
}

double kernel_profile(const KernelSpec& k, double z) {
  z = std::abs(z);
  if (z <= k.kappa) return k.c1 * std::pow(z, -k.d - k.alpha1);
  switch (k.family) {
    case KernelFamily::stable_like: return k.c_tail * std::pow(z, -k.d - k.alpha1);
    case KernelFamily::tempered: return k.c_tail * std::exp(-std::pow(z, k.gamma));
    default: return 0.0;
  }
}

double eval_kernel(const KernelSpec& k, double x, double y) {
  if (x == y) fail(ErrorKind::Domain, "kernel is singular on the diagonal");
  if (k.family == KernelFamily::variable_order) {
    const double z = std::abs(x - y);
    if (z > k.kappa) return 0.0;
    return k.c1 * std::pow(z, -k.d - kernel_order(k, x, y));
  }
  return kernel_profile(k, x - y);
}

double kernel_tail_integral(const KernelSpec& k, double a) {
  if (!k.translation_invariant()) fail(ErrorKind::Unsupported, "tail integral needs a translation-invariant kernel");
  if (!(a > 0)) fail(ErrorKind::Domain, "tail integral needs a > 0");
  const double al = k.alpha1;
  double near = 0.0;
  if (a < k.kappa) near = k.c1 / al * (std::pow(a, -al) - std::pow(k.kappa, -al));
  const double b = std::max(a, k.kappa);
  double far = 0.0;
  if (k.family == KernelFamily::stable_like) {
    far = k.c_tail / al * std::pow(b, -al);
  } else if (k.family == KernelFamily::tempered) {
    far = k.c_tail / k.gamma * boost::math::tgamma(1.0 / k.gamma, std::pow(b, k.gamma));
  }
  return near + far;
}

namespace {

double combine_L(const KernelSpec& k, double s, double L1, double L2) {
  const double d = k.d;
  return L1 + std::pow(s, d) * std::pow(L2 / (s * s), (d + k.alpha1) / k.alpha1);
}

void check_moment_radius(const KernelSpec& k, double s) {
  if (!(s > 0)) fail(ErrorKind::Domain, "moment radius must be positive");
  if (s > k.kappa) fail(ErrorKind::Range, "moment radius exceeds kappa");
}

// variable order: sup over x of one-point moments, a(x,x+z) has period pi in x
KernelMoments variable_order_moments(const KernelSpec& k, double s) {
  double L1 = 0, L2 = 0;
  const int samples = 96;
  for (int i = 0; i < samples; ++i) {
    const double x = std::numbers::pi * i / samples;
    auto J = [&](double z) { return k.c1 * std::pow(std::abs(z), -k.d - kernel_order(k, x, x + z)); };
    double l1 = 0;
    if (s < k.kappa) l1 = quad::integrate(J, s, k.kappa) + quad::integrate(J, -k.kappa, -s);
    double l2 = quad::integrate_singular([&](double z) { return z * z * J(z); }, 0.0, s) +
                quad::integrate_singular([&](double z) { return z * z * J(-z); }, 0.0, s);
    L1 = std::max(L1, l1);
    L2 = std::max(L2, l2);
  }
  return {L1, L2, combine_L(k, s, L1, L2)};
}

}  // namespace

KernelMoments kernel_moments(const KernelSpec& k, double s) {
  check_moment_radius(k, s);
  if (k.family == KernelFamily::variable_order) return variable_order_moments(k, s);
  const double a = k.alpha1;
  const double L1 = 2.0 * kernel_tail_integral(k, s);
  const double L2 = 2.0 * k.c1 * std::pow(s, 2.0 - a) / (2.0 - a);
  return {L1, L2, combine_L(k, s, L1, L2)};
}

KernelMoments kernel_moments_quadrature(const KernelSpec& k, double s) {
  check_moment_radius(k, s);
  if (k.family == KernelFamily::variable_order) return variable_order_moments(k, s);
  auto rho = [&](double z) { return kernel_profile(k, z); };
  double L1 = 0;
  if (s < k.kappa) L1 += quad::integrate(rho, s, k.kappa);
  if (k.family == KernelFamily::stable_like || k.family == KernelFamily::tempered)
    L1 += quad::integrate_to_inf(rho, k.kappa);
  L1 *= 2.0;
  // z = u^m with m = 1/(2 - alpha1) makes z^2 rho(z) dz bounded at 0
  const double m = 1.0 / (2.0 - k.alpha1);
  auto g = [&](double u) {
    const double z = std::pow(u, m);
    if (!(z > 0)) return m * k.c1;
    return m * std::pow(u, m - 1) * z * z * rho(z);
  };
  const double L2 = 2.0 * quad::integrate(g, 0.0, std::pow(s, 1.0 / m), 1e-14);
  return {L1, L2, combine_L(k, s, L1, L2)};
}

// ---------------------------------------------------------------- potentials

PotentialFamily potential_family_from_string(const std::string& s) {
  if (s == "power") return PotentialFamily::power;
  if (s == "power_log") return PotentialFamily::power_log;
  if (s == "exp_power") return PotentialFamily::exp_power;
  if (s == "valley") return PotentialFamily::valley;
  fail(ErrorKind::Config, "unknown potential family '" + s + "'");
}

std::string to_string(PotentialFamily f) {
  switch (f) {
    case PotentialFamily::power: return "power";
    case PotentialFamily::power_log: return "power_log";
    case PotentialFamily::exp_power: return "exp_power";
    case PotentialFamily::valley: return "valley";
  }
  return "?";
}

PotentialSpec make_power(double theta, double c) {
  PotentialSpec p;
  p.family = PotentialFamily::power;
  p.theta = theta;
  p.c = c;
  return p;
}

PotentialSpec make_power_log(double theta1, double theta2, double c) {
  PotentialSpec p;
  p.family = PotentialFamily::power_log;
  p.theta1 = theta1;
  p.theta2 = theta2;
  p.c = c;
  return p;
}

PotentialSpec make_valley(double k0, double alpha, const PotentialSpec& off) {
  PotentialSpec p;
  p.family = PotentialFamily::valley;
  p.k0 = k0;
  p.alpha = alpha;
  p.off_valley = std::make_shared<PotentialSpec>(off);
  return p;
}

void PotentialSpec::validate() const {
  switch (family) {
    case PotentialFamily::power:
      if (!(theta > 0) || !(c > 0)) fail(ErrorKind::Parameter, "power potential needs theta > 0, c > 0");
      break;
    case PotentialFamily::power_log:
      if (!(theta1 > 0) || !(c > 0) || theta1 + theta2 < 0)
        fail(ErrorKind::Parameter, "power_log potential needs theta1 > 0, c > 0, theta1 + theta2 >= 0");
      break;
    case PotentialFamily::exp_power:
      if (!(theta > 0) || !(c > 0)) fail(ErrorKind::Parameter, "exp_power potential needs theta > 0, c > 0");
      break;
    case PotentialFamily::valley:
      if (!off_valley || !off_valley->radial())
        fail(ErrorKind::Parameter, "valley potential needs a radial off-valley potential");
      off_valley->validate();
      if (!(k0 > 0) || !in_open(alpha, 0, 2) || dim < 1)
        fail(ErrorKind::Parameter, "valley needs k0 > 0, alpha in (0,2)");
      if (radius_law == ValleyRadiusLaw::power && !(k0 / alpha - 1.0 / dim > 1.0))
        fail(ErrorKind::Parameter, "valley ball measures are not summable (need k0/alpha - 1/d > 1)");
      if (radius_law == ValleyRadiusLaw::exp_log && !(c6 > 0))
        fail(ErrorKind::Parameter, "exp_log valley needs c6 > 0");
      break;
  }
}

double PotentialSpec::threshold() const {
  if (K >= 0) return K;
  if (family == PotentialFamily::valley) return 1.0;
  return radial_potential(*this, 1.0);
}

double radial_potential(const PotentialSpec& p, double rho) {
  rho = std::abs(rho);
  switch (p.family) {
    case PotentialFamily::power: return rho == 0 ? 0.0 : p.c * std::pow(rho, p.theta);
    case PotentialFamily::power_log:
      if (rho == 0) return (p.theta1 + p.theta2 > 0) ? 0.0 : p.c;
      return p.c * std::pow(rho, p.theta1) * std::pow(std::log1p(rho), p.theta2);
    case PotentialFamily::exp_power: return std::exp(p.c * (1.0 + std::pow(rho, p.theta)));
    case PotentialFamily::valley: return radial_potential(*p.off_valley, rho);
  }
  return 0.0;
}

double valley_center(const PotentialSpec& p, long n) { return std::pow(static_cast<double>(n), p.k0); }

double valley_log_radius(const PotentialSpec& p, long n) {
  const double ln = std::log(static_cast<double>(n));
  if (p.radius_law == ValleyRadiusLaw::power) return (-p.k0 / p.alpha + 1.0 / p.dim) * ln;
  const double x = valley_center(p, n);
  return std::log(0.5) - p.c6 * std::pow(x, p.eta1) * std::pow(std::log1p(x), p.eta2);
}

double valley_radius(const PotentialSpec& p, long n) {
  if (p.radius_law == ValleyRadiusLaw::power)
    return std::pow(static_cast<double>(n), -p.k0 / p.alpha + 1.0 / p.dim);
  const double x = valley_center(p, n);
  return 0.5 * std::exp(-p.c6 * std::pow(x, p.eta1) * std::pow(std::log1p(x), p.eta2));
}

namespace {

bool in_valley(const PotentialSpec& p, double x) {
  if (x < 0) return false;
  const double inv = 1.0 / p.k0;
  long lo = std::max(1L, static_cast<long>(std::floor(std::pow(std::max(0.0, x - 1.0), inv))) - 1);
  long hi = static_cast<long>(std::ceil(std::pow(x + 1.0, inv))) + 1;
  if (p.max_balls > 0) hi = std::min(hi, p.max_balls);
  for (long n = lo; n <= hi; ++n)
    if (std::abs(x - valley_center(p, n)) <= valley_radius(p, n)) return true;
  return false;
}

}  // namespace

double radial_level(const PotentialSpec& p, double K) {
  if (radial_potential(p, 0.0) > K) return -1.0;
  if (p.family == PotentialFamily::power) return std::pow(K / p.c, 1.0 / p.theta);
  double lo = 0.0, hi = 1.0;
  while (radial_potential(p, hi) <= K) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return kInf;
  }
  for (int i = 0; i < 200 && hi - lo > 1e-15 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (radial_potential(p, mid) <= K ? lo : hi) = mid;
  }
  return lo;
}

double eval_potential(const PotentialSpec& p, double x) {
  if (p.family == PotentialFamily::valley) {
    if (in_valley(p, x)) return 1.0;
    return eval_potential(*p.off_valley, x);
  }
  return radial_potential(p, x);
}

double sup_potential(const PotentialSpec& p, double rho) {
  rho = std::abs(rho);
  if (p.family != PotentialFamily::valley) return radial_potential(p, rho);
  // the negative half-line carries no balls, so the off-valley profile is attained at -rho
  return std::max(radial_potential(*p.off_valley, rho), 1.0);
}

double phi_of_R(const PotentialSpec& p, double R) {
  if (!(R > 0)) fail(ErrorKind::Domain, "phi_of_R needs R > 0");
  const double K = p.threshold();
  const PotentialSpec& prof = p.family == PotentialFamily::valley ? *p.off_valley : p;
  const double v = radial_potential(prof, R);
  if (v > K) return v;
  // infimum approached from above at the level set
  if (radial_level(prof, K) == kInf) return kInf;
  return K;
}

std::vector<Ball> valley_balls(const PotentialSpec& p, double tol, double* tail_estimate) {
  std::vector<Ball> out;
  double sum = 0.0;
  const double q = -p.k0 / p.alpha + 1.0 / p.dim;
  const long cap = p.max_balls > 0 ? p.max_balls : 20000000L;
  long n = 1;
  for (; n <= cap; ++n) {
    const double r = valley_radius(p, n);
    out.push_back({valley_center(p, n), r});
    sum += 2 * r;
    if (p.max_balls > 0) continue;
    if (p.radius_law == ValleyRadiusLaw::power) {
      const double rest = 2.0 * std::pow(static_cast<double>(n), q + 1) / (-q - 1);
      if (n > 4 && rest < tol * sum) break;
    } else if (n > 4 && r < 1e-300) {
      break;
    }
  }
  if (tail_estimate) {
    *tail_estimate = 0.0;
    if (p.max_balls <= 0 && p.radius_law == ValleyRadiusLaw::power) {
      // Euler-Maclaurin: sum_{m>N} f(m) ~ int_N^inf f - f(N)/2 - f'(N)/12
      const double N = static_cast<double>(std::min(n, cap));
      const double f = std::pow(N, q), fp = q * std::pow(N, q - 1);
      *tail_estimate = 2.0 * (std::pow(N, q + 1) / (-q - 1) - f / 2 - fp / 12);
    }
  }
  return out;
}

namespace {

// measure of (union of balls) intersected with [R, inf); balls sorted by left end.
// A lone ball is clipped from its center and radius, so radii far below the spacing
// of doubles at the center still count.
double clipped_union(const std::vector<Ball>& balls, double R) {
  double total = 0.0;
  double L = 0, U = -kInf;
  Ball lone{0, 0};
  int count = 0;
  auto flush = [&] {
    if (count == 0) return;
    if (count == 1) {
      // r + (c - R) clipped to [0, 2r]; exact even when r is far below ulp(c)
      total += std::clamp(lone.radius + (lone.center - R), 0.0, 2 * lone.radius);
      return;
    }
    if (U > R) total += U - std::max(L, R);
  };
  for (const auto& b : balls) {
    const double a = b.center - b.radius, e = b.center + b.radius;
    if (count == 0 || a > U) {
      flush();
      L = a;
      U = e;
      lone = b;
      count = 1;
    } else {
      U = std::max(U, e);
      ++count;
    }
  }
  flush();
  return total;
}

double valley_positive_measure(const PotentialSpec& p, double R, double rhoK) {
  double tail = 0.0;
  auto balls = valley_balls(p, 1e-17, &tail);
  std::vector<Ball> iv;
  iv.reserve(balls.size() + 1);
  if (rhoK >= 0) iv.push_back({rhoK / 2, rhoK / 2});
  iv.insert(iv.end(), balls.begin(), balls.end());
  std::sort(iv.begin(), iv.end(),
            [](const Ball& a, const Ball& b) { return a.center - a.radius < b.center - b.radius; });
  double m = clipped_union(iv, R);
  if (!balls.empty() && balls.back().center > R) m += tail;
  else if (!balls.empty() && tail > 0) {
    // R beyond the explicit list: 64 explicit terms from the first ball reaching past R,
    // then Euler-Maclaurin for the rest
    const double q = -p.k0 / p.alpha + 1.0 / p.dim;
    long n = std::max(1L, static_cast<long>(std::floor(std::pow(R, 1.0 / p.k0))) - 1);
    while (valley_center(p, n) + valley_radius(p, n) <= R) ++n;
    for (const long stop = n + 64; n < stop; ++n) {
      const double c = valley_center(p, n), r = valley_radius(p, n);
      m += std::clamp(r + (c - R), 0.0, 2 * r);
    }
    const double N = static_cast<double>(n - 1);
    m += 2.0 * (std::pow(N, q + 1) / (-q - 1) - std::pow(N, q) / 2 - q * std::pow(N, q - 1) / 12);
  }
  return m;
}

}  // namespace

double valley_tail_measure(const PotentialSpec& p, double R) {
  if (p.family != PotentialFamily::valley) fail(ErrorKind::Type, "valley_tail_measure needs a valley potential");
  return valley_positive_measure(p, R, -1.0);
}

double theta_of_R(const PotentialSpec& p, double R) {
  if (!(R > 0)) fail(ErrorKind::Domain, "theta_of_R needs R > 0");
  const double K = p.threshold();
  if (p.family != PotentialFamily::valley) {
    const double rK = radial_level(p, K);
    if (rK == kInf) return kInf;
    return 2.0 * std::max(0.0, rK - R);
  }
  const double rK = radial_level(*p.off_valley, K);
  if (rK == kInf) return kInf;
  const double neg = rK >= 0 ? std::max(0.0, rK - R) : 0.0;
  return neg + valley_positive_measure(p, R, rK);
}

double log_theta_of_R(const PotentialSpec& p, double R) {
  const double t = theta_of_R(p, R);
  if (t > 1e-250 || p.family != PotentialFamily::valley || p.radius_law != ValleyRadiusLaw::exp_log)
    return std::log(t);
  // only balls are left this far out; sum their (clipped) lengths in logs
  long n = std::max(1L, static_cast<long>(std::floor(std::pow(R, 1.0 / p.k0))) - 1);
  while (valley_center(p, n + 1) < R) ++n;
  double acc = -kInf;
  for (;; ++n) {
    const double c = valley_center(p, n), lr = valley_log_radius(p, n);
    double lc;
    if (c >= R) {
      const double lg = c > R ? std::log(c - R) : -kInf;
      lc = lg >= lr ? std::log(2.0) + lr : lr + std::log1p(std::exp(lg - lr));
    } else {
      const double q = (R - c) / std::exp(lr);
      lc = q < 1 ? lr + std::log1p(-q) : -kInf;
    }
    if (lc > -kInf) {
      if (acc > -kInf && lc < acc - 50) break;
      const double m = std::max(acc, lc);
      acc = m + std::log(std::exp(acc - m) + std::exp(lc - m));
    } else if (c >= R) {
      break;
    }
  }
  return acc;
}

ValleyTailReport valley_tail_bound_check(const PotentialSpec& p, const std::vector<double>& R_list, double eps) {
  if (p.family != PotentialFamily::valley) fail(ErrorKind::Type, "valley_tail_bound_check needs a valley potential");
  if (!(eps > 0) || !(p.k0 > 2.0 / eps)) fail(ErrorKind::Precondition, "need k0 > 2/eps");
  ValleyTailReport rep;
  const double expo = p.dim / p.alpha - eps;
  for (double R : R_list) {
    const double t = valley_tail_measure(p, R);
    rep.R.push_back(R);
    rep.tail.push_back(t);
    rep.ratio.push_back(t * std::pow(R, expo));
    rep.c0 = std::max(rep.c0, rep.ratio.back());
  }
  for (double R : R_list) rep.bound.push_back(rep.c0 * std::pow(R, -expo));
  // worst case sits just inside each center's ball; fit the power of m along that sequence
  std::vector<double> lm, lw;
  for (long m = 8; m <= 64; m *= 2) {
    const double R = valley_center(p, m) - valley_radius(p, m);
    const double w = valley_tail_measure(p, R) * std::pow(R, expo);
    if (!(w > 0)) continue;
    lm.push_back(std::log(static_cast<double>(m)));
    lw.push_back(std::log(w));
  }
  if (lm.size() >= 2) {
    const double n = lm.size();
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < lm.size(); ++i) {
      sx += lm[i];
      sy += lw[i];
      sxx += lm[i] * lm[i];
      sxy += lm[i] * lw[i];
    }
    rep.decay_exponent = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  } else {
    rep.decay_exponent = -kInf;
  }
  rep.bounded = std::isfinite(rep.c0) && rep.decay_exponent < 0;
  return rep;
}

}  // namespace fklab
