#include "fklab/rates.hpp"

#include <algorithm>
#include <cmath>

#include "fklab/error.hpp"
#include "fklab/quadrature.hpp"

namespace fklab {

double generalized_inverse(const std::function<double(double)>& f, Monotone dir, double r, double lo_lim,
                           double hi_lim) {
  auto ok = [&](double s) { return dir == Monotone::increasing ? f(s) >= r : f(s) <= r; };
  double lo, hi;
  if (ok(1.0)) {
    hi = 1.0;
    lo = 0.5;
    while (ok(lo)) {
      hi = lo;
      lo *= 0.5;
      if (lo < lo_lim) {
        if (ok(lo_lim)) return lo_lim;
        lo = lo_lim;
        break;
      }
    }
  } else {
    lo = 1.0;
    hi = 2.0;
    while (!ok(hi)) {
      lo = hi;
      hi *= 2.0;
      if (hi > hi_lim) {
        if (!ok(hi_lim)) fail(ErrorKind::UnboundedInverse, "no bracket within [1e-12, 1e12]");
        hi = hi_lim;
        break;
      }
    }
  }
  for (int i = 0; i < 400 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = hi / lo > 4.0 ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

double ComparisonFunction::log_value(double x) const {
  const double a = std::abs(x);
  const double sv = sup_potential(*potential, a + 2 * eps * kappa);
  return -a * std::log1p(a + sv) / (kappa * (1 - 6 * eps));
}

double ComparisonFunction::value(double x) const { return std::exp(log_value(x)); }

RateBundle::RateBundle(const KernelSpec& k, const PotentialSpec& p, double e) : kernel(k), potential(p), eps(e) {
  if (!(eps > 0 && eps < 1.0 / 11)) fail(ErrorKind::Parameter, "eps must lie in (0, 1/11)");
  if (kernel.d > kernel.alpha1) sobolev_p = 2.0 * kernel.d / (kernel.d - kernel.alpha1);
}

double RateBundle::s0() const { return 2.0 / phi_of_R(potential, r0()); }

namespace {

double log1p_big(double x) { return x > 1e15 ? std::log(x) + std::log1p(1.0 / x) : std::log1p(x); }

}  // namespace

double log_alpha_rate(const RateBundle& b, double r, double s) {
  if (r < b.kernel.kappa * (1 - 1e-12)) fail(ErrorKind::Range, "alpha_rate needs r >= kappa");
  if (!(s > 0)) fail(ErrorKind::Domain, "alpha_rate needs s > 0");
  const auto phi = b.comparison();
  const double x = std::pow(s, -b.kernel.d / b.kernel.alpha1);
  return std::log(b.c_kappa) - 2.0 * phi.log_value(r + b.kernel.kappa) + log1p_big(x);
}

double alpha_rate(const RateBundle& b, double r, double s) { return std::exp(log_alpha_rate(b, r, s)); }

double phi_inverse(const RateBundle& b, double y) {
  try {
    return generalized_inverse([&](double R) { return phi_of_R(b.potential, R); }, Monotone::increasing, y);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::UnboundedInverse) fail(ErrorKind::CriterionInapplicable, "Phi never exceeds 2/s");
    throw;
  }
}

double log_beta(const RateBundle& b, double s) {
  if (!(s > 0)) fail(ErrorKind::Domain, "beta needs s > 0");
  const double sc = std::min(s, b.s0());
  const double R = std::max(phi_inverse(b, 2.0 / sc), b.r0());
  return 2.0 * std::log(b.C0) + log_alpha_rate(b, R, sc / 2);
}

double beta_rate(const RateBundle& b, double s) { return std::exp(log_beta(b, s)); }

double log_gamma_rate(const RateBundle& b, double s) {
  if (!(s > 0)) fail(ErrorKind::Domain, "gamma needs s > 0");
  const double sc = std::min(s, b.s0());
  return log_theta_of_R(b.potential, phi_inverse(b, 2.0 / sc));
}

double gamma_rate(const RateBundle& b, double s) { return std::exp(log_gamma_rate(b, s)); }

double psi_rate(const RateBundle& b, double R) {
  if (!(b.sobolev_p > 0)) fail(ErrorKind::CriterionInapplicable, "Sobolev branch needs d > alpha1");
  const double e = (b.sobolev_p - 2) / b.sobolev_p;
  const double th = theta_of_R(b.potential, R);
  return 1.0 / phi_of_R(b.potential, R) + b.c0_sobolev * (th > 0 ? std::pow(th, e) : 0.0);
}

double log_beta_hat(const RateBundle& b, double s) {
  if (!(s > 0)) fail(ErrorKind::Domain, "beta_hat needs s > 0");
  const double s_hat0 = 4.0 * psi_rate(b, b.r0());
  const double sc = std::min(s, s_hat0);
  double R;
  try {
    R = generalized_inverse([&](double x) { return psi_rate(b, x); }, Monotone::decreasing, sc / 4);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::UnboundedInverse) fail(ErrorKind::CriterionInapplicable, "Psi never drops below s/4");
    throw;
  }
  R = std::max(R, b.r0());
  return std::log(2.0 * b.C0 * b.C0) + log_alpha_rate(b, R, sc / 4);
}

double beta_hat(const RateBundle& b, double s) { return std::exp(log_beta_hat(b, s)); }

double beta_inverse_log(const RateBundle& b, double u) {
  const double lo = 1e-12;
  const double s = generalized_inverse([&](double x) { return log_beta(b, x); }, Monotone::decreasing, u, lo);
  if (s <= lo) fail(ErrorKind::UnboundedInverse, "beta inverse below the resolvable range");
  return s;
}

double gamma_inverse_log(const RateBundle& b, double ly) {
  return generalized_inverse([&](double s) { return log_gamma_rate(b, s); }, Monotone::increasing, ly);
}

double gamma_inverse(const RateBundle& b, double y) { return gamma_inverse_log(b, std::log(y)); }

namespace {

double log_add(double a, double b) {
  if (a == -kInf) return b;
  if (b == -kInf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

// Theta of a valley is a staircase in R, so gamma(s_n) sits on plateaus while delta^n keeps
// growing. Each plateau is summed as a geometric block bounded by its last index.
double valley_plateau_sum(const RateBundle& b, long n_start, double acc, long* count) {
  const PotentialSpec& p = b.potential;
  const double ld = std::log(b.delta), u0 = std::log(b.c1_slicing / 2);
  const double geo = std::log(b.delta / (b.delta - 1));
  // real index at which R_n reaches R
  auto n_of_R = [&](double R) {
    R = std::max(R, b.r0());
    return (2 * std::log(b.C0) + log_alpha_rate(b, R, 1.0 / phi_of_R(p, R)) - u0) / ld;
  };
  const double R_first = std::max(phi_inverse(b, 2.0 / b.s0()), b.r0());
  const double rK = radial_level(*p.off_valley, p.threshold());
  long m = 1;
  while (valley_center(p, m) - valley_radius(p, m) <= std::max(R_first, rK)) ++m;
  // plain terms below the first plateau boundary
  const double edge = valley_center(p, m - 1) + valley_radius(p, m - 1);
  const long n_edge = static_cast<long>(std::floor(n_of_R(edge)));
  for (long n = n_start; n <= n_edge; ++n, ++*count) {
    double sn;
    try {
      sn = beta_inverse_log(b, u0 + n * ld);
    } catch (const Error&) {
      fail(ErrorKind::SlicingInapplicable, "s_n left the resolvable range before the plateau region");
    }
    acc = log_add(acc, log_gamma_rate(b, sn) + n * ld);
  }
  std::vector<double> L;
  double left = edge;
  long n_lo = n_edge;
  for (; m < 2000; ++m) {
    const double right = valley_center(p, m) + valley_radius(p, m);
    const long n_hi = static_cast<long>(std::floor(n_of_R(right))) + 1;
    if (n_hi > n_lo) {
      const double Lm = log_theta_of_R(p, left) + n_hi * ld + geo;
      if (!std::isfinite(Lm) && Lm > 0) fail(ErrorKind::SlicingInapplicable, "summability terms overflow");
      acc = log_add(acc, Lm);
      L.push_back(Lm);
      *count += n_hi - n_lo;
      n_lo = n_hi;
    }
    left = right;
    const size_t k = L.size();
    if (k >= 6 && L[k - 1] < acc - 40) {
      bool falling = true;
      for (size_t i = k - 5; i < k; ++i) falling = falling && L[i] < L[i - 1];
      if (falling) return acc;
    }
  }
  fail(ErrorKind::SlicingInapplicable, "sum gamma(s_n) delta^n is not summable: plateau blocks do not decay");
}

}  // namespace

double slicing_log_summability(const RateBundle& b, long* terms, long* n_start_out) {
  const double s0 = b.s0();
  if (!(log_gamma_rate(b, s0) > -kInf))
    fail(ErrorKind::SlicingInapplicable, "gamma vanishes identically; the slicing branch does not apply");
  const double ld = std::log(b.delta);
  const double u0 = std::log(b.c1_slicing / 2);
  const long n_start = std::max(1L, static_cast<long>(std::ceil((log_beta(b, s0) - u0) / ld)));
  if (n_start_out) *n_start_out = n_start;
  if (b.potential.family == PotentialFamily::valley) {
    long count = 0;
    const double acc = valley_plateau_sum(b, n_start, -kInf, &count);
    if (terms) *terms = count;
    return acc;
  }
  double acc = -kInf, prev = kInf;
  int rising = 0, zeros = 0;
  bool started = false;
  long n = n_start;
  for (; n < n_start + 5000; ++n) {
    double sn;
    try {
      sn = beta_inverse_log(b, u0 + n * ld);
    } catch (const Error&) {
      break;  // s_n below the resolvable range; judge from the terms collected so far
    }
    const double lt = log_gamma_rate(b, sn) + n * ld;
    if (std::isinf(lt) && lt > 0) fail(ErrorKind::SlicingInapplicable, "summability terms overflow");
    if (lt == -kInf) {
      if (++zeros >= 3) break;
      continue;
    }
    zeros = 0;
    acc = log_add(acc, lt);
    if (started) {
      const double lrho = lt - prev;
      rising = lrho >= 0 ? rising + 1 : 0;
      if (rising >= 20) fail(ErrorKind::SlicingInapplicable, "sum gamma(s_n) delta^n is not summable");
      // geometric tail t rho / (1 - rho) negligible against the sum
      if (lrho < 0 && lt + lrho - std::log(-std::expm1(lrho)) < acc + std::log(1e-12)) {
        ++n;
        break;
      }
    }
    started = true;
    prev = lt;
  }
  if (terms) *terms = n - n_start;
  if (n - n_start < 3) fail(ErrorKind::SlicingInapplicable, "too few resolvable slicing terms");
  if (rising > 0) fail(ErrorKind::SlicingInapplicable, "summability terms still increasing at the resolution limit");
  return acc;
}

SlicingResult slicing_schedule(const RateBundle& b, double s) {
  if (!(s > 0)) fail(ErrorKind::Domain, "slicing needs s > 0");
  SlicingResult out;
  out.log_summability_sum = slicing_log_summability(b, &out.summability_terms, &out.n_start);
  out.summability_sum = std::exp(out.log_summability_sum);
  const double s0 = b.s0();
  const double ld = std::log(b.delta);
  const double u0 = std::log(b.c1_slicing / 2);
  const double floor_a = (log_beta(b, s0) + std::log(2.0 / b.c1_slicing)) / ld;
  const double floor_b = (-std::log(4 * b.delta) - log_gamma_rate(b, s0)) / ld;
  const long N0 = std::max(1L, static_cast<long>(std::ceil(std::max(floor_a, floor_b))));
  const double sd = std::sqrt(b.delta);
  const double coef = 4 * b.delta * (sd + 1) / (sd - 1);
  // both s_N and gamma^{-1}(delta^{-N-1}/4) fall with N, so the condition is monotone
  auto gi_of = [&](long N) { return gamma_inverse_log(b, -std::log(4.0) - (N + 1) * ld); };
  auto ok = [&](long N) {
    try {
      return coef * beta_inverse_log(b, u0 + N * ld) + 2 * gi_of(N) <= s;
    } catch (const Error&) {
      fail(ErrorKind::SlicingInapplicable, "n0 search left the resolvable range");
    }
  };
  long lo = N0 - 1, hi = N0;
  while (!ok(hi)) {
    lo = hi;
    hi = N0 + 2 * (hi - N0) + 1;
    if (hi - N0 > 100000000L) fail(ErrorKind::SlicingInapplicable, "n0 search exceeded 1e8");
  }
  while (hi - lo > 1) {
    const long mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  out.n0 = hi;
  for (long N = N0; N <= out.n0 && out.s_n.size() < 200; ++N) out.s_n.push_back(beta_inverse_log(b, u0 + N * ld));
  const double gi = gi_of(out.n0);
  out.log_beta_tilde = std::log(2.0) + log_beta(b, gi);
  out.beta_tilde = std::exp(out.log_beta_tilde);
  return out;
}

std::string to_string(IntegralVerdict v) {
  switch (v) {
    case IntegralVerdict::converges: return "converges";
    case IntegralVerdict::diverges: return "diverges";
    case IntegralVerdict::undecided: return "undecided";
  }
  return "?";
}

bool closed_form_iuc(double theta1, double theta2) { return theta1 > 1 || (theta1 == 1 && theta2 > 2); }

double power_log_rate_inverse(double theta1, double theta2, double u) {
  // log(1+e^u) and log log(e+e^u) without overflow
  const double l1 = u > 40 ? u + std::log1p(std::exp(-u)) : std::log1p(std::exp(u));
  const double l2 = u > 40 ? std::log(u + std::log1p(std::exp(1.0 - u))) : std::log(std::log(std::exp(1.0) + std::exp(u)));
  return std::exp(-theta1 * std::log(l1) - (theta2 - theta1) * std::log(l2));
}

IntegralTestResult iuc_integral_test(const std::function<double(double)>& inv_of_log, double t0, double w_max) {
  IntegralTestResult res;
  const double u0 = std::max(std::log(std::max(t0, 1.0)), std::exp(1.0));
  const double w0 = std::log(u0);
  // substitute s = exp(exp(w)): ds/s = e^w dw
  auto block = [&](double a) {
    return quad::integrate([&](double w) { return inv_of_log(std::exp(w)) * std::exp(w); }, a, a + 1.0, 1e-10);
  };
  for (double w = w0; w + 1.0 <= w_max; w += 1.0) {
    double J;
    try {
      J = block(w);
    } catch (const Error&) {
      break;
    }
    if (!std::isfinite(J)) break;
    // the remaining tail is below double resolution of the partial sum
    if (J <= 1e-17 * res.partial) break;
    res.w.push_back(w);
    res.increments.push_back(J);
    res.partial += J;
  }
  const size_t n = res.increments.size();
  if (n < 6) return res;
  const size_t m = std::max<size_t>(4, n / 3);
  const size_t first = n - m;
  bool nondecreasing = true;
  double rho_max = 0;
  for (size_t i = first + 1; i < n; ++i) {
    const double rho = res.increments[i] / res.increments[i - 1];
    rho_max = std::max(rho_max, rho);
    if (rho < 1 - 1e-12) nondecreasing = false;
  }
  res.tail_ratio = rho_max;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = first; i < n; ++i) {
    const double x = std::log(res.w[i] + 0.5), y = std::log(res.increments[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double k = static_cast<double>(m);
  res.power_exponent = -(k * sxy - sx * sy) / (k * sxx - sx * sx);
  const double last = res.increments.back();
  if (nondecreasing) {
    res.verdict = IntegralVerdict::diverges;
    res.extrapolated = kInf;
  } else if (rho_max <= 0.9) {
    res.verdict = IntegralVerdict::converges;
    res.extrapolated = res.partial + last * rho_max / (1 - rho_max);
  } else if (res.power_exponent >= 1.5) {
    res.verdict = IntegralVerdict::converges;
    res.extrapolated = res.partial + last * (res.w.back() + 1) / (res.power_exponent - 1);
  } else if (res.power_exponent <= 0.5) {
    res.verdict = IntegralVerdict::diverges;
    res.extrapolated = kInf;
  } else {
    res.verdict = IntegralVerdict::undecided;
    res.extrapolated = res.partial;
  }
  return res;
}

WitnessSides mixed_sp_witness(const RateBundle& b, const Eigen::MatrixXd& form, double h, const Eigen::VectorXd& phi1,
                              const Eigen::VectorXd& f, double s, double p) {
  WitnessSides w;
  w.lhs = f.squaredNorm() * h;
  if (w.lhs == 0) return w;
  const double D = f.dot(form * f) * h;
  const double sc = std::min(s, b.s0());
  const double ref = f.cwiseAbs().dot(phi1) * h;
  double pnorm2;
  double gexp;
  if (std::isinf(p)) {
    pnorm2 = std::pow(f.cwiseAbs().maxCoeff(), 2);
    gexp = 1.0;
  } else {
    pnorm2 = std::pow(f.cwiseAbs().array().pow(p).sum() * h, 2.0 / p);
    gexp = (p - 2) / p;
  }
  const double g = gamma_rate(b, sc);
  w.rhs = s * D + beta_rate(b, sc) * ref * ref + (g > 0 ? std::pow(g, gexp) * pnorm2 : 0.0);
  return w;
}

std::vector<RateRow> tabulate_rates(const RateBundle& b, const std::vector<double>& s_grid, bool with_slicing) {
  std::vector<RateRow> rows;
  const double nan = std::nan("");
  for (double s : s_grid) {
    RateRow r{s, beta_rate(b, s), gamma_rate(b, s), nan, nan};
    if (b.sobolev_p > 0) {
      try {
        r.beta_hat = beta_hat(b, s);
      } catch (const Error&) {
      }
    }
    if (with_slicing) {
      try {
        r.beta_tilde = slicing_schedule(b, s).beta_tilde;
      } catch (const Error&) {
      }
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace fklab
