#include "fklab/bounds.hpp"

#include <algorithm>
#include <cmath>

#include <boost/math/tools/minima.hpp>

#include "fklab/error.hpp"

namespace fklab {

EnvelopeKind envelope_kind_from_string(const std::string& s) {
  if (s == "prop31_lower") return EnvelopeKind::prop31_lower;
  if (s == "thm12_lower") return EnvelopeKind::thm12_lower;
  if (s == "thm12_upper") return EnvelopeKind::thm12_upper;
  if (s == "ex12_gamma_inf") return EnvelopeKind::ex12_gamma_inf;
  if (s == "ex12_gamma_finite") return EnvelopeKind::ex12_gamma_finite;
  if (s == "prop41_power") return EnvelopeKind::prop41_power;
  if (s == "prop41_exp") return EnvelopeKind::prop41_exp;
  fail(ErrorKind::Config, "unknown envelope kind '" + s + "'");
}

std::string to_string(EnvelopeKind k) {
  switch (k) {
    case EnvelopeKind::prop31_lower: return "prop31_lower";
    case EnvelopeKind::thm12_lower: return "thm12_lower";
    case EnvelopeKind::thm12_upper: return "thm12_upper";
    case EnvelopeKind::ex12_gamma_inf: return "ex12_gamma_inf";
    case EnvelopeKind::ex12_gamma_finite: return "ex12_gamma_finite";
    case EnvelopeKind::prop41_power: return "prop41_power";
    case EnvelopeKind::prop41_exp: return "prop41_exp";
  }
  return "?";
}

void Envelope::validate() const {
  if (!(kappa > 0)) fail(ErrorKind::Parameter, "kappa must be positive");
  if (!(eps > 0 && eps < 1)) fail(ErrorKind::Parameter, "eps must lie in (0,1)");
  switch (kind) {
    case EnvelopeKind::prop31_lower:
      if (!(eps < 1.0 / 11)) fail(ErrorKind::Parameter, "prop31_lower needs eps < 1/11");
      if (!potential) fail(ErrorKind::Parameter, "prop31_lower needs a potential");
      break;
    case EnvelopeKind::ex12_gamma_finite:
      if (!(gamma > 1 && std::isfinite(gamma))) fail(ErrorKind::Parameter, "gamma must lie in (1, inf)");
      [[fallthrough]];
    case EnvelopeKind::thm12_lower:
    case EnvelopeKind::thm12_upper:
    case EnvelopeKind::ex12_gamma_inf:
      if (!(theta > 0)) fail(ErrorKind::Parameter, "theta must be positive");
      break;
    case EnvelopeKind::prop41_power:
    case EnvelopeKind::prop41_exp:
      if (!(theta6 >= 0)) fail(ErrorKind::Parameter, "theta6 must be non-negative");
      break;
  }
  if (!(c0 > 0)) fail(ErrorKind::Parameter, "c0 must be positive");
}

double eval_envelope(const Envelope& env, double x) {
  env.validate();
  const double ax = std::abs(x);
  const double L = std::log1p(ax);
  switch (env.kind) {
    case EnvelopeKind::prop31_lower: {
      const double sv = sup_potential(*env.potential, ax + 2 * env.eps * env.kappa);
      return -ax / (env.kappa * (1 - 6 * env.eps)) * std::log(1 + ax + sv);
    }
    case EnvelopeKind::thm12_lower: return -(1 + env.eps) * env.theta / env.kappa * ax * L;
    case EnvelopeKind::thm12_upper: return -(1 - env.eps) * env.theta / env.kappa * ax * L;
    case EnvelopeKind::ex12_gamma_inf: return -(env.upper ? 1 - env.eps : 1 + env.eps) * env.theta * ax * L;
    case EnvelopeKind::ex12_gamma_finite: {
      const double e = (env.gamma - 1) / env.gamma;
      return -env.c0 * std::pow(env.theta, e) * ax * std::pow(L, e);
    }
    case EnvelopeKind::prop41_power: return -env.c0 * std::pow(ax, 1 + env.theta6);
    case EnvelopeKind::prop41_exp: return -env.c0 * ax * (1 + std::pow(ax, env.theta6));
  }
  return 0;
}

namespace {

struct LinFit {
  double a = 0, c = 0, rss = 0;
};

// y = a u + c
LinFit lin_fit(const std::vector<double>& u, const std::vector<double>& y) {
  const double n = static_cast<double>(u.size());
  double su = 0, sy = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    su += u[i];
    sy += y[i];
  }
  const double mu = su / n, my = sy / n;
  double suu = 0, suy = 0;
  for (size_t i = 0; i < u.size(); ++i) {
    suu += (u[i] - mu) * (u[i] - mu);
    suy += (u[i] - mu) * (y[i] - my);
  }
  LinFit f;
  f.a = suy / suu;
  f.c = my - f.a * mu;
  for (size_t i = 0; i < u.size(); ++i) {
    const double r = y[i] - f.a * u[i] - f.c;
    f.rss += r * r;
  }
  return f;
}

}  // namespace

DecayFit fit_decay(const Eigen::VectorXd& x, const Eigen::VectorXd& phi, DecayModel model, double b_fixed, double lo,
                   double hi) {
  std::vector<double> ax, y;
  for (int i = 0; i < x.size(); ++i) {
    const double a = std::abs(x[i]);
    if (a < lo || a > hi) continue;
    if (!(phi[i] > 0)) fail(ErrorKind::Domain, "phi must be positive on the fit window");
    ax.push_back(a);
    y.push_back(-std::log(phi[i]));
  }
  if (ax.size() < 10) fail(ErrorKind::InsufficientData, "fit window has fewer than 10 nodes");
  auto at_b = [&](double b) {
    std::vector<double> u(ax.size());
    for (size_t i = 0; i < ax.size(); ++i) u[i] = ax[i] * std::pow(std::log1p(ax[i]), b);
    return lin_fit(u, y);
  };
  DecayFit out;
  out.lo = lo;
  out.hi = hi;
  out.nodes = static_cast<int>(ax.size());
  double b = b_fixed;
  if (model == DecayModel::b_free) {
    b = boost::math::tools::brent_find_minima([&](double bb) { return at_b(bb).rss; }, 0.0, 3.0, 52).first;
  }
  const LinFit f = at_b(b);
  out.a = f.a;
  out.b = b;
  out.c = f.c;
  out.residual = std::sqrt(f.rss / ax.size());
  return out;
}

DecayFit fit_decay(const Eigen::VectorXd& x, const Eigen::VectorXd& phi, double R, DecayModel model, double b_fixed) {
  return fit_decay(x, phi, model, b_fixed, R / 4, 3 * R / 4);
}

SandwichReport envelope_sandwich_report(const Eigen::VectorXd& x, const Eigen::VectorXd& phi, const Envelope& lower,
                                        const Envelope& upper, double R, double band) {
  SandwichReport rep;
  rep.band = band;
  const double lo = R / 4, hi = 3 * R / 4, mid = R / 2;
  // each half-line is aligned at its own node nearest the midpoint
  for (int side = 1; side >= -1; side -= 2) {
    int im = -1;
    for (int i = 0; i < x.size(); ++i)
      if (side * x[i] > 0 && (im < 0 || std::abs(side * x[i] - mid) < std::abs(side * x[im] - mid))) im = i;
    if (im < 0 || !(phi[im] > 0)) fail(ErrorKind::InsufficientData, "no usable alignment node");
    const double nm = -std::log(phi[im]);
    const double lo_off = nm + eval_envelope(lower, x[im]);
    const double up_off = nm + eval_envelope(upper, x[im]);
    if (side > 0) {
      rep.lower_offset = lo_off;
      rep.upper_offset = up_off;
    }
    // trend test: increments from the alignment node must lie between the envelope increments
    for (int i = 0; i < x.size(); ++i) {
      const double a = side * x[i];
      if (a < lo || a > hi) continue;
      ++rep.nodes;
      const double dn = -std::log(phi[i]) - nm;
      const double dl = -eval_envelope(lower, x[i]) + lo_off - nm;
      const double du = -eval_envelope(upper, x[i]) + up_off - nm;
      const double below = std::min(dl, du), above = std::max(dl, du);
      const double tol = 1e-9 * (1 + std::abs(nm));
      const double scale = std::max({std::abs(below), std::abs(above), tol});
      double v = 0;
      if (dn < below - band * std::abs(below) - tol) v = (below - band * std::abs(below) - dn) / scale;
      if (dn > above + band * std::abs(above) + tol) v = std::max(v, (dn - above - band * std::abs(above)) / scale);
      if (v > 0) {
        ++rep.violations;
        rep.max_violation = std::max(rep.max_violation, v);
      }
    }
  }
  rep.violation_fraction = rep.nodes ? static_cast<double>(rep.violations) / rep.nodes : 0.0;
  return rep;
}

}  // namespace fklab
