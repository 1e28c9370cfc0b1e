#include "fklab/calibrate.hpp"

#include <cmath>
#include <random>

#include "fklab/error.hpp"

namespace fklab {

Calibration calibrate_constants(const KernelSpec& k, const PotentialSpec& p, const CalibrationInput& in) {
  if (!in.jump) fail(ErrorKind::Parameter, "calibration needs the jump-only assembly");
  const Grid& g = in.jump->grid;
  if (in.phi1.size() != g.N) fail(ErrorKind::Parameter, "ground state does not match the grid");
  Calibration c;
  c.functions = in.functions;
  c.safety = in.safety;

  // C0: sup of comparison function over ground state
  const ComparisonFunction cf{k.kappa, in.eps, &p};
  for (int i = 0; i < g.N; ++i) {
    if (std::abs(g.x(i)) > in.window * g.R || !(in.phi1[i] > 0)) continue;
    c.raw_C0 = std::max(c.raw_C0, std::exp(cf.log_value(g.x(i)) - std::log(in.phi1[i])));
  }

  std::mt19937_64 rng(in.seed);
  const double h = g.h, r = k.kappa, d = k.d;
  const bool sobolev = k.alpha1 < k.d;
  const double support = std::min(g.R - k.kappa, 3 * k.kappa);
  for (int n = 0; n < in.functions; ++n) {
    const Eigen::VectorXd f = random_test_function(rng, g, support);
    const double D = f.dot(in.jump->A * f) * h;
    double inner = 0, l1 = 0;
    for (int i = 0; i < g.N; ++i) {
      const double x = std::abs(g.x(i));
      if (x <= r) inner += f[i] * f[i] * h;
      if (x <= r + k.kappa) l1 += std::abs(f[i]) * h;
    }
    if (l1 > 0) {
      for (double s : in.s_list) {
        const double ratio = (inner - s * D) / ((1 + std::pow(s, -d / k.alpha1)) * l1 * l1);
        c.raw_c_kappa = std::max(c.raw_c_kappa, ratio);
      }
    }
    if (sobolev) {
      const SidePair sp = sobolev_check(g, k, in.jump->A, f);
      if (sp.rhs > 0) c.raw_c0_sobolev = std::max(c.raw_c0_sobolev, sp.lhs / sp.rhs);
    }
  }
  auto frozen = [&](double raw) { return raw > 0 ? in.safety * raw : 1.0; };
  c.C0 = frozen(c.raw_C0);
  c.c_kappa = frozen(c.raw_c_kappa);
  c.c0_sobolev = frozen(c.raw_c0_sobolev);
  return c;
}

void apply_calibration(RateBundle& b, const Calibration& c) {
  b.C0 = c.C0;
  b.c_kappa = c.c_kappa;
  b.c0_sobolev = c.c0_sobolev;
}

}  // namespace fklab
