#include "fklab/quadrature.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

namespace fklab::quad {

double integrate(const Fn& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(f, a, b, 20, tol);
}

double integrate_singular(const Fn& f, double a, double b, double tol) {
  if (a == b) return 0.0;
  static thread_local boost::math::quadrature::tanh_sinh<double> ts;
  return ts.integrate(f, a, b, tol);
}

double integrate_to_inf(const Fn& f, double a, double tol) {
  static thread_local boost::math::quadrature::exp_sinh<double> es;
  return es.integrate([&](double u) { return f(a + u); }, 0.0, std::numeric_limits<double>::infinity(), tol);
}

}  // namespace fklab::quad
