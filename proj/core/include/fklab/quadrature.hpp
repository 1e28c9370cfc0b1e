#pragma once
#include <functional>

namespace fklab::quad {

using Fn = std::function<double(double)>;

// adaptive Gauss-Kronrod on a finite smooth interval
double integrate(const Fn& f, double a, double b, double tol = 1e-12);
// tanh-sinh, tolerates integrable endpoint singularities
double integrate_singular(const Fn& f, double a, double b, double tol = 1e-12);
// [a, inf)
double integrate_to_inf(const Fn& f, double a, double tol = 1e-12);

}  // namespace fklab::quad
