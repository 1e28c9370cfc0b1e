#include "fklab/spectral.hpp"

#include <cmath>

#include "fklab/error.hpp"

namespace fklab {

SpectralResult solve_spectrum(const Eigen::MatrixXd& A, const Grid& g, int k) {
  const int N = static_cast<int>(A.rows());
  if (k < 1 || k > N) fail(ErrorKind::Precondition, "mode count must lie in [1, N]");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  if (es.info() != Eigen::Success) fail(ErrorKind::Solver, "dense symmetric eigensolver did not converge");
  SpectralResult r;
  r.grid = g;
  const double h = g.h;
  r.eigenvalues = es.eigenvalues().head(k);
  r.eigenvectors = es.eigenvectors().leftCols(k) / std::sqrt(h);
  if (r.eigenvectors.col(0).sum() < 0) r.eigenvectors.col(0) *= -1;
  r.ground_state = r.eigenvectors.col(0);
  r.norm_A = es.eigenvalues().cwiseAbs().maxCoeff();
  for (int n = 0; n < k; ++n) {
    const Eigen::VectorXd v = r.eigenvectors.col(n) * std::sqrt(h);
    const double res = (A * v - r.eigenvalues[n] * v).norm() / r.norm_A;
    r.max_residual = std::max(r.max_residual, res);
  }
  r.orthonormality_defect =
      ((r.eigenvectors.transpose() * r.eigenvectors) * h - Eigen::MatrixXd::Identity(k, k)).cwiseAbs().maxCoeff();
  return r;
}

SpectralResult solve_spectrum(const OperatorAssembly& as, int k) { return solve_spectrum(as.A, as.grid, k); }

HeatKernel heat_kernel(const SpectralResult& s, double t) {
  if (!(t > 0)) fail(ErrorKind::Domain, "heat kernel needs t > 0");
  HeatKernel hk;
  hk.t = t;
  hk.h = s.grid.h;
  const Eigen::VectorXd w = (-t * s.eigenvalues.array()).exp();
  hk.p = s.eigenvectors * w.asDiagonal() * s.eigenvectors.transpose();
  // symmetric to the last bit
  hk.p = 0.5 * (hk.p + hk.p.transpose()).eval();
  return hk;
}

HeatKernel semigroup_kernel(const OperatorAssembly& as, double t) {
  if (!(t > 0)) fail(ErrorKind::Domain, "semigroup needs t > 0");
  const int N = as.grid.N;
  const double c = as.A.diagonal().maxCoeff();
  Eigen::MatrixXd M = -as.A;
  M.diagonal().array() += c;
  M = M.cwiseMax(0.0);  // removes rounding-level negatives on the diagonal
  const double nrm = M.rowwise().sum().maxCoeff();
  int k = 0;
  double delta = t;
  while (delta * nrm > 0.5) {
    delta *= 0.5;
    ++k;
  }
  // exp(delta M) by Taylor series of non-negative terms
  Eigen::MatrixXd E = Eigen::MatrixXd::Identity(N, N);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(N, N);
  const Eigen::MatrixXd dM = delta * M;
  for (int m = 1; m < 60; ++m) {
    term = (term * dM) / m;
    E += term;
    if (term.maxCoeff() < 1e-18 * E.maxCoeff()) break;
  }
  E *= std::exp(-delta * c);
  for (int i = 0; i < k; ++i) E = E * E;
  HeatKernel hk;
  hk.t = t;
  hk.h = as.grid.h;
  hk.p = E / hk.h;
  return hk;
}

GroundState perron_ground_state(const HeatKernel& P, int max_iter, double tol) {
  const int N = static_cast<int>(P.p.rows());
  const double h = P.h;
  const Eigen::MatrixXd T = P.p * h;
  GroundState gs;
  Eigen::VectorXd v = Eigen::VectorXd::Ones(N);
  v /= std::sqrt(v.squaredNorm() * h);
  double growth = 0;
  for (int it = 1; it <= max_iter; ++it) {
    Eigen::VectorXd w = T * v;
    growth = std::sqrt(w.squaredNorm() * h);
    if (!(growth > 0)) fail(ErrorKind::Solver, "semigroup annihilated the iterate");
    w /= growth;
    double change = 0;
    for (int i = 0; i < N; ++i) {
      if (w[i] > 0 && v[i] > 0) change = std::max(change, std::abs(w[i] / v[i] - 1));
      else if (w[i] != v[i]) change = std::max(change, 1.0);
    }
    v = w;
    gs.iterations = it;
    if (change < tol) break;
  }
  gs.phi = v;
  gs.lambda1 = -std::log(growth) / P.t;
  return gs;
}

namespace {

constexpr double kFloor = 1e-300;

bool in_window(const Grid& g, int i, double window) { return std::abs(g.x(i)) <= window * g.R + 1e-12; }

}  // namespace

RatioDiagnostic iuc_ratio(const HeatKernel& P, const Eigen::VectorXd& phi1, const Grid& g, double window) {
  RatioDiagnostic d;
  std::vector<int> idx;
  for (int i = 0; i < g.N; ++i) {
    if (!in_window(g, i, window)) continue;
    if (!(phi1[i] > kFloor)) {
      ++d.excluded;
      continue;
    }
    idx.push_back(i);
  }
  for (int i : idx)
    for (int j : idx) {
      const double r = P.p(i, j) / phi1[i] / phi1[j];
      if (r > d.value) {
        d.value = r;
        d.arg_i = i;
        d.arg_j = j;
      }
    }
  return d;
}

RatioDiagnostic intrinsic_norm(const HeatKernel& P, const Eigen::VectorXd& phi1, double lambda1, const Grid& g,
                               double window) {
  RatioDiagnostic d;
  const double e = std::exp(lambda1 * P.t);
  for (int i = 0; i < g.N; ++i) {
    if (!in_window(g, i, window)) continue;
    if (!(phi1[i] > kFloor)) {
      ++d.excluded;
      continue;
    }
    // ptilde_ij^2 phi_j^2 = (e p_ij / phi_i)^2
    double s = 0;
    for (int j = 0; j < g.N; ++j) {
      if (!(phi1[j] > kFloor)) continue;
      const double q = e * P.p(i, j) / phi1[i];
      s += q * q * P.h;
    }
    const double v = std::sqrt(s);
    if (v > d.value) {
      d.value = v;
      d.arg_i = i;
    }
  }
  return d;
}

double intrinsic_row_defect(const HeatKernel& P, const Eigen::VectorXd& phi1, double lambda1, const Grid& g,
                            double window) {
  const double e = std::exp(lambda1 * P.t);
  double worst = 0;
  for (int i = 0; i < g.N; ++i) {
    if (!in_window(g, i, window) || !(phi1[i] > kFloor)) continue;
    const double row = e * P.p.row(i).dot(phi1) * P.h / phi1[i];
    worst = std::max(worst, std::abs(row - 1));
  }
  return worst;
}

SupersolutionReport supersolution_check(const OperatorAssembly& as, const Eigen::VectorXd& psi,
                                        const Eigen::VectorXd& phi1, double window) {
  if ((psi.array() <= 0).any()) fail(ErrorKind::Domain, "supersolution candidate must be positive");
  const Grid& g = as.grid;
  const Eigen::VectorXd Lpsi = -(as.A * psi);
  SupersolutionReport r;
  r.lambda_star = -kInf;
  for (int i = 0; i < g.N; ++i) {
    if (!in_window(g, i, window)) continue;
    r.lambda_star = std::max(r.lambda_star, Lpsi[i] / psi[i]);
    r.ratio_bound = std::max(r.ratio_bound, phi1[i] / psi[i]);
  }
  return r;
}

Eigen::VectorXd psi_theorem12(const Grid& g, double lambda, double kappa) {
  Eigen::VectorXd v(g.N);
  for (int i = 0; i < g.N; ++i) {
    const double x = g.x(i);
    v[i] = std::exp(-lambda / (2 * kappa) * std::sqrt(1 + x * x) * std::log1p(x * x));
  }
  return v;
}

double psi_example12_c0(double gamma, double lambda) {
  if (!(gamma > 1) || !std::isfinite(gamma)) fail(ErrorKind::Parameter, "gamma must lie in (1, inf)");
  const double q = std::pow(1 / gamma, 1 / (gamma - 1)) - std::pow(1 / gamma, gamma / (gamma - 1));
  return 1.0 / (2 * (1 + 2 * lambda) * q);
}

Eigen::VectorXd psi_example12(const Grid& g, double theta, double gamma, double lambda) {
  const double c0 = psi_example12_c0(gamma, lambda);
  const double e = (gamma - 1) / gamma;
  const double a = std::pow(c0 * theta, e);
  Eigen::VectorXd v(g.N);
  for (int i = 0; i < g.N; ++i) {
    const double r = std::sqrt(1 + g.x(i) * g.x(i));
    v[i] = std::exp(-a * r * std::pow(std::log(r), e));
  }
  return v;
}

double condition13_ratio(const HeatKernel& P, const Grid& g, double x, double r_num, double r_den) {
  const int i = g.index_of(x);
  const double xi = g.x(i);
  double num = 0, den = 0;
  for (int j = 0; j < g.N; ++j) {
    const double y = g.x(j);
    if (std::abs(y - xi) <= r_num + 1e-12) num += P.p(i, j) * P.h;
    if (std::abs(y) <= r_den + 1e-12) den += P.p(i, j) * P.h;
  }
  if (!(den > kFloor)) return kInf;
  return num / den;
}

}  // namespace fklab
