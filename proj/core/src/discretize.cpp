#include "fklab/discretize.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "fklab/error.hpp"
#include "fklab/quadrature.hpp"

namespace fklab {

Grid Grid::make(double R, int N) {
  if (!(R > 0)) fail(ErrorKind::Parameter, "grid half-width must be positive");
  if (N < 16) fail(ErrorKind::Parameter, "grid needs at least 16 nodes");
  if (N % 2 == 0) fail(ErrorKind::Parameter, "grid node count must be odd");
  Grid g;
  g.R = R;
  g.N = N;
  g.h = 2 * R / (N - 1);
  return g;
}

Grid Grid::from_spacing(double R, double h) {
  const long cells = std::lround(2 * R / h);
  return make(R, static_cast<int>(cells % 2 == 0 ? cells + 1 : cells + 2));
}

Eigen::VectorXd Grid::nodes() const {
  Eigen::VectorXd x(N);
  for (int i = 0; i < N; ++i) x[i] = this->x(i);
  return x;
}

int Grid::index_of(double xv) const {
  const long i = std::lround((xv + R) / h);
  return static_cast<int>(std::clamp<long>(i, 0, N - 1));
}

namespace {

struct NearBand {
  Eigen::VectorXd sigma2, drift;
};

NearBand near_band(const KernelSpec& k, const Grid& g) {
  NearBand nb{Eigen::VectorXd(g.N), Eigen::VectorXd::Zero(g.N)};
  const double h = g.h;
  if (k.translation_invariant()) {
    nb.sigma2.setConstant(2 * k.c1 * std::pow(h, 2 - k.alpha1) / (2 - k.alpha1));
    return nb;
  }
  for (int i = 0; i < g.N; ++i) {
    const double x = g.x(i);
    auto Jp = [&](double z) { return z > 0 ? eval_kernel(k, x, x + z) : 0.0; };
    auto Jm = [&](double z) { return z > 0 ? eval_kernel(k, x, x - z) : 0.0; };
    nb.sigma2[i] = quad::integrate_singular([&](double z) { return z * z * (Jp(z) + Jm(z)); }, 0, h, 1e-14);
    nb.drift[i] = 0.5 * quad::integrate_singular([&](double z) { return z * (Jp(z) - Jm(z)); }, 0, h, 1e-14);
  }
  return nb;
}

// exterior jump intensity seen by node i on the infinite lattice extension
double lattice_kill(const KernelSpec& k, const Grid& g, int i, const NearBand& nb) {
  const double h = g.h;
  const double x = g.x(i);
  double total = 0;
  if (i == 0) total += nb.sigma2[i] / (2 * h * h) - nb.drift[i] / (2 * h);
  if (i == g.N - 1) total += nb.sigma2[i] / (2 * h * h) + nb.drift[i] / (2 * h);
  const bool infinite_range = k.family == KernelFamily::stable_like || k.family == KernelFamily::tempered;
  const double zcut = infinite_range ? k.kappa + 40.0 : k.kappa;
  for (int side = -1; side <= 1; side += 2) {
    // first virtual index beyond the grid on this side
    long j = side < 0 ? -1 : g.N;
    double last = 0;
    for (;; j += side) {
      if (std::abs(j - i) < 2) continue;
      const double y = g.x(0) + j * h;
      const double z = std::abs(y - x);
      if (z > zcut + 0.5 * h) break;
      total += eval_kernel(k, x, y) * h;
      last = z;
    }
    if (infinite_range && last > 0) total += kernel_tail_integral(k, last + 0.5 * h);
  }
  return total;
}

}  // namespace

bool is_psd(const Eigen::MatrixXd& M, double rel_tol) {
  const double nrm = M.cwiseAbs().rowwise().sum().maxCoeff();
  Eigen::MatrixXd S = M;
  S.diagonal().array() += rel_tol * std::max(nrm, 1e-300);
  Eigen::LLT<Eigen::MatrixXd> llt(S);
  return llt.info() == Eigen::Success;
}

OperatorAssembly assemble_generator(const KernelSpec& k, const PotentialSpec* pot, const Grid& g) {
  k.validate();
  if (k.d != 1) fail(ErrorKind::Unsupported, "assembly is one-dimensional");
  const double h = g.h;
  if (!(h < k.kappa / 4) || !(h < 1)) fail(ErrorKind::Precondition, "grid spacing must satisfy h < kappa/4 and h < 1");
  const int N = g.N;
  OperatorAssembly as;
  as.grid = g;
  const NearBand nb = near_band(k, g);
  as.sigma2 = nb.sigma2;
  as.V.resize(N);
  as.kill.resize(N);
  for (int i = 0; i < N; ++i) {
    as.V[i] = pot ? eval_potential(*pot, g.x(i)) : 0.0;
    as.kill[i] = lattice_kill(k, g, i, nb);
  }
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < N; ++j) {
      if (std::abs(i - j) >= 2) A(i, j) = -eval_kernel(k, g.x(i), g.x(j)) * h;
    }
    if (i + 1 < N) A(i, i + 1) = -nb.sigma2[i] / (2 * h * h) - nb.drift[i] / (2 * h);
    if (i > 0) A(i, i - 1) = -nb.sigma2[i] / (2 * h * h) + nb.drift[i] / (2 * h);
    A(i, i) = -(A.row(i).sum()) + as.kill[i] + as.V[i];
  }
  const double nrm = A.cwiseAbs().rowwise().sum().maxCoeff();
  as.asymmetry_defect = (A - A.transpose()).cwiseAbs().maxCoeff() / nrm;
  if (as.asymmetry_defect > 1e-6)
    fail(ErrorKind::Assembly, "generator asymmetry defect " + std::to_string(as.asymmetry_defect) +
                                  " exceeds 1e-6 (drift correction inconsistent)");
  as.A = 0.5 * (A + A.transpose());
  if ((as.A.array() - Eigen::MatrixXd(as.A.diagonal().asDiagonal()).array()).maxCoeff() > 0)
    fail(ErrorKind::Assembly, "positive off-diagonal entry");
  if (!is_psd(as.A)) fail(ErrorKind::Assembly, "generator matrix is not positive semidefinite");
  as.Bform = assemble_form(k, pot, g);
  return as;
}

Eigen::MatrixXd assemble_form(const KernelSpec& k, const PotentialSpec* pot, const Grid& g) {
  k.validate();
  if (k.d != 1) fail(ErrorKind::Unsupported, "assembly is one-dimensional");
  const double h = g.h;
  if (!(h < k.kappa / 4) || !(h < 1)) fail(ErrorKind::Precondition, "grid spacing must satisfy h < kappa/4 and h < 1");
  const int N = g.N;
  const NearBand nb = near_band(k, g);
  // conductances: the form is sum over edges of g_ij (f_i - f_j)^2 plus the killed/potential mass
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(N, N);
  auto add_edge = [&](int i, int j, double c) {
    B(i, j) -= c / h;
    B(j, i) -= c / h;
    B(i, i) += c / h;
    B(j, j) += c / h;
  };
  for (int i = 0; i < N; ++i) {
    for (int j = i + 2; j < N; ++j) add_edge(i, j, eval_kernel(k, g.x(i), g.x(j)) * h * h);
    if (i + 1 < N) add_edge(i, i + 1, (nb.sigma2[i] + nb.sigma2[i + 1]) / (4 * h));
    B(i, i) += lattice_kill(k, g, i, nb) + (pot ? eval_potential(*pot, g.x(i)) : 0.0);
  }
  if (!is_psd(B)) fail(ErrorKind::Assembly, "form matrix has a negative eigenvalue");
  return B;
}

double form_double_sum(const KernelSpec& k, const OperatorAssembly& as, const Eigen::VectorXd& f) {
  const Grid& g = as.grid;
  const double h = g.h;
  double s = 0;
  for (int i = 0; i < g.N; ++i) {
    for (int j = 0; j < g.N; ++j) {
      if (i == j) continue;
      const double d = f[i] - f[j];
      s += 0.5 * d * d * eval_kernel(k, g.x(i), g.x(j)) * h * h;
    }
    s += f[i] * f[i] * (as.V[i] + as.kill[i]) * h;
  }
  return s;
}

Eigen::VectorXd random_test_function(std::mt19937_64& rng, const Grid& g, double support, TestFunctionKind kind) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  if (kind == TestFunctionKind::mixed) kind = static_cast<TestFunctionKind>(rng() % 3);
  Eigen::VectorXd f = Eigen::VectorXd::Zero(g.N);
  const double L = support;
  switch (kind) {
    case TestFunctionKind::piecewise_linear: {
      // knots on a fixed lattice of spacing 0.25, random values, random sub-support
      const double a = -L + U(rng) * L, b = a + (0.3 + 0.7 * U(rng)) * (L - a);
      const double dk = 0.25;
      const int nk = std::max(2, static_cast<int>(std::floor((b - a) / dk)) + 1);
      std::vector<double> vals(nk + 1);
      for (auto& v : vals) v = 2 * U(rng) - 1;
      vals.front() = vals.back() = 0.0;
      for (int i = 0; i < g.N; ++i) {
        const double x = g.x(i);
        if (x <= a || x >= a + nk * dk) continue;
        const double t = (x - a) / dk;
        const int m = static_cast<int>(t);
        f[i] = vals[m] + (t - m) * (vals[m + 1] - vals[m]);
      }
      break;
    }
    case TestFunctionKind::tent: {
      const double w = 0.1 + 1.9 * U(rng);
      const double c = (2 * U(rng) - 1) * std::max(0.0, L - w);
      const double amp = 0.5 + U(rng);
      for (int i = 0; i < g.N; ++i) f[i] = amp * std::max(0.0, 1 - std::abs(g.x(i) - c) / w);
      break;
    }
    default: {
      const int m = 1 + static_cast<int>(rng() % 4);
      for (int q = 0; q < m; ++q) {
        const double w = 0.1 + 0.9 * U(rng);
        const double c = (2 * U(rng) - 1) * std::max(0.0, L - 4 * w);
        const double amp = 2 * U(rng) - 1;
        for (int i = 0; i < g.N; ++i) {
          const double x = g.x(i);
          if (std::abs(x) > L) continue;
          f[i] += amp * std::exp(-0.5 * std::pow((x - c) / w, 2));
        }
      }
      break;
    }
  }
  return f;
}

SidePair local_sp_explicit_check(const Grid& g, const KernelSpec& k, const Eigen::VectorXd& f, double r, double s) {
  if (!(s > 0) || s > k.kappa * (1 + 1e-12)) fail(ErrorKind::Range, "local SP check needs 0 < s <= kappa");
  if (r < k.kappa * (1 - 1e-12)) fail(ErrorKind::Range, "local SP check needs r >= kappa");
  const double h = g.h, tol = 1e-9 * h;
  const double a1 = k.alpha1, d = k.d;
  const double vol = ball_volume(k.d, s);
  SidePair out;
  double dbl = 0, l1 = 0;
  const int w = static_cast<int>(std::floor(s / h + 1e-9));
  for (int i = 0; i < g.N; ++i) {
    const double x = g.x(i);
    if (std::abs(x) <= r + tol) out.lhs += f[i] * f[i] * h;
    if (std::abs(x) <= r + s + tol) l1 += std::abs(f[i]) * h;
    for (int j = std::max(0, i - w); j <= std::min(g.N - 1, i + w); ++j) {
      if (j == i) continue;
      const double z = std::abs(x - g.x(j));
      if (z > s + tol) continue;
      const double df = f[i] - f[j];
      dbl += df * df / std::pow(z, d + a1) * h * h;
    }
  }
  out.rhs = 2 * std::pow(s, d + a1) / vol * dbl + 2 / vol * l1 * l1;
  return out;
}

SidePair sobolev_check(const Grid& g, const KernelSpec& k, const Eigen::MatrixXd& jump_form, const Eigen::VectorXd& f) {
  if (k.alpha1 >= k.d) fail(ErrorKind::CriterionInapplicable, "Sobolev inequality needs d > alpha1");
  const double p = 2.0 * k.d / (k.d - k.alpha1);
  const double h = g.h;
  SidePair out;
  out.lhs = std::pow(f.cwiseAbs().array().pow(p).sum() * h, 2.0 / p);
  out.rhs = f.dot(jump_form * f) * h + f.squaredNorm() * h;
  return out;
}

void write_matrix_binary(const std::string& path, const Grid& g, const Eigen::MatrixXd& M) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Usage, "cannot open " + path);
  const std::int64_t N = M.rows();
  os.write(reinterpret_cast<const char*>(&N), sizeof N);
  os.write(reinterpret_cast<const char*>(&g.R), sizeof g.R);
  os.write(reinterpret_cast<const char*>(&g.h), sizeof g.h);
  for (Eigen::Index i = 0; i < M.rows(); ++i)
    for (Eigen::Index j = 0; j < M.cols(); ++j) {
      const double v = M(i, j);
      os.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
}

}  // namespace fklab
