#include "fklab/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

#include <boost/math/distributions/poisson.hpp>

#include "fklab/error.hpp"

namespace fklab {

namespace {

void require_levy(const KernelSpec& k) {
  if (!k.translation_invariant()) fail(ErrorKind::Unsupported, "Monte Carlo needs a translation-invariant kernel");
}

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::mt19937_64 path_rng(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq sq{splitmix(seed), splitmix(seed ^ splitmix(index + 1)), index};
  return std::mt19937_64(sq);
}

// magnitude sampler for rho(z) 1_{z > eps}
struct JumpSampler {
  const KernelSpec& k;
  double eps, m_near, m_far;

  JumpSampler(const KernelSpec& kk, double e) : k(kk), eps(e) {
    const double a = k.alpha1;
    m_near = k.c1 / a * (std::pow(eps, -a) - std::pow(k.kappa, -a));
    m_far = kernel_tail_integral(k, k.kappa);
  }

  double draw(std::mt19937_64& g) const {
    std::uniform_real_distribution<double> U(0.0, 1.0);
    const double a = k.alpha1;
    if (U(g) * (m_near + m_far) < m_near) {
      const double lo = std::pow(eps, -a), hi = std::pow(k.kappa, -a);
      return std::pow(lo - U(g) * (lo - hi), -1.0 / a);
    }
    if (k.family == KernelFamily::stable_like) return k.kappa * std::pow(1.0 - U(g), -1.0 / a);
    // tempered: u = z^gamma has density e^{-u} u^{1/gamma - 1} on (kappa^gamma, inf)
    const double u0 = std::pow(k.kappa, k.gamma);
    std::exponential_distribution<double> E(1.0);
    for (;;) {
      const double u = u0 + E(g);
      if (U(g) <= std::pow(u / u0, 1.0 / k.gamma - 1.0)) return std::pow(u, 1.0 / k.gamma);
    }
  }
};

template <class F>
void parallel_for(long count, int workers, F&& body) {
  workers = std::max(1, std::min<int>(workers, static_cast<int>(std::max(1L, count))));
  if (workers == 1) {
    for (long i = 0; i < count; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  const long chunk = (count + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const long lo = w * chunk, hi = std::min(count, lo + chunk);
    pool.emplace_back([&, lo, hi] {
      for (long i = lo; i < hi; ++i) body(i);
    });
  }
  for (auto& t : pool) t.join();
}

double ls_slope(const std::vector<double>& x, const std::vector<double>& y, double* intercept = nullptr) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  const double b = sxy / sxx;
  if (intercept) *intercept = my - b * mx;
  return b;
}

}  // namespace

double jump_rate(const KernelSpec& k, double eps) {
  require_levy(k);
  if (!(eps > 0)) fail(ErrorKind::Domain, "cutoff must be positive");
  return 2.0 * kernel_tail_integral(k, eps);
}

double small_jump_variance(const KernelSpec& k, double eps) {
  require_levy(k);
  if (!(eps > 0) || eps > k.kappa) fail(ErrorKind::Domain, "cutoff must lie in (0, kappa]");
  const double a = k.alpha1;
  return 2.0 * k.c1 * std::pow(eps, 2.0 - a) / (2.0 - a);
}

PathSample simulate_path(const KernelSpec& k, const SimScheme& sc, const SimRequest& rq, std::uint64_t index) {
  require_levy(k);
  if (!(rq.t > 0)) fail(ErrorKind::Domain, "simulation horizon must be positive");
  if (!(sc.eps_cut > 0 && sc.eps_cut < k.kappa)) fail(ErrorKind::Parameter, "eps_cut must lie in (0, kappa)");
  if (!(sc.dt > 0)) fail(ErrorKind::Parameter, "dt must be positive");
  auto g = path_rng(sc.seed, index);
  const JumpSampler js(k, sc.eps_cut);
  const double lam = 2.0 * (js.m_near + js.m_far);
  const double sig = std::sqrt(small_jump_variance(k, sc.eps_cut));
  std::normal_distribution<double> N01(0.0, 1.0);
  std::exponential_distribution<double> Exp(lam);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  auto V = [&](double x) { return rq.potential ? eval_potential(*rq.potential, x) : 0.0; };

  PathSample ps;
  ps.index = index;
  ps.checkpoint_integral.assign(rq.checkpoints.size(), 0.0);
  ps.checkpoint_alive.assign(rq.checkpoints.size(), 0);

  double s = 0, x = rq.x0, vx = V(x), I = 0;
  double next_jump = Exp(g);
  size_t cp = 0;
  if (rq.record) ps.events.push_back({0.0, x, false});
  auto flush_checkpoints = [&](double upto) {
    while (cp < rq.checkpoints.size() && rq.checkpoints[cp] <= upto + 1e-15) {
      ps.checkpoint_integral[cp] = I;
      ps.checkpoint_alive[cp] = ps.alive;
      ++cp;
    }
  };
  bool done = false;
  while (!done && s < rq.t) {
    double b = std::min(s + sc.dt, rq.t);
    if (cp < rq.checkpoints.size()) b = std::min(b, rq.checkpoints[cp]);
    const bool jump_now = next_jump < b;
    const double e = jump_now ? next_jump : b;
    const double xm = x + sig * std::sqrt(e - s) * N01(g);
    const double vm = V(xm);
    I += 0.5 * (vx + vm) * (e - s);
    x = xm;
    vx = vm;
    if (jump_now) {
      const double z = js.draw(g);
      x += U(g) < 0.5 ? -z : z;
      vx = V(x);
      ++ps.jumps;
      next_jump += Exp(g);
    }
    s = e;
    if (rq.record) ps.events.push_back({s, x, jump_now});
    if (std::abs(x) > rq.kill_box) {
      ps.alive = false;
      done = true;
    }
    if (ps.exit_time < 0 && !rq.watch.contains(x)) {
      ps.exit_time = s;
      ps.exit_pos = x;
      if (rq.stop_on_exit) done = true;
    }
    if (ps.alive) flush_checkpoints(s);
  }
  // killed or stopped paths keep alive=0 at the remaining checkpoints
  ps.x_end = x;
  ps.integral_V = I;
  return ps;
}

std::vector<PathSample> simulate_paths(const KernelSpec& k, const SimScheme& sc, const SimRequest& rq, long count) {
  if (!std::is_sorted(rq.checkpoints.begin(), rq.checkpoints.end()))
    fail(ErrorKind::Parameter, "checkpoints must be ascending");
  std::vector<PathSample> out(count);
  parallel_for(count, sc.workers, [&](long i) { out[i] = simulate_path(k, sc, rq, static_cast<std::uint64_t>(i)); });
  return out;
}

void write_path_dump(const std::string& path, const std::vector<PathSample>& paths) {
  std::ofstream os(path, std::ios::binary);
  if (!os) fail(ErrorKind::Config, "cannot open " + path);
  for (const auto& p : paths) {
    const std::uint64_t idx = p.index, n = p.events.size();
    os.write(reinterpret_cast<const char*>(&idx), 8);
    os.write(reinterpret_cast<const char*>(&n), 8);
    for (const auto& e : p.events) {
      const unsigned char j = e.jump;
      os.write(reinterpret_cast<const char*>(&e.t), 8);
      os.write(reinterpret_cast<const char*>(&e.x), 8);
      os.write(reinterpret_cast<const char*>(&j), 1);
    }
  }
}

Estimate wilson_interval(long successes, long n, double z) {
  Estimate e;
  e.paths = n;
  if (n <= 0) return e;
  const double p = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double den = 1 + z2 / n;
  const double mid = (p + z2 / (2.0 * n)) / den;
  const double half = z * std::sqrt(p * (1 - p) / n + z2 / (4.0 * n * n)) / den;
  e.estimate = p;
  // the endpoints are exact at 0 and n successes; keep rounding from moving them
  e.ci_low = successes == 0 ? 0.0 : std::max(0.0, mid - half);
  e.ci_high = successes == n ? 1.0 : std::min(1.0, mid + half);
  return e;
}

Estimate mean_interval(const std::vector<double>& v, double z) {
  Estimate e;
  e.paths = static_cast<long>(v.size());
  if (v.empty()) return e;
  const double n = static_cast<double>(v.size());
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double ss = 0;
  for (double a : v) ss += (a - m) * (a - m);
  const double se = v.size() > 1 ? std::sqrt(ss / (n - 1) / n) : 0.0;
  e.estimate = m;
  e.ci_low = m - z * se;
  e.ci_high = m + z * se;
  return e;
}

ExitStats exit_time_stats(const KernelSpec& k, const SimScheme& sc, const std::vector<double>& r_list, long paths,
                          double horizon) {
  require_levy(k);
  ExitStats st;
  st.expected_slope = k.alpha2 + (k.alpha2 - k.alpha1) * k.d / k.alpha1;
  for (double r : r_list) {
    if (!(r > 0)) fail(ErrorKind::Domain, "exit radius must be positive");
    double H = horizon;
    double med = -1;
    for (int attempt = 0; attempt < 2 && med < 0; ++attempt, H *= 4) {
      SimRequest rq;
      rq.t = H;
      rq.watch = {-r, r};
      rq.stop_on_exit = true;
      auto ps = simulate_paths(k, sc, rq, paths);
      std::vector<double> tau;
      tau.reserve(ps.size());
      for (const auto& p : ps) tau.push_back(p.exit_time < 0 ? kInf : p.exit_time);
      const size_t mid = tau.size() / 2;
      std::nth_element(tau.begin(), tau.begin() + mid, tau.end());
      if (std::isfinite(tau[mid])) med = tau[mid];
    }
    if (med < 0) fail(ErrorKind::InsufficientData, "fewer than half the paths exit within the horizon");
    st.r.push_back(r);
    st.median.push_back(med);
  }
  if (st.r.size() >= 2) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < st.r.size(); ++i) {
      lx.push_back(std::log(st.r[i]));
      ly.push_back(std::log(st.median[i]));
    }
    st.slope = ls_slope(lx, ly, &st.intercept);
  }
  double lo = kInf, hi = 0;
  for (size_t i = 0; i < st.r.size(); ++i) {
    const double c = st.median[i] / std::pow(st.r[i], st.expected_slope);
    lo = std::min(lo, c);
    hi = std::max(hi, c);
  }
  st.collapse_ratio = hi / lo;
  return st;
}

void check_window_geometry(const KernelSpec& k, double eps, const BallSpec& B, const BallSpec& D, double t1,
                           double t2, double T) {
  const double gap = std::abs(B.center - D.center) - B.radius - D.radius;
  if (!(eps > 0 && eps < 1.0 / 11)) fail(ErrorKind::Precondition, "eps must lie in (0, 1/11)");
  if (B.radius > eps * k.kappa + 1e-12) fail(ErrorKind::Precondition, "radius of B exceeds eps*kappa");
  if (!(gap > eps * k.kappa)) fail(ErrorKind::Precondition, "dist(B, D) must exceed eps*kappa");
  if (std::abs(B.center - D.center) + B.radius + D.radius > k.kappa)
    fail(ErrorKind::Precondition, "points of B and D must lie within kappa of each other");
  if (!(t1 > 0 && t1 <= t2 && t2 < T)) fail(ErrorKind::Precondition, "window must satisfy 0 < t1 <= t2 < T");
}

std::vector<Estimate> window_exit_probs(const KernelSpec& k, const SimScheme& sc, const BallSpec& B,
                                        const BallSpec& D, double t1, const std::vector<double>& widths, long paths) {
  double wmax = 0;
  for (double w : widths) {
    if (!(w >= 0)) fail(ErrorKind::Domain, "window width must be non-negative");
    wmax = std::max(wmax, w);
  }
  std::vector<Estimate> out;
  if (wmax == 0) {
    for (size_t i = 0; i < widths.size(); ++i) out.push_back(wilson_interval(0, paths));
    return out;
  }
  SimRequest rq;
  rq.x0 = B.center;
  rq.t = t1 + wmax;
  rq.watch = {B.center - B.radius, B.center + B.radius};
  rq.stop_on_exit = true;
  auto ps = simulate_paths(k, sc, rq, paths);
  for (double w : widths) {
    long hits = 0;
    for (const auto& p : ps)
      if (p.exit_time >= t1 && p.exit_time < t1 + w && std::abs(p.exit_pos - D.center) <= D.radius) ++hits;
    auto e = wilson_interval(hits, paths);
    e.seed = sc.seed;
    out.push_back(e);
  }
  return out;
}

Estimate window_exit_prob(const KernelSpec& k, const SimScheme& sc, const BallSpec& B, const BallSpec& D, double t1,
                          double t2, long paths) {
  if (t2 < t1) fail(ErrorKind::Domain, "window end precedes its start");
  return window_exit_probs(k, sc, B, D, t1, {t2 - t1}, paths).front();
}

FkResult fk_estimate(const KernelSpec& k, const PotentialSpec* V, const SimScheme& sc, double x0,
                     const std::vector<double>& times, Interval f_set, double kill_box, long paths) {
  if (times.empty()) fail(ErrorKind::Parameter, "no evaluation times");
  std::vector<double> ts = times;
  std::sort(ts.begin(), ts.end());
  if (!(ts.front() > 0)) fail(ErrorKind::Domain, "evaluation times must be positive");
  SimRequest rq;
  rq.x0 = x0;
  rq.t = ts.back();
  rq.potential = V;
  rq.kill_box = kill_box;
  rq.checkpoints = ts;
  // f(X_t) at intermediate times needs positions; only a full-line f_set is supported there
  const bool full = !std::isfinite(f_set.lo) && !std::isfinite(f_set.hi);
  if (!full && ts.size() > 1) {
    // run one batch per time so that X_t is the terminal position
    FkResult res;
    res.t = ts;
    for (double t : ts) {
      auto r = fk_estimate(k, V, sc, x0, {t}, f_set, kill_box, paths);
      res.value.push_back(r.value.front());
    }
    std::vector<double> ly;
    for (auto& e : res.value) ly.push_back(-std::log(e.estimate));
    res.lambda1 = ts.size() > 1 ? ls_slope(ts, ly) : 0.0;
    return res;
  }
  auto ps = simulate_paths(k, sc, rq, paths);
  FkResult res;
  res.t = ts;
  for (size_t c = 0; c < ts.size(); ++c) {
    std::vector<double> w;
    w.reserve(ps.size());
    for (const auto& p : ps) {
      double v = p.checkpoint_alive[c] ? std::exp(-p.checkpoint_integral[c]) : 0.0;
      if (!full && !f_set.contains(p.x_end)) v = 0.0;
      w.push_back(v);
    }
    auto e = mean_interval(w);
    e.seed = sc.seed;
    res.value.push_back(e);
  }
  if (ts.size() > 1) {
    std::vector<double> ly;
    for (auto& e : res.value) ly.push_back(-std::log(e.estimate));
    res.lambda1 = ls_slope(ts, ly);
  }
  return res;
}

ChainPlan ChainPlan::make(const KernelSpec& k, double x, double eps, double c0) {
  ChainPlan p;
  p.x = x;
  p.kappa = k.kappa;
  p.eps = eps;
  p.alpha1 = k.alpha1;
  p.alpha2 = k.alpha2;
  p.d = k.d;
  p.n = static_cast<long>(std::floor(std::abs(x) / ((1 - 4 * eps) * k.kappa))) + 1;
  for (long i = 0; i <= p.n; ++i) p.centers.push_back(i * x / p.n);
  p.r_D = 2 * eps * k.kappa;
  p.r_Dtilde = eps * k.kappa;
  p.t0 = c0 * std::pow(eps * k.kappa, k.alpha2 + (k.alpha2 - k.alpha1) * k.d / k.alpha1);
  return p;
}

void ChainPlan::check() const {
  if (!(eps > 0 && eps < 1.0 / 11)) fail(ErrorKind::Precondition, "eps must lie in (0, 1/11)");
  const double ax = std::abs(x);
  if (!(ax > kappa * (1 - 5 * eps) * (1 - 4 * eps) / eps))
    fail(ErrorKind::Precondition, "|x| is below the chain validity threshold");
  const double nn = static_cast<double>(n);
  if (!(ax / ((1 - 4 * eps) * kappa) <= nn && nn < ax / ((1 - 5 * eps) * kappa)))
    fail(ErrorKind::Precondition, "chain length outside its bracket");
  for (size_t i = 0; i + 1 < centers.size(); ++i) {
    const double gap = std::abs(centers[i + 1] - centers[i]);
    if (!(gap - 2 * r_D > 2 * eps * kappa)) fail(ErrorKind::Precondition, "consecutive balls closer than 2*eps*kappa");
    if (gap + 2 * r_D > kappa + 1e-12) fail(ErrorKind::Precondition, "consecutive balls farther apart than kappa");
  }
}

ChainBound chain_lower_bound(const ChainPlan& plan, const PotentialSpec* V, double C) {
  const double ax = std::abs(plan.x);
  if (!(ax > plan.kappa * (1 - 5 * plan.eps) * (1 - 4 * plan.eps) / plan.eps))
    fail(ErrorKind::Range, "|x| is below the chain validity threshold");
  ChainBound b;
  const double supV = V ? sup_potential(*V, ax + 2 * plan.eps * plan.kappa) : 0.0;
  b.exponent = -ax / ((1 - 6 * plan.eps) * plan.kappa) * std::log(1 + ax + supV);
  b.links = plan.n;
  for (long i = 1; i <= plan.n; ++i) {
    const double sv = V ? sup_potential(*V, std::abs(plan.centers[i - 1]) + plan.r_D) : 0.0;
    const double num = C * std::pow(plan.eps, plan.d) * std::pow(plan.kappa, -plan.alpha1) * plan.t0;
    b.log_link_product += std::log(num / (plan.n + plan.t0 * sv));
  }
  return b;
}

std::vector<Rrr1Row> rrr1_check(const std::vector<double>& r_list, long terms) {
  std::vector<Rrr1Row> out;
  for (double r : r_list) {
    if (!(r >= 0)) fail(ErrorKind::Domain, "r must be non-negative");
    // small terms first for accuracy
    double s = 0;
    for (long j = terms; j >= 1; --j) s += std::exp(-r / j) / (static_cast<double>(j) * (j + 1.0));
    const double tail = 1.0 / (terms + 1.0);
    const double rhs = std::exp(-1.0) / (r + 1);
    out.push_back({r, s, tail, rhs, s >= rhs});
  }
  return out;
}

double poisson_ks_pvalue(const std::vector<int>& counts, double mu, std::uint64_t seed) {
  if (counts.empty()) fail(ErrorKind::InsufficientData, "no counts");
  boost::math::poisson_distribution<double> P(mu);
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  std::vector<double> u;
  u.reserve(counts.size());
  for (int c : counts) {
    const double lo = c > 0 ? boost::math::cdf(P, c - 1) : 0.0;
    u.push_back(lo + U(g) * boost::math::pdf(P, c));
  }
  std::sort(u.begin(), u.end());
  const double n = static_cast<double>(u.size());
  double D = 0;
  for (size_t i = 0; i < u.size(); ++i) D = std::max({D, (i + 1) / n - u[i], u[i] - i / n});
  const double sn = std::sqrt(n);
  const double lam = (sn + 0.12 + 0.11 / sn) * D;
  if (lam < 0.2) return 1.0;
  double q = 0;
  for (int j = 1; j <= 100; ++j) q += 2 * ((j % 2) ? 1 : -1) * std::exp(-2.0 * j * j * lam * lam);
  return std::clamp(q, 0.0, 1.0);
}

}  // namespace fklab
