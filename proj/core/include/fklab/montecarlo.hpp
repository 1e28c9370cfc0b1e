#pragma once
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "fklab/model.hpp"

namespace fklab {

struct SimScheme {
  double eps_cut = 1e-3;
  double dt = 1e-4;
  std::uint64_t seed = 20240601;
  int workers = 1;
};

// large-jump intensity (both signs) and small-jump variance rate of a Levy kernel
double jump_rate(const KernelSpec& k, double eps);
double small_jump_variance(const KernelSpec& k, double eps);

struct Interval {
  double lo, hi;
  bool contains(double x) const { return x >= lo && x <= hi; }
};

struct Event {
  double t, x;  // position right after time t
  bool jump;
};

struct PathSample {
  std::uint64_t index = 0;
  double x_end = 0;
  double integral_V = 0;
  int jumps = 0;
  bool alive = true;       // never left the kill box
  double exit_time = -1;   // first exit of the watched ball (if any)
  double exit_pos = 0;
  std::vector<double> checkpoint_integral;  // int_0^{t_k} V for each requested checkpoint
  std::vector<char> checkpoint_alive;
  std::vector<Event> events;                // only when recording
};

struct SimRequest {
  double x0 = 0;
  double t = 1;
  const PotentialSpec* potential = nullptr;  // nullptr: V = 0
  double kill_box = kInf;                    // killed once |X| > kill_box
  Interval watch{-kInf, kInf};               // stop at first exit when stop_on_exit
  bool stop_on_exit = false;
  std::vector<double> checkpoints;
  bool record = false;
};

// one path, reproducible from (seed, index)
PathSample simulate_path(const KernelSpec& k, const SimScheme& sc, const SimRequest& rq, std::uint64_t index);
std::vector<PathSample> simulate_paths(const KernelSpec& k, const SimScheme& sc, const SimRequest& rq, long count);

// binary event dump: per path {u64 index, u64 n_events, n * (f64 t, f64 x, u8 jump)}
void write_path_dump(const std::string& path, const std::vector<PathSample>& paths);

struct Estimate {
  double estimate = 0, ci_low = 0, ci_high = 0;
  long paths = 0;
  std::uint64_t seed = 0;
};
Estimate wilson_interval(long successes, long n, double z = 1.959963984540054);
Estimate mean_interval(const std::vector<double>& v, double z = 1.959963984540054);

struct ExitStats {
  std::vector<double> r, median;
  double slope = 0, intercept = 0;
  double collapse_ratio = 0;  // max/min of median / r^slope_expected
  double expected_slope = 0;
};
ExitStats exit_time_stats(const KernelSpec& k, const SimScheme& sc, const std::vector<double>& r_list, long paths,
                          double horizon = 1.0);

struct BallSpec {
  double center, radius;
};
// constraints of the window-exit lemma; throws Precondition naming the failing one
void check_window_geometry(const KernelSpec& k, double eps, const BallSpec& B, const BallSpec& D, double t1,
                           double t2, double T);
Estimate window_exit_prob(const KernelSpec& k, const SimScheme& sc, const BallSpec& B, const BallSpec& D, double t1,
                          double t2, long paths);
// several windows from one batch of paths; every window is [t1, t1 + w]
std::vector<Estimate> window_exit_probs(const KernelSpec& k, const SimScheme& sc, const BallSpec& B,
                                        const BallSpec& D, double t1, const std::vector<double>& widths, long paths);

struct FkResult {
  std::vector<double> t;
  std::vector<Estimate> value;
  double lambda1 = 0;  // minus the slope of log value over t
};
// E^x[exp(-int V) 1_{X_t in f_set}] with killing outside kill_box
FkResult fk_estimate(const KernelSpec& k, const PotentialSpec* V, const SimScheme& sc, double x0,
                     const std::vector<double>& times, Interval f_set, double kill_box, long paths);

struct ChainPlan {
  double x = 0;
  double kappa = 1, eps = 0.05;
  double alpha1 = 1, alpha2 = 1;
  int d = 1;
  long n = 0;
  std::vector<double> centers;
  double r_D = 0, r_Dtilde = 0;
  double t0 = 0;

  static ChainPlan make(const KernelSpec& k, double x, double eps, double c0 = 0.1);
  // throws Precondition when a geometric constraint fails
  void check() const;
};

struct ChainBound {
  double exponent = 0;       // -(1/((1-6e)k)) |x| log(1 + |x| + sup V)
  double log_link_product = 0;
  long links = 0;
};
ChainBound chain_lower_bound(const ChainPlan& plan, const PotentialSpec* V, double C = 1.0);

struct Rrr1Row {
  double r, sum, tail_bound, rhs;
  bool holds;
};
std::vector<Rrr1Row> rrr1_check(const std::vector<double>& r_list, long terms = 1000000);

// Kolmogorov-Smirnov p-value of integer counts against Poisson(mu), with a continuity-randomised PIT
double poisson_ks_pvalue(const std::vector<int>& counts, double mu, std::uint64_t seed);

}  // namespace fklab
