#include <benchmark/benchmark.h>

#include "fklab/discretize.hpp"
#include "fklab/montecarlo.hpp"
#include "fklab/rates.hpp"
#include "fklab/spectral.hpp"

using namespace fklab;

namespace {

KernelSpec kernel(double alpha) {
  KernelSpec k;
  k.alpha1 = k.alpha2 = alpha;
  return k;
}

void BM_Assemble(benchmark::State& st) {
  const PotentialSpec V = make_power(2);
  const Grid g = Grid::make(10, static_cast<int>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(assemble_generator(kernel(1), &V, g).A.data());
}
BENCHMARK(BM_Assemble)->Arg(201)->Arg(401)->Arg(801)->Unit(benchmark::kMillisecond);

void BM_DenseSpectrum(benchmark::State& st) {
  const PotentialSpec V = make_power(2);
  const auto as = assemble_generator(kernel(1), &V, Grid::make(10, static_cast<int>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(solve_spectrum(as, 4).eigenvalues.data());
}
BENCHMARK(BM_DenseSpectrum)->Arg(201)->Arg(401)->Unit(benchmark::kMillisecond);

void BM_Semigroup(benchmark::State& st) {
  const PotentialSpec V = make_power(2);
  const auto as = assemble_generator(kernel(1), &V, Grid::make(10, static_cast<int>(st.range(0))));
  for (auto _ : st) benchmark::DoNotOptimize(semigroup_kernel(as, 1.0).p.data());
}
BENCHMARK(BM_Semigroup)->Arg(201)->Arg(401)->Unit(benchmark::kMillisecond);

void BM_Paths(benchmark::State& st) {
  const PotentialSpec V = make_power(2);
  SimScheme sc;
  sc.eps_cut = 0.01;
  sc.dt = 1e-3;
  SimRequest rq;
  rq.t = 1.0;
  rq.potential = &V;
  const KernelSpec k = kernel(1);
  for (auto _ : st) benchmark::DoNotOptimize(simulate_paths(k, sc, rq, st.range(0)).data());
  st.SetItemsProcessed(st.iterations() * st.range(0));
}
BENCHMARK(BM_Paths)->Arg(1000)->Unit(benchmark::kMillisecond);

void BM_Slicing(benchmark::State& st) {
  PotentialSpec p = make_valley(3, 0.5, make_power(2));
  p.radius_law = ValleyRadiusLaw::exp_log;
  const RateBundle b(kernel(0.5), p, 0.05);
  for (auto _ : st) benchmark::DoNotOptimize(slicing_schedule(b, 0.01).n0);
}
BENCHMARK(BM_Slicing)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
