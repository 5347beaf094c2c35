#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>
#include <vector>

#include "conflab/kernels.hpp"
#include "conflab/linalg.hpp"

namespace {

using namespace conflab;

Cocycle family(int which) {
  const auto base = BaseSystem::rotation((std::sqrt(5.0) - 1.0) / 2.0);
  if (which == 0) return Cocycle(base, std::make_shared<RotationScaleGenerator>(1.2));
  return Cocycle(base, std::make_shared<SchrodingerGenerator>(5.0));
}

void zeta_functional(std::span<const double> lam, std::span<double> out) { out[0] = zeta_from_logs(lam); }

// args: family, grid size, horizon
template <auto Sweep>
void run_sweep(benchmark::State& state) {
  const Cocycle a = family(static_cast<int>(state.range(0)));
  const auto points = sample_grid(a.base(), static_cast<int>(state.range(1)));
  const std::vector<int> horizon{static_cast<int>(state.range(2))};
  for (auto _ : state) {
    auto stats = Sweep(a, points, horizon, 1, zeta_functional);
    benchmark::DoNotOptimize(stats.max.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(1) * state.range(2));
}

void args(benchmark::internal::Benchmark* b) {
  for (int fam : {0, 1})
    for (int grid : {256, 1024}) b->Args({fam, grid, 500});
  b->Unit(benchmark::kMillisecond);
}

}  // namespace

BENCHMARK(run_sweep<kernels::serial::sweep>)->Name("sweep/serial")->Apply(args);
BENCHMARK(run_sweep<kernels::parallel::sweep>)->Name("sweep/parallel")->Apply(args);

BENCHMARK_MAIN();
