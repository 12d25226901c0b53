// Serial reference vs OpenMP kernels. The thread-count argument is passed to
// the parallel kernel; the serial variants ignore it.

#include <benchmark/benchmark.h>

#include "rtnq/dephasing.hpp"
#include "rtnq/montecarlo.hpp"
#include "rtnq/noise_model.hpp"

namespace {

using namespace rtnq;

const NoiseParams kBrown{2.0, 1e-4, 1.0, 100};

void BM_GammaCurveSerial(benchmark::State& state) {
  const auto a = sample_switching_rates(kBrown, 1);
  const auto b = sample_switching_rates(kBrown, 2);
  const auto grid = make_tau_grid(3.0, 3001);
  for (auto _ : state) benchmark::DoNotOptimize(reference::gamma_curve(a, b, grid));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}

void BM_GammaCurveOpenMP(benchmark::State& state) {
  const auto a = sample_switching_rates(kBrown, 1);
  const auto b = sample_switching_rates(kBrown, 2);
  const auto grid = make_tau_grid(3.0, 3001);
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(gamma_curve(a, b, grid, threads));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(grid.size()));
}

McOptions mc_options(int threads) {
  McOptions o;
  o.n_trajectories = 20000;
  o.seed = 7;
  o.threads = threads;
  return o;
}

void BM_McDephasingSerial(benchmark::State& state) {
  const auto grid = make_tau_grid(5.0, 50);
  const auto opts = mc_options(1);
  for (auto _ : state) benchmark::DoNotOptimize(reference::mc_dephasing(2.0, grid, opts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(opts.n_trajectories));
}

void BM_McDephasingOpenMP(benchmark::State& state) {
  const auto grid = make_tau_grid(5.0, 50);
  const auto opts = mc_options(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mc_dephasing(2.0, grid, opts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(opts.n_trajectories));
}

void BM_McStateSerial(benchmark::State& state) {
  const NoiseParams p{1.5, 0.1, 10.0, 3};
  const auto a = sample_switching_rates(p, 3);
  const auto b = sample_switching_rates(p, 4);
  const auto grid = make_tau_grid(5.0, 26);
  auto opts = mc_options(1);
  opts.n_trajectories = 5000;
  for (auto _ : state) benchmark::DoNotOptimize(reference::mc_two_qubit_state(a, b, grid, opts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(opts.n_trajectories));
}

void BM_McStateOpenMP(benchmark::State& state) {
  const NoiseParams p{1.5, 0.1, 10.0, 3};
  const auto a = sample_switching_rates(p, 3);
  const auto b = sample_switching_rates(p, 4);
  const auto grid = make_tau_grid(5.0, 26);
  auto opts = mc_options(static_cast<int>(state.range(0)));
  opts.n_trajectories = 5000;
  for (auto _ : state) benchmark::DoNotOptimize(mc_two_qubit_state(a, b, grid, opts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(opts.n_trajectories));
}

void BM_PooledSpectrumSerial(benchmark::State& state) {
  const NoiseParams p{1.5, 1e-4, 1e4, 10000};
  const auto freqs = log_space(1e-2, 1e2, 21);
  for (auto _ : state) benchmark::DoNotOptimize(reference::pooled_ensemble_spectrum(p, freqs, 32, 11));
  state.SetItemsProcessed(state.iterations() * 32);
}

void BM_PooledSpectrumOpenMP(benchmark::State& state) {
  const NoiseParams p{1.5, 1e-4, 1e4, 10000};
  const auto freqs = log_space(1e-2, 1e2, 21);
  const int threads = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(pooled_ensemble_spectrum(p, freqs, 32, 11, threads));
  state.SetItemsProcessed(state.iterations() * 32);
}

}  // namespace

BENCHMARK(BM_GammaCurveSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GammaCurveOpenMP)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_McDephasingSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McDephasingOpenMP)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_McStateSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_McStateOpenMP)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_PooledSpectrumSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PooledSpectrumOpenMP)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
