// Serial reference vs OpenMP for the data-parallel kernels.
#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "lockscale/fit.hpp"
#include "lockscale/model.hpp"
#include "lockscale/sim.hpp"

using namespace lockscale;

namespace {

std::vector<std::uint32_t> core_range(std::uint32_t n_max) {
  std::vector<std::uint32_t> n(n_max);
  std::iota(n.begin(), n.end(), 1u);
  return n;
}

sim::SimConfig sweep_config() {
  sim::SimConfig cfg;
  cfg.a = 2000.0;
  cfg.s = 358.0;
  cfg.sample = 20'000'000;
  cfg.seed = 42;
  return cfg;
}

std::vector<fit::Observation> fit_points() {
  std::vector<fit::Observation> points;
  for (const auto& p : model::predict_curve_serial(358.0, 1999.0, 28))
    points.push_back({p.cores, p.throughput});
  return points;
}

void BM_SimSweepSerial(benchmark::State& state) {
  const auto n = core_range(static_cast<std::uint32_t>(state.range(0)));
  const auto cfg = sweep_config();
  for (auto _ : state) benchmark::DoNotOptimize(sim::sweep_serial(cfg, n));
}

void BM_SimSweepParallel(benchmark::State& state) {
  const auto n = core_range(static_cast<std::uint32_t>(state.range(0)));
  const auto cfg = sweep_config();
  for (auto _ : state) benchmark::DoNotOptimize(sim::sweep(cfg, n));
}

void BM_GridScanSerial(benchmark::State& state) {
  const auto points = fit_points();
  fit::GridSpec grid;
  grid.steps = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        fit::grid_scan_serial(points, grid, true, 2000.0, fit::Weighting::unweighted));
}

void BM_GridScanParallel(benchmark::State& state) {
  const auto points = fit_points();
  fit::GridSpec grid;
  grid.steps = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(
        fit::grid_scan(points, grid, true, 2000.0, fit::Weighting::unweighted));
}

void BM_PredictCurveSerial(benchmark::State& state) {
  const auto n_max = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(model::predict_curve_serial(358.0, 1999.0, n_max));
}

void BM_PredictCurveParallel(benchmark::State& state) {
  const auto n_max = static_cast<std::uint32_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(model::predict_curve(358.0, 1999.0, n_max));
}

}  // namespace

BENCHMARK(BM_SimSweepSerial)->Arg(8)->Arg(28)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SimSweepParallel)->Arg(8)->Arg(28)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridScanSerial)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_GridScanParallel)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PredictCurveSerial)->Arg(256)->Arg(4096)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_PredictCurveParallel)->Arg(256)->Arg(4096)->Unit(benchmark::kMicrosecond);

BENCHMARK_MAIN();
