#include <doctest.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <vector>

#include "lockscale/bench.hpp"
#include "lockscale/errors.hpp"

using namespace lockscale;
using namespace lockscale::bench;

namespace {

BenchConfig quick(LockKind kind, std::uint32_t threads = 1) {
  BenchConfig cfg;
  cfg.lock_kind = kind;
  cfg.threads = threads;
  cfg.warmup_seconds = 0.05;
  cfg.sample_seconds = 0.25;
  return cfg;
}

double rel_err(double x, double ref) { return std::abs(x - ref) / ref; }

}  // namespace

TEST_CASE("calibration is stable") {
  const auto& cal = cached_calibration();
  CHECK(cal.cycles_per_ns > 0.0);
  CHECK(cal.loop_cycles > 0.0);
  const auto first = measure_calibration();
  const auto second = measure_calibration();
  const double ratio = second.cycles_per_ns / first.cycles_per_ns;
  CHECK(ratio >= 0.95);
  CHECK(ratio <= 1.05);
}

TEST_CASE("spin_cycles matches the cycle clock and wall time") {
  const auto& cal = cached_calibration();
  std::uint64_t chain = 1;
  // Medians, so a single preemption does not decide the outcome.
  std::vector<double> spent, ns;
  for (int trial = 0; trial < 7; ++trial) {
    const auto t0 = std::chrono::steady_clock::now();
    spent.push_back(static_cast<double>(spin_cycles(1'000'000, cal, chain)));
    const auto t1 = std::chrono::steady_clock::now();
    ns.push_back(std::chrono::duration<double, std::nano>(t1 - t0).count());
  }
  std::sort(spent.begin(), spent.end());
  std::sort(ns.begin(), ns.end());
  CHECK(rel_err(spent[3], 1e6) < 0.01);
  CHECK(rel_err(ns[3], 1e6 / cal.cycles_per_ns) < 0.10);
  CHECK(spin_cycles(0, cal, chain) == 0);
}

TEST_CASE("single-thread baseline runs at one section per section length") {
  auto cfg = quick(LockKind::none);
  cfg.section_work_cycles = 500.0;
  const auto r = run_bench(cfg);
  const double expected = r.cycles_per_ns * 1e9 / 500.0;
  CHECK(rel_err(r.total_ops_per_second, expected) < 0.15);
  CHECK(r.per_thread_ops.size() == 1);
  CHECK(r.ops_per_cycle == doctest::Approx(r.total_ops_per_second / (r.cycles_per_ns * 1e9)));
}

TEST_CASE("uncontended CLH costs at most a quarter over no lock") {
  auto none = quick(LockKind::none);
  auto clh = quick(LockKind::clh);
  none.sample_seconds = clh.sample_seconds = 0.5;
  const double base = run_bench(none).total_ops_per_second;
  const double locked = run_bench(clh).total_ops_per_second;
  const double overhead = base / locked - 1.0;
  CHECK(overhead > -0.05);  // measurement noise
  CHECK(overhead < 0.25);
}

TEST_CASE("delay between sections follows the requested mean") {
  auto cfg = quick(LockKind::clh);
  cfg.mean_delay_cycles = 5000.0;
  cfg.sample_seconds = 0.5;
  const auto r = run_bench(cfg);
  CHECK(rel_err(r.measured_mean_delay_cycles, 5000.0) < 0.05);
}

TEST_CASE("every lock kind completes sections") {
  for (auto kind : {LockKind::none, LockKind::clh, LockKind::ticket, LockKind::big_reader,
                    LockKind::elided}) {
    CAPTURE(to_string(kind));
    auto cfg = quick(kind, 2);
    cfg.sample_seconds = 0.1;
    const auto r = run_bench(cfg);
    CHECK(r.total_ops() > 0);
    CHECK(r.per_thread_ops.size() == 2);
  }
  for (auto backend :
       {BackendKind::always_succeed, BackendKind::always_abort, BackendKind::random_abort}) {
    CAPTURE(to_string(backend));
    auto cfg = quick(LockKind::elided, 2);
    cfg.backend = backend;
    cfg.sample_seconds = 0.1;
    CHECK(run_bench(cfg).total_ops() > 0);
  }
}

TEST_CASE("sweep is delay-major with distinct seeds") {
  auto base = quick(LockKind::clh);
  base.warmup_seconds = 0.01;
  base.sample_seconds = 0.05;
  const std::vector<std::uint32_t> threads{1, 2};
  const std::vector<double> delays{0.0, 1000.0};
  const auto rows = sweep_bench(base, threads, delays, cached_calibration());
  REQUIRE(rows.size() == 4);
  CHECK(rows[0].config.mean_delay_cycles == 0.0);
  CHECK(rows[1].config.mean_delay_cycles == 0.0);
  CHECK(rows[2].config.mean_delay_cycles == 1000.0);
  CHECK(rows[0].config.threads == 1);
  CHECK(rows[1].config.threads == 2);
  CHECK(rows[3].config.threads == 2);
  std::set<std::uint64_t> seeds;
  for (const auto& r : rows) seeds.insert(r.config.seed);
  CHECK(seeds.size() == 4);
}

TEST_CASE("single-cell sweep matches run_bench and repeats") {
  auto base = quick(LockKind::clh);
  base.mean_delay_cycles = 2000.0;
  const std::vector<std::uint32_t> threads{1};
  const std::vector<double> delays{2000.0};
  const auto& cal = cached_calibration();
  const auto a = sweep_bench(base, threads, delays, cal);
  const auto b = sweep_bench(base, threads, delays, cal);
  const auto direct = run_bench(base, cal);
  REQUIRE(a.size() == 1);
  CHECK(a[0].config.seed == b[0].config.seed);
  CHECK(rel_err(a[0].total_ops_per_second, b[0].total_ops_per_second) < 0.10);
  CHECK(rel_err(a[0].total_ops_per_second, direct.total_ops_per_second) < 0.10);
}

TEST_CASE("uncontended CLH scales to four threads" * doctest::skip(hardware_threads() < 4)) {
  auto one = quick(LockKind::clh, 1);
  one.mean_delay_cycles = 100.0 * one.section_work_cycles;
  auto four = one;
  four.threads = 4;
  const double x1 = run_bench(one).total_ops_per_second;
  const double x4 = run_bench(four).total_ops_per_second;
  CHECK(rel_err(x4, 4.0 * x1) < 0.15);
}

TEST_CASE("CLH throughput does not rise as the delay shrinks" *
          doctest::skip(hardware_threads() < 4)) {
  auto base = quick(LockKind::clh, 4);
  const std::vector<std::uint32_t> threads{4};
  const std::vector<double> delays{32000, 16000, 8000, 4000, 2000, 1000, 500, 0};
  const auto rows = sweep_bench(base, threads, delays, cached_calibration());
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(rows[i].total_ops_per_second <= rows[i - 1].total_ops_per_second * 1.10);
}

TEST_CASE("more threads than hardware threads is flagged and not pinned") {
  auto cfg = quick(LockKind::clh, hardware_threads() + 1);
  cfg.sample_seconds = 0.1;
  const auto r = run_bench(cfg);
  CHECK(r.oversubscribed);
  CHECK_FALSE(r.pinned);

  const auto single = run_bench(quick(LockKind::none));
  CHECK_FALSE(single.oversubscribed);
}

TEST_CASE("names round-trip and bad configurations are rejected") {
  for (auto kind : {LockKind::none, LockKind::clh, LockKind::ticket, LockKind::big_reader,
                    LockKind::elided})
    CHECK(parse_lock_kind(to_string(kind)) == kind);
  for (auto b : {BackendKind::always_succeed, BackendKind::always_abort, BackendKind::random_abort})
    CHECK(parse_backend_kind(to_string(b)) == b);
  CHECK_THROWS_AS(parse_lock_kind("mcs"), InvalidParameter);

  auto cfg = quick(LockKind::clh);
  cfg.threads = 0;
  CHECK_THROWS_AS(run_bench(cfg), InvalidParameter);
  cfg = quick(LockKind::clh);
  cfg.sample_seconds = 0.0;
  CHECK_THROWS_AS(run_bench(cfg), InvalidParameter);
  cfg = quick(LockKind::elided);
  cfg.abort_probability = 1.5;
  CHECK_THROWS_AS(run_bench(cfg), InvalidParameter);
  cfg = quick(LockKind::elided);
  cfg.retry_threshold = 0;
  CHECK_THROWS_AS(run_bench(cfg), InvalidParameter);
}
