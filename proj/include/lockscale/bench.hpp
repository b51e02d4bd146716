#pragma once

// Closed-loop lock contention microbenchmark on real threads. Every worker
// repeatedly runs a critical section of calibrated busy work under the
// lock being measured, then busy-waits an exponentially distributed think
// time. Completions are counted per thread and sampled over a window that
// follows a warm-up period.

#include <chrono>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "lockscale/locks/spin.hpp"
#include "lockscale/locks/transaction.hpp"

namespace lockscale::bench {

enum class LockKind { none, clh, ticket, big_reader, elided };
enum class BackendKind { always_succeed, always_abort, random_abort };

std::string_view to_string(LockKind k) noexcept;
std::string_view to_string(BackendKind k) noexcept;
LockKind parse_lock_kind(std::string_view name);
BackendKind parse_backend_kind(std::string_view name);

/// Relation between the cycle counter and the monotonic clock, plus the
/// cost of one iteration of the busy loop, both measured.
struct Calibration {
  double cycles_per_ns = 1.0;
  double loop_cycles = 1.0;
};

/// Raw cycle counter: the TSC on x86, the monotonic clock in ns elsewhere.
std::uint64_t read_cycles() noexcept;

/// One calibration sample over at least `window` of wall time.
Calibration measure_calibration(std::chrono::milliseconds window = std::chrono::milliseconds(100));

/// Takes calibration samples until three consecutive ones agree within 10%
/// and returns their median. Throws CalibrationError if that does not
/// happen within a handful of attempts.
Calibration calibrate();

/// calibrate(), computed once per process.
const Calibration& cached_calibration();

/// Busy-works for `cycles` cycles on a dependent multiply chain folded into
/// `chain`. Returns the cycles actually spent, counting the initial clock
/// read. The deadline is pulled in by that read plus half a loop iteration
/// so the expected overshoot cancels.
std::uint64_t spin_cycles(std::uint64_t cycles, const Calibration& cal, std::uint64_t& chain) noexcept;

/// Default critical-section length in cycles.
inline constexpr double kDefaultSectionCycles = 360.0;

struct BenchConfig {
  LockKind lock_kind = LockKind::clh;
  BackendKind backend = BackendKind::always_succeed;
  double abort_probability = 0.5;  ///< for BackendKind::random_abort
  locks::Isolation isolation = locks::Isolation::disjoint;
  unsigned retry_threshold = 3;
  std::uint32_t threads = 1;
  double mean_delay_cycles = 0.0;
  double section_work_cycles = kDefaultSectionCycles;
  double warmup_seconds = 2.0;
  double sample_seconds = 1.0;
  std::uint64_t seed = 1;
  bool pin_threads = true;
  locks::SpinOptions spin{};

  void validate() const;
};

struct BenchResult {
  BenchConfig config;
  double total_ops_per_second = 0.0;
  /// Completions per cycle, total_ops_per_second / (cycles_per_ns * 1e9).
  double ops_per_cycle = 0.0;
  std::vector<std::uint64_t> per_thread_ops;  ///< within the sample window
  double measured_mean_delay_cycles = 0.0;
  double cycles_per_ns = 0.0;
  double sample_seconds_measured = 0.0;
  bool oversubscribed = false;
  bool pinned = false;
  std::uint64_t checksum = 0;

  std::uint64_t total_ops() const noexcept;
};

/// Hardware threads usable by this process.
unsigned hardware_threads() noexcept;

BenchResult run_bench(const BenchConfig& config, const Calibration& cal);
BenchResult run_bench(const BenchConfig& config);

/// Cross product in delay-major order: for each delay, every thread count.
/// Each cell gets a seed derived from the base seed and its coordinates.
std::vector<BenchResult> sweep_bench(const BenchConfig& base,
                                     std::span<const std::uint32_t> thread_counts,
                                     std::span<const double> delays, const Calibration& cal);

}  // namespace lockscale::bench
