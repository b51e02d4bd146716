#include "lockscale/bench.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <latch>
#include <memory>
#include <string>
#include <thread>
#include <vector>

#include "lockscale/errors.hpp"
#include "lockscale/locks/big_reader_lock.hpp"
#include "lockscale/locks/clh_lock.hpp"
#include "lockscale/locks/elidable_lock.hpp"
#include "lockscale/locks/ticket_lock.hpp"
#include "lockscale/rng.hpp"

#if defined(__x86_64__) || defined(__i386__)
#include <x86intrin.h>
#endif

#if defined(__linux__)
#include <pthread.h>
#include <sched.h>
#endif

namespace lockscale::bench {

namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kChainMul = 6364136223846793005ULL;
constexpr std::uint64_t kChainAdd = 1442695040888963407ULL;

struct alignas(locks::kCacheLine) WorkerSlot {
  std::atomic<std::uint64_t> ops{0};
  std::uint64_t delay_cycles = 0;
  std::uint64_t delays = 0;
  std::uint64_t checksum = 0;
  bool pinned = false;
};

bool pin_current_thread(unsigned cpu_index) {
#if defined(__linux__)
  cpu_set_t allowed;
  CPU_ZERO(&allowed);
  if (sched_getaffinity(0, sizeof(allowed), &allowed) != 0) return false;
  unsigned seen = 0;
  for (int cpu = 0; cpu < CPU_SETSIZE; ++cpu) {
    if (!CPU_ISSET(cpu, &allowed)) continue;
    if (seen++ == cpu_index) {
      cpu_set_t one;
      CPU_ZERO(&one);
      CPU_SET(cpu, &one);
      return pthread_setaffinity_np(pthread_self(), sizeof(one), &one) == 0;
    }
  }
  return false;
#else
  (void)cpu_index;
  return false;
#endif
}

std::chrono::nanoseconds to_duration(double seconds) {
  return std::chrono::nanoseconds(static_cast<std::int64_t>(seconds * 1e9));
}

// Runs `threads` workers. make_section(i) is called on worker i's own
// thread and returns a callable that performs one critical section given
// the worker's busy-work chain.
template <class MakeSection>
BenchResult run_workers(const BenchConfig& cfg, const Calibration& cal, MakeSection make_section) {
  const unsigned hw = hardware_threads();
  BenchResult result;
  result.config = cfg;
  result.cycles_per_ns = cal.cycles_per_ns;
  result.oversubscribed = cfg.threads > hw;

  auto slots = std::make_unique<WorkerSlot[]>(cfg.threads);
  std::atomic<bool> stop{false};
  std::latch ready(static_cast<std::ptrdiff_t>(cfg.threads) + 1);
  const auto section_cycles = static_cast<std::uint64_t>(std::llround(cfg.section_work_cycles));
  const bool pin = cfg.pin_threads && !result.oversubscribed;

  Xoshiro256 root(cfg.seed);
  std::vector<Xoshiro256> streams;
  streams.reserve(cfg.threads);
  for (std::uint32_t i = 0; i < cfg.threads; ++i) streams.push_back(root.split());

  {
    std::vector<std::jthread> workers;
    workers.reserve(cfg.threads);
    for (std::uint32_t i = 0; i < cfg.threads; ++i) {
      workers.emplace_back([&, i] {
        WorkerSlot& slot = slots[i];
        if (pin) slot.pinned = pin_current_thread(i);
        Xoshiro256 rng = streams[i];
        auto section = make_section(i);
        std::uint64_t chain = i + 1;
        std::uint64_t ops = 0;
        std::uint64_t delay_total = 0;
        std::uint64_t delay_count = 0;
        ready.arrive_and_wait();
        while (!stop.load(std::memory_order_relaxed)) {
          section(section_cycles, chain);
          slot.ops.store(++ops, std::memory_order_relaxed);
          if (cfg.mean_delay_cycles > 0.0) {
            const auto d = static_cast<std::uint64_t>(
                std::llround(rng.exponential(cfg.mean_delay_cycles)));
            delay_total += spin_cycles(d, cal, chain);
            ++delay_count;
          }
        }
        slot.delay_cycles = delay_total;
        slot.delays = delay_count;
        slot.checksum = chain;
      });
    }

    ready.arrive_and_wait();
    std::this_thread::sleep_for(to_duration(cfg.warmup_seconds));
    std::vector<std::uint64_t> before(cfg.threads);
    for (std::uint32_t i = 0; i < cfg.threads; ++i) {
      before[i] = slots[i].ops.load(std::memory_order_relaxed);
    }
    const auto t0 = Clock::now();
    std::this_thread::sleep_for(to_duration(cfg.sample_seconds));
    result.per_thread_ops.resize(cfg.threads);
    for (std::uint32_t i = 0; i < cfg.threads; ++i) {
      result.per_thread_ops[i] = slots[i].ops.load(std::memory_order_relaxed) - before[i];
    }
    const auto t1 = Clock::now();
    stop.store(true, std::memory_order_relaxed);
    result.sample_seconds_measured = std::chrono::duration<double>(t1 - t0).count();
  }

  std::uint64_t delay_total = 0;
  std::uint64_t delay_count = 0;
  result.pinned = pin;
  for (std::uint32_t i = 0; i < cfg.threads; ++i) {
    delay_total += slots[i].delay_cycles;
    delay_count += slots[i].delays;
    result.checksum ^= slots[i].checksum;
    result.pinned = result.pinned && slots[i].pinned;
  }
  result.measured_mean_delay_cycles =
      delay_count > 0 ? static_cast<double>(delay_total) / static_cast<double>(delay_count) : 0.0;
  result.total_ops_per_second =
      static_cast<double>(result.total_ops()) / result.sample_seconds_measured;
  result.ops_per_cycle = result.total_ops_per_second / (cal.cycles_per_ns * 1e9);
  return result;
}

template <class Backend>
BenchResult run_elided(const BenchConfig& cfg, const Calibration& cal, Backend& backend) {
  locks::ElidableLock<Backend> lock(backend, cfg.retry_threshold, cfg.spin);
  return run_workers(cfg, cal, [&](std::uint32_t) {
    return [&](std::uint64_t cycles, std::uint64_t& chain) {
      lock.run([&] { spin_cycles(cycles, cal, chain); });
    };
  });
}

}  // namespace

std::string_view to_string(LockKind k) noexcept {
  switch (k) {
    case LockKind::none: return "none";
    case LockKind::clh: return "clh";
    case LockKind::ticket: return "ticket";
    case LockKind::big_reader: return "big-reader";
    case LockKind::elided: return "elided";
  }
  return "?";
}

std::string_view to_string(BackendKind k) noexcept {
  switch (k) {
    case BackendKind::always_succeed: return "succeed";
    case BackendKind::always_abort: return "abort";
    case BackendKind::random_abort: return "random";
  }
  return "?";
}

LockKind parse_lock_kind(std::string_view name) {
  for (auto k : {LockKind::none, LockKind::clh, LockKind::ticket, LockKind::big_reader,
                 LockKind::elided}) {
    if (name == to_string(k)) return k;
  }
  throw InvalidParameter("unknown lock kind: " + std::string(name));
}

BackendKind parse_backend_kind(std::string_view name) {
  for (auto k : {BackendKind::always_succeed, BackendKind::always_abort,
                 BackendKind::random_abort}) {
    if (name == to_string(k)) return k;
  }
  throw InvalidParameter("unknown transaction backend: " + std::string(name));
}

std::uint64_t read_cycles() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  return __rdtsc();
#else
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(Clock::now().time_since_epoch())
          .count());
#endif
}

std::uint64_t spin_cycles(std::uint64_t cycles, const Calibration& cal,
                          std::uint64_t& chain) noexcept {
  if (cycles == 0) return 0;
  const std::uint64_t start = read_cycles();
  // The read that produced `start` costs about one loop iteration.
  const auto entry = static_cast<std::uint64_t>(cal.loop_cycles);
  const auto lead = static_cast<std::uint64_t>(cal.loop_cycles * 1.5);
  const std::uint64_t deadline = start + (cycles > lead ? cycles - lead : 0);
  std::uint64_t x = chain;
  std::uint64_t now = start;
  do {
    x = x * kChainMul + kChainAdd;
    now = read_cycles();
  } while (now < deadline);
  chain = x;
  return now - start + entry;
}

Calibration measure_calibration(std::chrono::milliseconds window) {
  std::uint64_t chain = 1;
  std::uint64_t iterations = 0;
  const auto t0 = Clock::now();
  const std::uint64_t c0 = read_cycles();
  const auto end = t0 + window;
  Clock::time_point t1;
  std::uint64_t c1 = c0;
  do {
    // Same loop body as spin_cycles.
    for (int i = 0; i < 1024; ++i) {
      chain = chain * kChainMul + kChainAdd;
      c1 = read_cycles();
    }
    iterations += 1024;
    t1 = Clock::now();
  } while (t1 < end);
  asm volatile("" : : "r"(chain));
  const double ns = std::chrono::duration<double, std::nano>(t1 - t0).count();
  const auto cycles = static_cast<double>(c1 - c0);
  if (!(ns > 0.0) || !(cycles > 0.0)) throw CalibrationError("cycle counter did not advance");
  return Calibration{cycles / ns, cycles / static_cast<double>(iterations)};
}

Calibration calibrate() {
  constexpr int kMaxSamples = 6;
  std::vector<Calibration> samples;
  for (int i = 0; i < kMaxSamples; ++i) {
    samples.push_back(measure_calibration());
    if (samples.size() < 3) continue;
    std::vector<Calibration> last(samples.end() - 3, samples.end());
    std::sort(last.begin(), last.end(),
              [](const Calibration& x, const Calibration& y) { return x.cycles_per_ns < y.cycles_per_ns; });
    if (last[2].cycles_per_ns <= 1.10 * last[0].cycles_per_ns) return last[1];
  }
  throw CalibrationError("cycle clock unstable: consecutive calibrations disagree by more than 10%");
}

const Calibration& cached_calibration() {
  static const Calibration cal = calibrate();
  return cal;
}

void BenchConfig::validate() const {
  if (threads < 1) throw InvalidParameter("benchmark needs at least one thread");
  if (!(warmup_seconds > 0.0)) throw InvalidParameter("warm-up must be positive");
  if (!(sample_seconds > 0.0)) throw InvalidParameter("sample window must be positive");
  if (!(mean_delay_cycles >= 0.0)) throw InvalidParameter("mean delay must be non-negative");
  if (!(section_work_cycles >= 0.0)) throw InvalidParameter("section work must be non-negative");
  if (!(abort_probability >= 0.0 && abort_probability <= 1.0)) {
    throw InvalidParameter("abort probability must be in [0, 1]");
  }
  if (retry_threshold == 0) throw InvalidParameter("retry threshold must be positive");
}

std::uint64_t BenchResult::total_ops() const noexcept {
  std::uint64_t total = 0;
  for (auto v : per_thread_ops) total += v;
  return total;
}

unsigned hardware_threads() noexcept {
#if defined(__linux__)
  cpu_set_t allowed;
  CPU_ZERO(&allowed);
  if (sched_getaffinity(0, sizeof(allowed), &allowed) == 0) {
    return static_cast<unsigned>(std::max(1, CPU_COUNT(&allowed)));
  }
#endif
  return std::max(1u, std::thread::hardware_concurrency());
}

BenchResult run_bench(const BenchConfig& cfg, const Calibration& cal) {
  cfg.validate();
  switch (cfg.lock_kind) {
    case LockKind::none:
      return run_workers(cfg, cal, [&](std::uint32_t) {
        return [&](std::uint64_t cycles, std::uint64_t& chain) { spin_cycles(cycles, cal, chain); };
      });
    case LockKind::clh: {
      locks::ClhLock lock(cfg.spin);
      return run_workers(cfg, cal, [&](std::uint32_t) {
        return [&](std::uint64_t cycles, std::uint64_t& chain) {
          auto h = lock.acquire();
          spin_cycles(cycles, cal, chain);
          lock.release(h);
        };
      });
    }
    case LockKind::ticket: {
      locks::TicketLock lock(cfg.spin);
      return run_workers(cfg, cal, [&](std::uint32_t) {
        return [&](std::uint64_t cycles, std::uint64_t& chain) {
          auto t = lock.acquire();
          spin_cycles(cycles, cal, chain);
          lock.release(t);
        };
      });
    }
    case LockKind::big_reader: {
      locks::BigReaderLock lock(cfg.threads, cfg.spin);
      return run_workers(cfg, cal, [&](std::uint32_t) {
        const auto slot = lock.register_slot();
        return [&lock, &cal, slot](std::uint64_t cycles, std::uint64_t& chain) {
          lock.read_lock(slot);
          spin_cycles(cycles, cal, chain);
          lock.read_unlock(slot);
        };
      });
    }
    case LockKind::elided: {
      switch (cfg.backend) {
        case BackendKind::always_succeed: {
          locks::AlwaysSucceedBackend backend(cfg.isolation, cfg.spin);
          return run_elided(cfg, cal, backend);
        }
        case BackendKind::always_abort: {
          locks::AlwaysAbortBackend backend(cfg.spin);
          return run_elided(cfg, cal, backend);
        }
        case BackendKind::random_abort: {
          locks::RandomAbortBackend backend(cfg.abort_probability, cfg.seed, cfg.isolation,
                                            cfg.spin);
          return run_elided(cfg, cal, backend);
        }
      }
    }
  }
  throw InvalidParameter("unhandled lock kind");
}

BenchResult run_bench(const BenchConfig& config) { return run_bench(config, cached_calibration()); }

std::vector<BenchResult> sweep_bench(const BenchConfig& base,
                                     std::span<const std::uint32_t> thread_counts,
                                     std::span<const double> delays, const Calibration& cal) {
  std::vector<BenchResult> rows;
  rows.reserve(thread_counts.size() * delays.size());
  for (double delay : delays) {
    for (std::uint32_t threads : thread_counts) {
      BenchConfig cfg = base;
      cfg.threads = threads;
      cfg.mean_delay_cycles = delay;
      cfg.seed = mix_seed(mix_seed(base.seed, threads), std::bit_cast<std::uint64_t>(delay));
      rows.push_back(run_bench(cfg, cal));
    }
  }
  return rows;
}

}  // namespace lockscale::bench
