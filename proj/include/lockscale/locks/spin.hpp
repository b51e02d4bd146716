#pragma once

#include <cstddef>
#include <cstdint>
#include <string_view>
#include <thread>

#if defined(__x86_64__) || defined(__i386__)
#include <immintrin.h>
#endif

#ifndef LOCKSCALE_CACHE_LINE
#define LOCKSCALE_CACHE_LINE 64
#endif

namespace lockscale::locks {

/// Padding granularity for lock state words.
inline constexpr std::size_t kCacheLine = LOCKSCALE_CACHE_LINE;

/// CPU hint issued on each spin iteration.
enum class SpinPolicy : std::uint8_t { none, pause, yield };

std::string_view to_string(SpinPolicy p) noexcept;
/// Throws InvalidParameter on unknown names.
SpinPolicy parse_spin_policy(std::string_view name);

struct SpinOptions {
  SpinPolicy policy = SpinPolicy::pause;
  /// After this many iterations every further iteration yields the CPU, so
  /// spinning stays bounded even when waiters outnumber hardware threads.
  std::uint32_t yield_after = 128;
};

inline void cpu_relax() noexcept {
#if defined(__x86_64__) || defined(__i386__)
  _mm_pause();
#elif defined(__aarch64__)
  asm volatile("yield" ::: "memory");
#endif
}

class SpinWait {
 public:
  explicit SpinWait(SpinOptions opts = {}) noexcept : opts_(opts) {}

  void once() noexcept {
    if (iterations_ >= opts_.yield_after) {
      std::this_thread::yield();
      return;
    }
    ++iterations_;
    switch (opts_.policy) {
      case SpinPolicy::none:
        break;
      case SpinPolicy::pause:
        cpu_relax();
        break;
      case SpinPolicy::yield:
        std::this_thread::yield();
        break;
    }
  }

  std::uint32_t iterations() const noexcept { return iterations_; }

 private:
  SpinOptions opts_;
  std::uint32_t iterations_ = 0;
};

/// Spins until pred() holds.
template <class Pred>
void spin_until(Pred&& pred, SpinOptions opts = {}) {
  SpinWait w(opts);
  while (!pred()) w.once();
}

}  // namespace lockscale::locks
