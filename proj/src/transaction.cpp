#include "lockscale/locks/transaction.hpp"

#include <optional>

#include "lockscale/rng.hpp"

#if defined(LOCKSCALE_WITH_RTM) && defined(__RTM__)
#include <cpuid.h>
#endif

namespace lockscale::locks {

namespace {

struct ThreadTxState {
  const EmulatedBackend* active = nullptr;
  bool subscribed = false;
  std::uint8_t last_abort = 0;
  std::optional<Xoshiro256> rng;
  std::uint64_t rng_seed = 0;
};

thread_local ThreadTxState t_tx;
std::atomic<std::uint64_t> g_thread_streams{0};

Xoshiro256& thread_rng(std::uint64_t seed) {
  if (!t_tx.rng || t_tx.rng_seed != seed) {
    const std::uint64_t stream = g_thread_streams.fetch_add(1, std::memory_order_relaxed);
    t_tx.rng.emplace(mix_seed(seed, stream));
    t_tx.rng_seed = seed;
  }
  return *t_tx.rng;
}

}  // namespace

TxStatus EmulatedBackend::begin() noexcept {
  if (abort_probability_ > 0.0) {
    const bool abort =
        abort_probability_ >= 1.0 || thread_rng(seed_).uniform() < abort_probability_;
    if (abort) {
      t_tx.last_abort = abort_code_;
      return TxStatus::aborted(abort_code_);
    }
  }
  if (isolation_ == Isolation::serialized) serial_.lock();
  t_tx.active = this;
  t_tx.subscribed = false;
  return TxStatus::begun();
}

std::uint32_t EmulatedBackend::subscribe(const std::atomic<std::uint32_t>& word) noexcept {
  if (!t_tx.subscribed) {
    subscribed_.fetch_add(1, std::memory_order_seq_cst);
    t_tx.subscribed = true;
  }
  return word.load(std::memory_order_seq_cst);
}

void EmulatedBackend::finish() noexcept {
  if (t_tx.subscribed) {
    subscribed_.fetch_sub(1, std::memory_order_seq_cst);
    t_tx.subscribed = false;
  }
  t_tx.active = nullptr;
  if (isolation_ == Isolation::serialized) serial_.unlock();
}

void EmulatedBackend::end() noexcept { finish(); }

void EmulatedBackend::abort(std::uint8_t code) noexcept {
  t_tx.last_abort = code;
  finish();
}

bool EmulatedBackend::in_transaction() const noexcept { return t_tx.active == this; }

void EmulatedBackend::quiesce() const noexcept {
  SpinWait w(opts_);
  while (subscribed_.load(std::memory_order_seq_cst) != 0) w.once();
}

std::uint8_t EmulatedBackend::last_abort_code() noexcept { return t_tx.last_abort; }

#if defined(LOCKSCALE_WITH_RTM) && defined(__RTM__)
bool RtmBackend::available() noexcept {
  unsigned eax = 0, ebx = 0, ecx = 0, edx = 0;
  if (!__get_cpuid_count(7, 0, &eax, &ebx, &ecx, &edx)) return false;
  return (ebx & (1u << 11)) != 0;
}
#endif

}  // namespace lockscale::locks
