#pragma once

// Transaction backends for lock elision.
//
// A backend provides begin/end/abort/in_transaction in the style of Intel
// RTM, plus two hooks for the fallback-lock word:
//   subscribe(word)  read the lock word inside the transaction, adding it to
//                    the read set, and return the observed value;
//   quiesce()        called by a fallback holder after it has published the
//                    lock word and before it enters its section.
// In hardware, the holder's write to a subscribed word aborts every reader
// and quiesce() is empty. The emulated backends cannot roll a body back, so
// they count subscribed transactions and quiesce() waits for them to
// finish. Emulated aborts are decided in begin() or by an explicit abort()
// before the body runs; a body that has started always commits.

#include <atomic>
#include <concepts>
#include <cstdint>
#include <string_view>

#include "lockscale/locks/spin.hpp"
#include "lockscale/locks/ticket_lock.hpp"

#if defined(LOCKSCALE_WITH_RTM) && defined(__RTM__)
#include <immintrin.h>
#endif

namespace lockscale::locks {

/// Abort code for a transaction that found the fallback lock taken.
inline constexpr std::uint8_t kAbortLockHeld = 'L';
/// Abort code of the always-abort backend.
inline constexpr std::uint8_t kAbortForced = 'F';
/// Abort code of the randomized backend.
inline constexpr std::uint8_t kAbortRandom = 'R';

struct TxStatus {
  bool started = false;
  std::uint8_t code = 0;  ///< abort code when !started

  static constexpr TxStatus begun() noexcept { return {true, 0}; }
  static constexpr TxStatus aborted(std::uint8_t code) noexcept { return {false, code}; }
};

template <class B>
concept TransactionBackend =
    requires(B b, const B cb, const std::atomic<std::uint32_t>& word, std::uint8_t code) {
      { b.begin() } -> std::same_as<TxStatus>;
      b.end();
      b.abort(code);
      { cb.in_transaction() } -> std::convertible_to<bool>;
      { b.subscribe(word) } -> std::convertible_to<std::uint32_t>;
      b.quiesce();
    };

/// How emulated transactions are isolated from each other.
enum class Isolation : std::uint8_t {
  /// Transactions run one at a time; safe for bodies that share data.
  serialized,
  /// Transactions run concurrently; only for bodies on disjoint data, the
  /// case where hardware transactions never conflict.
  disjoint,
};

/// Software stand-in for a transactional memory. begin() aborts with
/// probability abort_probability, otherwise the transaction starts.
class EmulatedBackend {
 public:
  EmulatedBackend(double abort_probability, std::uint8_t abort_code,
                  Isolation isolation = Isolation::serialized, std::uint64_t seed = 0,
                  SpinOptions opts = {}) noexcept
      : abort_probability_(abort_probability),
        abort_code_(abort_code),
        isolation_(isolation),
        seed_(seed),
        serial_(opts),
        opts_(opts) {}

  EmulatedBackend(const EmulatedBackend&) = delete;
  EmulatedBackend& operator=(const EmulatedBackend&) = delete;

  TxStatus begin() noexcept;
  void end() noexcept;
  void abort(std::uint8_t code) noexcept;
  bool in_transaction() const noexcept;
  std::uint32_t subscribe(const std::atomic<std::uint32_t>& word) noexcept;
  void quiesce() const noexcept;

  double abort_probability() const noexcept { return abort_probability_; }
  Isolation isolation() const noexcept { return isolation_; }

  /// Code of the most recent abort on the calling thread (any backend).
  static std::uint8_t last_abort_code() noexcept;

 private:
  void finish() noexcept;

  const double abort_probability_;
  const std::uint8_t abort_code_;
  const Isolation isolation_;
  const std::uint64_t seed_;
  TicketLock serial_;
  alignas(kCacheLine) std::atomic<std::uint32_t> subscribed_{0};
  SpinOptions opts_;
};

class AlwaysSucceedBackend : public EmulatedBackend {
 public:
  explicit AlwaysSucceedBackend(Isolation isolation = Isolation::serialized, SpinOptions opts = {})
      : EmulatedBackend(0.0, 0, isolation, 0, opts) {}
};

class AlwaysAbortBackend : public EmulatedBackend {
 public:
  explicit AlwaysAbortBackend(SpinOptions opts = {})
      : EmulatedBackend(1.0, kAbortForced, Isolation::serialized, 0, opts) {}
};

class RandomAbortBackend : public EmulatedBackend {
 public:
  explicit RandomAbortBackend(double p, std::uint64_t seed = 0,
                              Isolation isolation = Isolation::serialized, SpinOptions opts = {})
      : EmulatedBackend(p, kAbortRandom, isolation, seed, opts) {}
};

static_assert(TransactionBackend<EmulatedBackend>);

#if defined(LOCKSCALE_WITH_RTM) && defined(__RTM__)
/// Intel RTM. Every call must inline into the frame that runs the body,
/// because an abort resumes at the _xbegin of that frame.
class RtmBackend {
 public:
  [[gnu::always_inline]] TxStatus begin() noexcept {
    const unsigned status = _xbegin();
    if (status == _XBEGIN_STARTED) return TxStatus::begun();
    return TxStatus::aborted((status & _XABORT_EXPLICIT) ? _XABORT_CODE(status) : 0);
  }
  [[gnu::always_inline]] void end() noexcept { _xend(); }
  [[gnu::always_inline]] void abort(std::uint8_t code) noexcept {
    if (code == kAbortLockHeld) _xabort(kAbortLockHeld);
    _xabort(0xff);
  }
  [[gnu::always_inline]] bool in_transaction() const noexcept { return _xtest() != 0; }
  [[gnu::always_inline]] std::uint32_t subscribe(const std::atomic<std::uint32_t>& word) noexcept {
    return word.load(std::memory_order_relaxed);
  }
  void quiesce() const noexcept {}

  /// True when the CPU advertises RTM.
  static bool available() noexcept;
};
static_assert(TransactionBackend<RtmBackend>);
#endif

}  // namespace lockscale::locks
