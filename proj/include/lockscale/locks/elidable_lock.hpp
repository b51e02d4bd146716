#pragma once

#include <atomic>
#include <cstdint>
#include <utility>

#include "lockscale/errors.hpp"
#include "lockscale/locks/clh_lock.hpp"
#include "lockscale/locks/spin.hpp"
#include "lockscale/locks/transaction.hpp"

namespace lockscale::locks {

struct ElisionStats {
  std::uint64_t started = 0;    ///< transaction attempts (calls to begin)
  std::uint64_t committed = 0;  ///< sections completed inside a transaction
  std::uint64_t aborted = 0;    ///< attempts that did not run the body
  std::uint64_t fallbacks = 0;  ///< sections completed under the fallback lock
  std::uint64_t lock_held_aborts = 0;  ///< aborts with code kAbortLockHeld

  friend bool operator==(const ElisionStats&, const ElisionStats&) = default;
};

/// Default number of failed transaction attempts before falling back.
inline constexpr unsigned kDefaultRetryThreshold = 3;

/// A lock whose critical sections are first attempted as transactions that
/// merely observe the lock free, falling back to acquiring the lock after
/// retry_threshold failed attempts.
///
///   loop:  begin; on failure count the attempt, give up at the threshold,
///          otherwise wait for the lock word to clear and retry
///   then:  if started and the lock word is taken, abort with 'L'
///          (which counts as a failed attempt); if given up, take the lock
///   exit:  commit if inside a transaction, otherwise release the lock
///
/// The lock word has three values: free, acquiring (a fallback holder owns
/// the fallback lock and is waiting for subscribed transactions to drain)
/// and held (the fallback holder is inside its section).
template <TransactionBackend Backend, class Fallback = ClhLock>
class ElidableLock {
 public:
  static constexpr std::uint32_t kFree = 0;
  static constexpr std::uint32_t kAcquiring = 1;
  static constexpr std::uint32_t kHeld = 2;

  explicit ElidableLock(Backend& backend, unsigned retry_threshold = kDefaultRetryThreshold,
                        SpinOptions opts = {})
      : backend_(backend), retry_threshold_(retry_threshold), fallback_(opts), opts_(opts) {
    if (retry_threshold == 0) throw InvalidParameter("retry threshold must be positive");
  }

  ElidableLock(const ElidableLock&) = delete;
  ElidableLock& operator=(const ElidableLock&) = delete;

  /// Runs body exactly once, either transactionally or under the fallback
  /// lock, and returns its result.
  template <class Body>
  decltype(auto) run(Body&& body) {
    enter();
    struct Exit {
      ElidableLock& self;
      ~Exit() { self.leave(); }
    } exit{*this};
    return std::forward<Body>(body)();
  }

  ElisionStats snapshot_stats() const noexcept {
    ElisionStats s;
    s.started = started_.load(std::memory_order_relaxed);
    s.committed = committed_.load(std::memory_order_relaxed);
    s.aborted = aborted_.load(std::memory_order_relaxed);
    s.fallbacks = fallbacks_.load(std::memory_order_relaxed);
    s.lock_held_aborts = lock_held_aborts_.load(std::memory_order_relaxed);
    return s;
  }

  /// True while a fallback holder is executing its section.
  bool fallback_in_section() const noexcept {
    return lock_word_.load(std::memory_order_acquire) == kHeld;
  }
  /// True while the current thread runs a section transactionally.
  bool in_transaction() const noexcept { return backend_.in_transaction(); }

  unsigned retry_threshold() const noexcept { return retry_threshold_; }
  Backend& backend() noexcept { return backend_; }

  /// The fallback lock itself, for callers that need to take it directly
  /// (which makes concurrent transactions abort with 'L').
  void lock_fallback() {
    fallback_.lock();
    publish_held();
  }
  void unlock_fallback() {
    lock_word_.store(kFree, std::memory_order_release);
    fallback_.unlock();
  }

 private:
  [[gnu::always_inline]] inline void enter() {
    unsigned attempts = 0;
    for (;;) {
      started_.fetch_add(1, std::memory_order_relaxed);
      TxStatus status = backend_.begin();
      if (status.started) {
        if (backend_.subscribe(lock_word_) == kFree) return;
        backend_.abort(kAbortLockHeld);
        status = TxStatus::aborted(kAbortLockHeld);
      }
      aborted_.fetch_add(1, std::memory_order_relaxed);
      if (status.code == kAbortLockHeld) lock_held_aborts_.fetch_add(1, std::memory_order_relaxed);
      if (++attempts >= retry_threshold_) break;
      SpinWait w(opts_);
      while (lock_word_.load(std::memory_order_acquire) != kFree) w.once();
    }
    lock_fallback();
    fallbacks_.fetch_add(1, std::memory_order_relaxed);
  }

  void leave() noexcept {
    if (backend_.in_transaction()) {
      backend_.end();
      committed_.fetch_add(1, std::memory_order_relaxed);
    } else {
      unlock_fallback();
    }
  }

  void publish_held() {
    lock_word_.store(kAcquiring, std::memory_order_seq_cst);
    backend_.quiesce();
    lock_word_.store(kHeld, std::memory_order_release);
  }

  Backend& backend_;
  const unsigned retry_threshold_;
  Fallback fallback_;
  SpinOptions opts_;
  alignas(kCacheLine) std::atomic<std::uint32_t> lock_word_{kFree};
  alignas(kCacheLine) std::atomic<std::uint64_t> started_{0};
  std::atomic<std::uint64_t> committed_{0};
  std::atomic<std::uint64_t> aborted_{0};
  std::atomic<std::uint64_t> fallbacks_{0};
  std::atomic<std::uint64_t> lock_held_aborts_{0};
};

}  // namespace lockscale::locks
