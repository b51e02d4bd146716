#pragma once

#include <atomic>
#include <cassert>
#include <cstdint>

#include "lockscale/locks/spin.hpp"

namespace lockscale::locks {

/// FIFO spinlock built from a ticket dispenser and a now-serving counter,
/// each on its own cache line.
class TicketLock {
 public:
  /// Proof of ownership. Transferable: any thread may release it.
  class Ticket {
   public:
    Ticket() = default;
    std::uint32_t number() const noexcept { return number_; }
    bool valid() const noexcept { return valid_; }

   private:
    friend class TicketLock;
    explicit Ticket(std::uint32_t n) noexcept : number_(n), valid_(true) {}
    std::uint32_t number_ = 0;
    bool valid_ = false;
  };

  explicit TicketLock(SpinOptions opts = {}) noexcept : opts_(opts) {}
  TicketLock(const TicketLock&) = delete;
  TicketLock& operator=(const TicketLock&) = delete;

  Ticket acquire() noexcept {
    const std::uint32_t mine = next_ticket_.fetch_add(1, std::memory_order_relaxed);
    SpinWait w(opts_);
    while (now_serving_.load(std::memory_order_acquire) != mine) w.once();
    return Ticket(mine);
  }

  void release(Ticket& t) noexcept {
    assert(t.valid_ && "ticket released twice or never acquired");
    assert(now_serving_.load(std::memory_order_relaxed) == t.number_);
    t.valid_ = false;
    now_serving_.store(t.number_ + 1, std::memory_order_release);
  }

  // BasicLockable, for std::lock_guard and OrderedLockSet.
  void lock() noexcept { (void)acquire(); }
  void unlock() noexcept {
    const std::uint32_t serving = now_serving_.load(std::memory_order_relaxed);
    assert(serving != next_ticket_.load(std::memory_order_relaxed) && "unlock of a free lock");
    now_serving_.store(serving + 1, std::memory_order_release);
  }

  bool is_locked() const noexcept {
    return now_serving_.load(std::memory_order_acquire) !=
           next_ticket_.load(std::memory_order_acquire);
  }

  /// Tickets handed out so far (wraps at 2^32).
  std::uint32_t next_ticket() const noexcept { return next_ticket_.load(std::memory_order_acquire); }
  std::uint32_t now_serving() const noexcept { return now_serving_.load(std::memory_order_acquire); }

 private:
  alignas(kCacheLine) std::atomic<std::uint32_t> next_ticket_{0};
  alignas(kCacheLine) std::atomic<std::uint32_t> now_serving_{0};
  SpinOptions opts_;
};

}  // namespace lockscale::locks
