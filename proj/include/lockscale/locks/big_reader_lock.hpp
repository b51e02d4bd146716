#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>

#include "lockscale/errors.hpp"
#include "lockscale/locks/spin.hpp"
#include "lockscale/locks/ticket_lock.hpp"

namespace lockscale::locks {

/// Store tracer that compiles to nothing.
struct NoStoreTrace {
  static constexpr std::size_t kWriterPath = static_cast<std::size_t>(-1);
  void on_store(std::size_t /*slot*/, const void* /*addr*/) noexcept {}
};

/// Reader-writer lock with one padded reader flag per registered thread.
///
/// A reader sets its own flag and then checks the writer flag; a writer
/// raises the writer flag and waits for every reader flag to drop. The
/// uncontended read path therefore stores only to the reader's own slot.
/// Both sides use sequentially consistent store-then-load, which is what
/// makes the two flags exclude each other.
///
/// Trace receives every store the lock performs, tagged with the slot whose
/// read path issued it (or kWriterPath). Tests use it to check locality.
template <class Trace = NoStoreTrace>
class BasicBigReaderLock {
 public:
  static constexpr std::size_t kWriterPath = NoStoreTrace::kWriterPath;

  class Slot {
   public:
    std::size_t index() const noexcept { return index_; }

   private:
    friend class BasicBigReaderLock;
    explicit Slot(std::size_t i) noexcept : index_(i) {}
    std::size_t index_;
  };

  explicit BasicBigReaderLock(std::size_t capacity, SpinOptions opts = {}, Trace trace = {})
      : capacity_(capacity),
        slots_(std::make_unique<ReaderSlot[]>(capacity)),
        writer_mutex_(opts),
        opts_(opts),
        trace_(std::move(trace)) {
    if (capacity == 0) throw InvalidParameter("big reader lock needs at least one slot");
  }

  BasicBigReaderLock(const BasicBigReaderLock&) = delete;
  BasicBigReaderLock& operator=(const BasicBigReaderLock&) = delete;

  /// Claims the next free reader slot; UsageError once all are taken.
  Slot register_slot() {
    const std::size_t i = registered_.fetch_add(1, std::memory_order_acq_rel);
    if (i >= capacity_) {
      registered_.fetch_sub(1, std::memory_order_acq_rel);
      throw UsageError("big reader lock has no free slot (capacity " +
                       std::to_string(capacity_) + ")");
    }
    return Slot(i);
  }

  /// Slot by index; UsageError unless it has been registered.
  Slot slot(std::size_t index) const {
    if (index >= registered_.load(std::memory_order_acquire)) {
      throw UsageError("big reader slot " + std::to_string(index) + " is not registered");
    }
    return Slot(index);
  }

  void read_lock(Slot s) {
    check(s);
    std::atomic<bool>& flag = slots_[s.index_].active;
    for (;;) {
      trace_.on_store(s.index_, &flag);
      flag.store(true, std::memory_order_seq_cst);
      if (!writer_.load(std::memory_order_seq_cst)) return;
      trace_.on_store(s.index_, &flag);
      flag.store(false, std::memory_order_release);
      SpinWait w(opts_);
      while (writer_.load(std::memory_order_acquire)) w.once();
    }
  }

  void read_unlock(Slot s) {
    check(s);
    std::atomic<bool>& flag = slots_[s.index_].active;
    trace_.on_store(s.index_, &flag);
    flag.store(false, std::memory_order_release);
  }

  void write_lock() {
    writer_mutex_.lock();
    trace_.on_store(kWriterPath, &writer_);
    writer_.store(true, std::memory_order_seq_cst);
    const std::size_t n = registered_.load(std::memory_order_acquire);
    for (std::size_t i = 0; i < n; ++i) {
      SpinWait w(opts_);
      while (slots_[i].active.load(std::memory_order_seq_cst)) w.once();
    }
  }

  void write_unlock() {
    trace_.on_store(kWriterPath, &writer_);
    writer_.store(false, std::memory_order_release);
    writer_mutex_.unlock();
  }

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t registered() const noexcept { return registered_.load(std::memory_order_acquire); }
  bool write_locked() const noexcept { return writer_.load(std::memory_order_acquire); }

  /// Address range of a slot's state, for locality checks.
  const void* slot_address(std::size_t index) const noexcept { return &slots_[index]; }
  static constexpr std::size_t slot_size() noexcept { return sizeof(ReaderSlot); }

  Trace& trace() noexcept { return trace_; }

 private:
  struct alignas(kCacheLine) ReaderSlot {
    std::atomic<bool> active{false};
  };

  void check(Slot s) const {
    if (s.index_ >= registered_.load(std::memory_order_acquire)) {
      throw UsageError("big reader slot " + std::to_string(s.index_) + " is not registered");
    }
  }

  const std::size_t capacity_;
  std::unique_ptr<ReaderSlot[]> slots_;
  alignas(kCacheLine) std::atomic<std::size_t> registered_{0};
  alignas(kCacheLine) std::atomic<bool> writer_{false};
  TicketLock writer_mutex_;
  SpinOptions opts_;
  [[no_unique_address]] Trace trace_;
};

using BigReaderLock = BasicBigReaderLock<>;

}  // namespace lockscale::locks
