#pragma once

#include <atomic>
#include <cassert>
#include <utility>

#include "lockscale/locks/spin.hpp"

namespace lockscale::locks {

/// CLH queue lock. Each acquirer enqueues a node by swapping it into the
/// tail and spins on its predecessor's node, so every waiter spins on a
/// different cache line and the lock is granted in enqueue order.
///
/// Nodes move between threads: on release a thread gives up its own node
/// (its successor may still be spinning on it) and adopts the
/// predecessor's node, which nobody references any more. Free nodes live in
/// a thread-local pool that is reclaimed when the thread exits.
class ClhLock {
 public:
  struct alignas(kCacheLine) Node {
    std::atomic<bool> locked{false};
  };

  /// Ownership token. Thread-affine: release it on the acquiring thread.
  class Holder {
   public:
    Holder() = default;
    Holder(Holder&& o) noexcept
        : mine_(std::exchange(o.mine_, nullptr)), pred_(std::exchange(o.pred_, nullptr)) {}
    Holder& operator=(Holder&& o) noexcept {
      assert(mine_ == nullptr && "overwriting a live CLH holder");
      mine_ = std::exchange(o.mine_, nullptr);
      pred_ = std::exchange(o.pred_, nullptr);
      return *this;
    }
    Holder(const Holder&) = delete;
    Holder& operator=(const Holder&) = delete;
    ~Holder() { assert(mine_ == nullptr && "CLH holder dropped without release"); }

    bool valid() const noexcept { return mine_ != nullptr; }

   private:
    friend class ClhLock;
    Holder(Node* mine, Node* pred) noexcept : mine_(mine), pred_(pred) {}
    Node* mine_ = nullptr;
    Node* pred_ = nullptr;
  };

  explicit ClhLock(SpinOptions opts = {});
  ~ClhLock();
  ClhLock(const ClhLock&) = delete;
  ClhLock& operator=(const ClhLock&) = delete;

  Holder acquire() noexcept {
    Node* mine = take_node();
    mine->locked.store(true, std::memory_order_relaxed);
    Node* pred = tail_.exchange(mine, std::memory_order_acq_rel);
    SpinWait w(opts_);
    while (pred->locked.load(std::memory_order_acquire)) w.once();
    return Holder(mine, pred);
  }

  void release(Holder& h) noexcept {
    assert(h.valid() && "CLH holder released twice");
    Node* mine = std::exchange(h.mine_, nullptr);
    Node* pred = std::exchange(h.pred_, nullptr);
    mine->locked.store(false, std::memory_order_release);
    give_node(pred);
  }

  // BasicLockable. The holder is parked inside the lock; only the owning
  // thread touches it.
  void lock() noexcept { held_ = acquire(); }
  void unlock() noexcept { release(held_); }

  /// Most recently enqueued node; changes whenever a thread enqueues.
  const Node* tail() const noexcept { return tail_.load(std::memory_order_acquire); }

 private:
  static Node* take_node();
  static void give_node(Node* n) noexcept;

  alignas(kCacheLine) std::atomic<Node*> tail_;
  alignas(kCacheLine) Holder held_;
  SpinOptions opts_;
};

}  // namespace lockscale::locks
