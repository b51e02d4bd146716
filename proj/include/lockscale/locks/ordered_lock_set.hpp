#pragma once

#include <algorithm>
#include <cstdint>
#include <utility>
#include <vector>

#include "lockscale/errors.hpp"

namespace lockscale::locks {

/// A set of locks that is always acquired in ascending id order, so any
/// number of threads using this discipline on overlapping sets cannot
/// deadlock. The default id is the lock's address.
template <class Lockable>
class OrderedLockSet {
 public:
  using Id = std::uintptr_t;

  /// Locks held by one acquire_all call. Releases on destruction if still held.
  class MultiToken {
   public:
    MultiToken() = default;
    MultiToken(MultiToken&& o) noexcept : held_(std::move(o.held_)) { o.held_.clear(); }
    MultiToken& operator=(MultiToken&& o) noexcept {
      release();
      held_ = std::move(o.held_);
      o.held_.clear();
      return *this;
    }
    MultiToken(const MultiToken&) = delete;
    MultiToken& operator=(const MultiToken&) = delete;
    ~MultiToken() { release(); }

    std::size_t size() const noexcept { return held_.size(); }
    bool empty() const noexcept { return held_.empty(); }

    /// Releases in reverse acquisition order.
    void release() noexcept {
      for (auto it = held_.rbegin(); it != held_.rend(); ++it) (*it)->unlock();
      held_.clear();
    }

   private:
    friend class OrderedLockSet;
    std::vector<Lockable*> held_;
  };

  OrderedLockSet() = default;

  /// Adds a lock keyed by its address.
  OrderedLockSet& add(Lockable& lock) {
    return add(reinterpret_cast<Id>(&lock), lock);
  }

  /// Adds a lock under an explicit stable id; UsageError on a duplicate.
  OrderedLockSet& add(Id id, Lockable& lock) {
    const auto pos = std::lower_bound(entries_.begin(), entries_.end(), id,
                                      [](const Entry& e, Id key) { return e.id < key; });
    if (pos != entries_.end() && pos->id == id) {
      throw UsageError("duplicate id in ordered lock set");
    }
    entries_.insert(pos, Entry{id, &lock});
    return *this;
  }

  std::size_t size() const noexcept { return entries_.size(); }

  /// Ids in acquisition order.
  std::vector<Id> order() const {
    std::vector<Id> ids;
    ids.reserve(entries_.size());
    for (const auto& e : entries_) ids.push_back(e.id);
    return ids;
  }

  MultiToken acquire_all() const {
    MultiToken token;
    token.held_.reserve(entries_.size());
    for (const auto& e : entries_) {
      e.lock->lock();
      token.held_.push_back(e.lock);
    }
    return token;
  }

  static void release_all(MultiToken& token) noexcept { token.release(); }

 private:
  struct Entry {
    Id id;
    Lockable* lock;
  };
  std::vector<Entry> entries_;  // sorted by id
};

}  // namespace lockscale::locks
