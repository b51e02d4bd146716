#include "lockscale/locks/clh_lock.hpp"

#include <vector>

namespace lockscale::locks {

namespace {

struct NodePool {
  std::vector<ClhLock::Node*> free;
  ~NodePool() {
    for (auto* n : free) delete n;
  }
};

thread_local NodePool t_pool;

}  // namespace

ClhLock::ClhLock(SpinOptions opts) : tail_(new Node), opts_(opts) {}

ClhLock::~ClhLock() {
  assert(!held_.valid() && "CLH lock destroyed while held");
  delete tail_.load(std::memory_order_relaxed);
}

ClhLock::Node* ClhLock::take_node() {
  if (t_pool.free.empty()) return new Node;
  Node* n = t_pool.free.back();
  t_pool.free.pop_back();
  return n;
}

void ClhLock::give_node(Node* n) noexcept { t_pool.free.push_back(n); }

}  // namespace lockscale::locks
