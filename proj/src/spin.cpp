#include "lockscale/locks/spin.hpp"

#include <string>

#include "lockscale/errors.hpp"

namespace lockscale::locks {

std::string_view to_string(SpinPolicy p) noexcept {
  switch (p) {
    case SpinPolicy::none: return "none";
    case SpinPolicy::pause: return "pause";
    case SpinPolicy::yield: return "yield";
  }
  return "?";
}

SpinPolicy parse_spin_policy(std::string_view name) {
  for (auto p : {SpinPolicy::none, SpinPolicy::pause, SpinPolicy::yield}) {
    if (name == to_string(p)) return p;
  }
  throw InvalidParameter("unknown spin policy: " + std::string(name));
}

}  // namespace lockscale::locks
