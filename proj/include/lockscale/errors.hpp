#pragma once

#include <stdexcept>
#include <string>

namespace lockscale {

/// Model, simulation or fit parameters outside their valid domain.
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Misuse of a lock API that is detectable at runtime (unregistered
/// big-reader slot, duplicate id in an ordered lock set).
class UsageError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// Fit input carries no information (all throughputs equal).
class DegenerateInput : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// The cycle clock could not be calibrated reproducibly.
class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace lockscale
