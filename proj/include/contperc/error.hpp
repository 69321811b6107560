#pragma once

#include <stdexcept>
#include <string>

namespace contperc {

/// Precondition violated by the caller (CLI exit code 2).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Work requested exceeds a hard resource limit (CLI exit code 3).
class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Operation is defined but not implemented for this configuration.
class NotSupported : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Threshold search could not bracket the crossing point.
class EstimationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Throws InvalidArgument with `what` unless `ok`.
inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

}  // namespace contperc
