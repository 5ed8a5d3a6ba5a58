#pragma once

#include <stdexcept>
#include <string>

namespace hsbc {

/// Inconsistent dimensions or out-of-range settings.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed arguments to an operation (empty trajectory, bad label, ...).
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values produced by a simulation or an optimizer.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Every rollout of a planning step was non-finite.
class PlanningError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// No ensemble member survived the exact filter.
class SamplerFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A label was submitted for a query that is no longer pending.
class ConflictError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised inside a blocked oracle when its session is shut down.
class Cancelled : public std::runtime_error {
 public:
  explicit Cancelled(const std::string& what = "cancelled") : std::runtime_error(what) {}
};

}  // namespace hsbc
