#pragma once

#include <stdexcept>
#include <string>

namespace galam {

/// Input outside the mathematical domain of an operation (bad probability,
/// room size 1, start count above n, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Request exceeds a configured size cap (exact chain above its n limit,
/// brute-force enumeration above 16 seats).
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Linear solve failed or produced a residual above tolerance.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller violated an experiment/CLI precondition (too few n values,
/// unknown probe kind, ...).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace galam
