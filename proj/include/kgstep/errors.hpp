#pragma once

#include <stdexcept>
#include <string>

namespace kgstep {

/// A physical precondition was violated (e.g. E < m, evanescent input to an
/// oscillatory-only operation).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Invalid scenario, grid or simulation configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The time integration blew up.
class InstabilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A packet measurement was requested before the interaction finished.
class MeasurementError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace kgstep
