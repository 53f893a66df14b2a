#pragma once

#include <stdexcept>
#include <string>

namespace voter {

// Precondition on an argument violated (out-of-range count, bad partition, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Problem size exceeds a configured dense-computation cap.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// A quadrature or solver failed to reach its requested accuracy.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A statistical or convergence diagnostic rejected the run (budget too small,
// non-monotone curve, reference not converged).
class DiagnosticError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed experiment configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace voter
