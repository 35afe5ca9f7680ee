#pragma once

#include <stdexcept>
#include <string>

namespace polling {

// Malformed input: bad distribution parameters, missing fields, unparsable files.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an operation.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Base for failures that come out of the numerics rather than the input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SpectralError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class SupercriticalityError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class DegeneracyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

class ConsistencyError : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Simulation ran out of its event budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A downstream operation received a config without an accept verdict.
class RejectedConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace polling
