#pragma once

#include <stdexcept>
#include <string>

namespace mscusum {

/// Raised when an argument breaks a documented precondition.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A subset class is too large to enumerate or to drive a brute-force rule.
class CapacityError : public std::length_error {
 public:
  using std::length_error::length_error;
};

/// Non-finite increments, diverging series and similar numeric failures.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ModelError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class CalibrationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace mscusum
