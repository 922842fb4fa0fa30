#pragma once

#include <stdexcept>
#include <string>

namespace rplab {

// Argument outside the domain of an operation (action outside its space,
// mismatched dimensions, stepping a finished episode).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Invalid experiment or attack configuration.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation not supported by this environment or representation.
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Enumeration would exceed the configured policy cap.
class IntractableError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A numeric computation produced NaN or infinity.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rplab
