#pragma once

#include <stdexcept>
#include <string>

namespace drl {

/// Shapes of vectors, operators or functions do not agree.
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numeric parameter lies outside its admissible range.
class RangeError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Malformed experiment configuration or input file.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A hard numerical assertion (an identity or inequality that must hold) failed.
class AssertionFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace drl
