#pragma once

#include <stdexcept>
#include <string>

namespace fuseloc {

/// Non-finite or out-of-domain argument.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Geometric construction from coincident or otherwise degenerate input.
class DegenerateInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A correction was requested with an empty measurement set.
class NothingToCorrect : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Innovation covariance too close to singular to invert.
class IllConditionedUpdate : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class CalibrationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed scenario file or command-line configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fuseloc
