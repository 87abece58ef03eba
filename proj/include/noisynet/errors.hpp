#pragma once

#include <stdexcept>
#include <string>

namespace noisynet {

// Construction is not possible for this sample (e.g. an empty cell).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Exhaustive tree-code decoding requested beyond the configured depth cap.
class CapacityError : public InfeasibleError {
 public:
  using InfeasibleError::InfeasibleError;
};

class DecodeFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace noisynet
