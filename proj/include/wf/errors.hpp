#pragma once

#include <stdexcept>
#include <string>

namespace wf {

// Bad user input: parameter ranges, config files, grid mismatches.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Arithmetic failures: NaN in a sweep, unbracketed roots, non-finite prices.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool condition, const std::string& message) {
  if (!condition) throw ConfigError(message);
}

}  // namespace wf
