#pragma once

#include <stdexcept>
#include <string>

namespace eggs {

// Bad user-supplied configuration (unknown relation, invalid epsilon, ...).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input data violates a precondition (unsorted, too small, malformed).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace eggs
