#pragma once

#include <stdexcept>
#include <string>

namespace pmtlink {

// Numerical failure (quadrature non-convergence, singular system, ...).
// CLI maps this to exit code 3.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

// Filesystem / serialization failure. CLI maps this to exit code 4.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Bad user input (unknown key, malformed override, ...). CLI exit code 2.
struct UsageError : std::runtime_error {
  explicit UsageError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace pmtlink
