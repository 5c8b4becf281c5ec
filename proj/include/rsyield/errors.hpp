#pragma once

#include <stdexcept>
#include <string>

namespace rsyield {

// Bad inputs: malformed files, schema mismatches, out-of-range codes,
// inconsistent configuration.  Mapped to exit code 2 by the CLI.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A requested evaluation window falls outside the available data.
class CoverageError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

// Numeric failures: solver non-convergence, singular systems.
// Mapped to exit code 3 by the CLI.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace rsyield
