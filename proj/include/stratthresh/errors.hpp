#pragma once

#include <stdexcept>
#include <string>

namespace stratthresh {

// Bad input: malformed parameters, failed preconditions, unknown config keys.
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Argument outside the mathematical domain of an evaluation (non-finite x, p outside (0,1)).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// The numerical problem has no well-defined answer for this data
// (degenerate mixture weights, unidentifiable fits, non-monotone residuals).
class IllPosedError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace stratthresh
