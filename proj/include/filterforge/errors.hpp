#pragma once

#include <stdexcept>
#include <string>

namespace filterforge {

/// Precondition or invariant violated by an argument.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Unknown builtin name.
class LookupError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Malformed input file; the message carries the offending field.
class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical breakdown (singular solve, degenerate filter, non-convergence).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace filterforge
