#ifndef JDM_ERRORS_HPP
#define JDM_ERRORS_HPP

#include <cstddef>
#include <stdexcept>
#include <string>

namespace jdm {

// Bad arguments and out-of-domain evaluations use std::invalid_argument and
// std::domain_error directly. The types below carry extra context.

/// A computation produced a non-finite or otherwise unusable value.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& what, double at = 0.0)
      : std::runtime_error(what), at_(at) {}

  /// Abscissa (node, time) at which the failure was detected, when known.
  double at() const noexcept { return at_; }

 private:
  double at_;
};

/// Malformed input file. `line()` is 1-based; 0 means "not line specific".
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what
                                : what),
        line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace jdm

#endif  // JDM_ERRORS_HPP
