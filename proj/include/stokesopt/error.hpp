#pragma once

#include <stdexcept>
#include <string>

namespace stokesopt {

// Base of every error raised by the library. The CLI maps the subclasses onto
// exit codes (usage = 2, numeric = 3, I/O = 4).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dimension is outside the domain of an operation (n < 2, size mismatch).
class InvalidDimension : public Error {
 public:
  using Error::Error;
};

// Dimension is valid in general but not supported by a construction
// (e.g. mutually unbiased bases for non-prime n).
class UnsupportedDimension : public Error {
 public:
  using Error::Error;
};

// Invalid configuration values (optimizer settings, receiver window, ...).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Gram matrix / coefficient matrix numerically singular.
class SingularSet : public Error {
 public:
  using Error::Error;
};

// Numerical search did not reach its tolerance within the budget.
class SearchFailed : public Error {
 public:
  SearchFailed(const std::string& what, double best_residual)
      : Error(what), best_residual_(best_residual) {}
  double best_residual() const noexcept { return best_residual_; }

 private:
  double best_residual_;
};

// A reconstruction produced an unphysical estimate.
class EstimationFailed : public Error {
 public:
  using Error::Error;
};

// Malformed input document; the message names the offending field.
class ParseError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace stokesopt
