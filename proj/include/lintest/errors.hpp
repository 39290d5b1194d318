#pragma once

#include <stdexcept>
#include <string>

namespace lintest {

// Argument outside an operation's domain (nonpositive dimension, alpha >= beta, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Base for failures that come out of the numerics rather than bad input.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// a^2 * p * q >= 1: I + a(uv' + vu') is not positive definite.
class SingularCovariance : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Some support point makes the Gaussian integral for chi-square diverge.
class DivergenceInfinite : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Should never fire for admissible inputs; signals an internal inconsistency.
class NegativeDiscriminant : public NumericalError {
 public:
  using NumericalError::NumericalError;
};

// Brute-force oracle asked to enumerate a space that is too large.
class InfeasibleSize : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

}  // namespace lintest
