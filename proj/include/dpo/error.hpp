#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace dpo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shapes of operands do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Bad user input: malformed config, impossible request, violated precondition.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// A modelling assumption (Hessian bounds, primitivity, step-size bound) fails.
class AssumptionError : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

class SingularMatrixError : public Error {
 public:
  SingularMatrixError(const std::string& what, double pivot)
      : Error(what), pivot_(pivot) {}
  double pivot() const noexcept { return pivot_; }

 private:
  double pivot_;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

/// The diffusion recursion produced a non-finite value.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, std::size_t node,
                  std::size_t iteration)
      : Error(what), node_(node), iteration_(iteration) {}
  std::size_t node() const noexcept { return node_; }
  std::size_t iteration() const noexcept { return iteration_; }

 private:
  std::size_t node_;
  std::size_t iteration_;
};

}  // namespace dpo
