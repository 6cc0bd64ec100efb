#pragma once

#include <cstddef>
#include <vector>

#include "dpo/matrix.hpp"

namespace dpo {

// Elementwise and structural helpers.
DenseMatrix transpose(const DenseMatrix& a);
DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix operator*(double s, const DenseMatrix& a);
DenseVector operator+(const DenseVector& a, const DenseVector& b);
DenseVector operator-(const DenseVector& a, const DenseVector& b);
DenseVector operator*(double s, const DenseVector& a);

double dot(const DenseVector& a, const DenseVector& b);
double norm2(const DenseVector& v);
double norm_inf(const DenseVector& v);
/// Induced infinity norm (largest absolute row sum).
double norm_inf(const DenseMatrix& a);
double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b);
double max_abs_diff(const DenseVector& a, const DenseVector& b);

/// Matrix product. Rows of the result are computed in parallel when OpenMP
/// is enabled; each entry is accumulated in the same order as the serial
/// reference, so both give bit-identical results.
DenseMatrix mat_mul(const DenseMatrix& a, const DenseMatrix& b);
DenseVector mat_vec(const DenseMatrix& a, const DenseVector& x);
/// aᵀx without forming the transpose.
DenseVector mat_t_vec(const DenseMatrix& a, const DenseVector& x);

/// Kronecker product: block (i, j) equals a(i, j) * b.
DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b);

/// LU factorization with partial pivoting.
class LuFactorization {
 public:
  /// Throws SingularMatrixError when a pivot falls below
  /// n * eps * max|a| in magnitude.
  explicit LuFactorization(const DenseMatrix& a);

  DenseVector solve(const DenseVector& b) const;
  /// Solves for every column of `b`.
  DenseMatrix solve(const DenseMatrix& b) const;

  std::size_t size() const noexcept { return lu_.rows(); }
  /// Smallest pivot magnitude seen during elimination.
  double min_pivot() const noexcept { return min_pivot_; }

 private:
  DenseMatrix lu_;
  std::vector<std::size_t> perm_;
  double min_pivot_ = 0.0;
};

DenseVector solve_linear(const DenseMatrix& a, const DenseVector& b);

struct EigenPair {
  double value = 0.0;
  DenseVector vector;
  std::size_t iterations = 0;
};

/// Power iteration for the dominant eigenpair. Stops once successive
/// max-norm-normalized iterates differ by at most `tol`. The eigenvector is
/// scaled to sum to one when all of its entries are nonnegative and to unit
/// max-norm otherwise. Throws ConvergenceError after `max_iter` iterations.
EigenPair dominant_eigpair(const DenseMatrix& a, double tol = 1e-12,
                           std::size_t max_iter = 100000);

struct SpectralEstimate {
  double value = 0.0;
  bool converged = false;
  std::size_t iterations = 0;
};

/// Power-iteration estimate of the spectral radius. When the iterate does not
/// settle (complex or tied dominant eigenvalues) the returned value is the
/// geometric mean growth rate over the second half of the run and
/// `converged` is false.
SpectralEstimate spectral_radius(const DenseMatrix& a, double tol = 1e-12,
                                 std::size_t max_iter = 100000);

/// Largest eigenvalue of a symmetric positive semidefinite matrix, by power
/// iteration with a Rayleigh-quotient estimate.
double symmetric_max_eigenvalue(const DenseMatrix& a, double tol = 1e-14,
                                std::size_t max_iter = 100000);

namespace serial {

/// Reference single-threaded product, kept for testing and benchmarking.
DenseMatrix mat_mul(const DenseMatrix& a, const DenseMatrix& b);

}  // namespace serial

}  // namespace dpo
