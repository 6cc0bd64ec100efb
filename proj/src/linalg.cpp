#include "dpo/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "dpo/error.hpp"

namespace dpo {

namespace {

std::string shape(const DenseMatrix& a) {
  return std::to_string(a.rows()) + "x" + std::to_string(a.cols());
}

void require_same_shape(const DenseMatrix& a, const DenseMatrix& b,
                        const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw DimensionError(std::string(op) + ": shapes " + shape(a) + " and " +
                         shape(b) + " differ");
  }
}

void require_same_size(const DenseVector& a, const DenseVector& b,
                       const char* op) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(op) + ": lengths " +
                         std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
}

void require_square(const DenseMatrix& a, const char* op) {
  if (!a.is_square()) {
    throw DimensionError(std::string(op) + ": matrix " + shape(a) +
                         " is not square");
  }
}

// Deterministic positive start vector. Positive so it is never orthogonal
// to the Perron vector of a nonnegative matrix; not constant so it is not
// accidentally an eigenvector of a generic matrix.
std::vector<double> start_vector(std::size_t n) {
  std::vector<double> v(n);
  for (std::size_t i = 0; i < n; ++i) {
    v[i] = 1.0 + 0.125 * static_cast<double>(i + 1) / static_cast<double>(n);
  }
  return v;
}

void apply(const DenseMatrix& a, const std::vector<double>& x,
           std::vector<double>& y) {
  const std::size_t n = a.rows();
  for (std::size_t i = 0; i < n; ++i) {
    const auto r = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
}

std::size_t argmax_abs(const std::vector<double>& v) {
  std::size_t p = 0;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > std::abs(v[p])) p = i;
  }
  return p;
}

template <class Kernel>
DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b,
                     Kernel&& rows) {
  if (a.cols() != b.rows()) {
    throw DimensionError("mat_mul: inner dimensions of " + shape(a) + " and " +
                         shape(b) + " disagree");
  }
  DenseMatrix c(a.rows(), b.cols());
  rows(a, b, c);
  return c;
}

inline void product_row(const DenseMatrix& a, const DenseMatrix& b,
                        DenseMatrix& c, std::size_t i) {
  auto out = c.row(i);
  const auto ar = a.row(i);
  for (std::size_t k = 0; k < ar.size(); ++k) {
    const double aik = ar[k];
    if (aik == 0.0) continue;
    const auto br = b.row(k);
    for (std::size_t j = 0; j < br.size(); ++j) out[j] += aik * br[j];
  }
}

}  // namespace

DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

DenseMatrix operator+(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "add");
  DenseMatrix c = a;
  auto ce = c.entries();
  auto be = b.entries();
  for (std::size_t i = 0; i < ce.size(); ++i) ce[i] += be[i];
  return c;
}

DenseMatrix operator-(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "subtract");
  DenseMatrix c = a;
  auto ce = c.entries();
  auto be = b.entries();
  for (std::size_t i = 0; i < ce.size(); ++i) ce[i] -= be[i];
  return c;
}

DenseMatrix operator*(double s, const DenseMatrix& a) {
  DenseMatrix c = a;
  for (double& x : c.entries()) x *= s;
  return c;
}

DenseVector operator+(const DenseVector& a, const DenseVector& b) {
  require_same_size(a, b, "add");
  DenseVector c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] += b[i];
  return c;
}

DenseVector operator-(const DenseVector& a, const DenseVector& b) {
  require_same_size(a, b, "subtract");
  DenseVector c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c[i] -= b[i];
  return c;
}

DenseVector operator*(double s, const DenseVector& a) {
  DenseVector c = a;
  for (double& x : c) x *= s;
  return c;
}

double dot(const DenseVector& a, const DenseVector& b) {
  require_same_size(a, b, "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm2(const DenseVector& v) { return std::sqrt(dot(v, v)); }

double norm_inf(const DenseVector& v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double norm_inf(const DenseMatrix& a) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double x : a.row(i)) s += std::abs(x);
    m = std::max(m, s);
  }
  return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "max_abs_diff");
  double m = 0.0;
  auto ae = a.entries();
  auto be = b.entries();
  for (std::size_t i = 0; i < ae.size(); ++i)
    m = std::max(m, std::abs(ae[i] - be[i]));
  return m;
}

double max_abs_diff(const DenseVector& a, const DenseVector& b) {
  require_same_size(a, b, "max_abs_diff");
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

DenseMatrix mat_mul(const DenseMatrix& a, const DenseMatrix& b) {
  return multiply(a, b, [](const DenseMatrix& x, const DenseMatrix& y,
                           DenseMatrix& c) {
    const auto n = static_cast<std::ptrdiff_t>(x.rows());
#pragma omp parallel for schedule(static) if (n * static_cast<std::ptrdiff_t>(y.cols()) >= 4096)
    for (std::ptrdiff_t i = 0; i < n; ++i) {
      product_row(x, y, c, static_cast<std::size_t>(i));
    }
  });
}

namespace serial {

DenseMatrix mat_mul(const DenseMatrix& a, const DenseMatrix& b) {
  return multiply(a, b, [](const DenseMatrix& x, const DenseMatrix& y,
                           DenseMatrix& c) {
    for (std::size_t i = 0; i < x.rows(); ++i) product_row(x, y, c, i);
  });
}

}  // namespace serial

DenseVector mat_vec(const DenseMatrix& a, const DenseVector& x) {
  if (a.cols() != x.size()) {
    throw DimensionError("mat_vec: matrix " + shape(a) + " and vector of " +
                         std::to_string(x.size()) + " disagree");
  }
  DenseVector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    const auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

DenseVector mat_t_vec(const DenseMatrix& a, const DenseVector& x) {
  if (a.rows() != x.size()) {
    throw DimensionError("mat_t_vec: matrix " + shape(a) +
                         " and vector of " + std::to_string(x.size()) +
                         " disagree");
  }
  DenseVector y(a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) y[j] += r[j] * x[i];
  }
  return y;
}

DenseMatrix kron(const DenseMatrix& a, const DenseMatrix& b) {
  DenseMatrix k(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) {
      const double aij = a(i, j);
      if (aij == 0.0) continue;
      for (std::size_t p = 0; p < b.rows(); ++p)
        for (std::size_t q = 0; q < b.cols(); ++q)
          k(i * b.rows() + p, j * b.cols() + q) = aij * b(p, q);
    }
  return k;
}

LuFactorization::LuFactorization(const DenseMatrix& a) : lu_(a) {
  require_square(a, "lu");
  const std::size_t n = a.rows();
  perm_.resize(n);
  std::iota(perm_.begin(), perm_.end(), std::size_t{0});

  double scale = 0.0;
  for (double x : a.entries()) scale = std::max(scale, std::abs(x));
  const double threshold =
      static_cast<double>(n) * std::numeric_limits<double>::epsilon() * scale;
  min_pivot_ = std::numeric_limits<double>::infinity();

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu_(i, k)) > std::abs(lu_(p, k))) p = i;
    }
    const double pivot = std::abs(lu_(p, k));
    min_pivot_ = std::min(min_pivot_, pivot);
    if (!(pivot > threshold)) {
      throw SingularMatrixError(
          "matrix is singular to working precision: pivot " +
              std::to_string(pivot) + " at column " + std::to_string(k),
          pivot);
    }
    if (p != k) {
      std::swap_ranges(lu_.row(k).begin(), lu_.row(k).end(),
                       lu_.row(p).begin());
      std::swap(perm_[k], perm_[p]);
    }
    const double inv = 1.0 / lu_(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double f = lu_(i, k) * inv;
      lu_(i, k) = f;
      if (f == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu_(i, j) -= f * lu_(k, j);
    }
  }
  if (n == 0) min_pivot_ = 0.0;
}

DenseVector LuFactorization::solve(const DenseVector& b) const {
  const std::size_t n = lu_.rows();
  if (b.size() != n) {
    throw DimensionError("solve: right-hand side of length " +
                         std::to_string(b.size()) + " for a system of size " +
                         std::to_string(n));
  }
  DenseVector x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = b[perm_[i]];
  for (std::size_t i = 0; i < n; ++i) {
    double s = x[i];
    for (std::size_t j = 0; j < i; ++j) s -= lu_(i, j) * x[j];
    x[i] = s;
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = x[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= lu_(i, j) * x[j];
    x[i] = s / lu_(i, i);
  }
  return x;
}

DenseMatrix LuFactorization::solve(const DenseMatrix& b) const {
  if (b.rows() != lu_.rows()) {
    throw DimensionError("solve: right-hand side " + shape(b) +
                         " for a system of size " +
                         std::to_string(lu_.rows()));
  }
  DenseMatrix x(b.rows(), b.cols());
  DenseVector col(b.rows());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < b.rows(); ++i) col[i] = b(i, j);
    const DenseVector s = solve(col);
    for (std::size_t i = 0; i < b.rows(); ++i) x(i, j) = s[i];
  }
  return x;
}

DenseVector solve_linear(const DenseMatrix& a, const DenseVector& b) {
  require_square(a, "solve_linear");
  if (a.rows() != b.size()) {
    throw DimensionError("solve_linear: matrix " + shape(a) +
                         " and right-hand side of length " +
                         std::to_string(b.size()) + " disagree");
  }
  return LuFactorization(a).solve(b);
}

EigenPair dominant_eigpair(const DenseMatrix& a, double tol,
                           std::size_t max_iter) {
  require_square(a, "dominant_eigpair");
  const std::size_t n = a.rows();
  if (n == 0) throw DimensionError("dominant_eigpair: empty matrix");

  std::vector<double> v = start_vector(n);
  {
    const double m = std::abs(v[argmax_abs(v)]);
    for (double& x : v) x /= m;
  }
  std::vector<double> w(n);
  double value = 0.0;
  double change = std::numeric_limits<double>::infinity();
  std::size_t it = 0;
  while (it < max_iter) {
    ++it;
    apply(a, v, w);
    const std::size_t p = argmax_abs(w);
    if (w[p] == 0.0) {
      throw ConvergenceError("dominant_eigpair: iterate collapsed to zero",
                             0.0);
    }
    const double inv = 1.0 / w[p];
    change = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double next = w[i] * inv;
      change = std::max(change, std::abs(next - v[i]));
      v[i] = next;
    }
    if (change <= tol) break;
  }
  if (change > tol) {
    throw ConvergenceError("dominant_eigpair: no convergence after " +
                               std::to_string(max_iter) +
                               " iterations (last change " +
                               std::to_string(change) + ")",
                           change);
  }
  // The largest entry of the settled direction is exactly 1 in magnitude.
  apply(a, v, w);
  const std::size_t p = argmax_abs(v);
  value = w[p] / v[p];

  const bool nonnegative =
      std::all_of(v.begin(), v.end(), [](double x) { return x >= 0.0; });
  if (nonnegative) {
    const double s = std::accumulate(v.begin(), v.end(), 0.0);
    for (double& x : v) x /= s;
  }
  return {value, DenseVector(std::move(v)), it};
}

SpectralEstimate spectral_radius(const DenseMatrix& a, double tol,
                                 std::size_t max_iter) {
  require_square(a, "spectral_radius");
  const std::size_t n = a.rows();
  if (n == 0) return {0.0, true, 0};

  std::vector<double> v = start_vector(n);
  {
    const double m = std::abs(v[argmax_abs(v)]);
    for (double& x : v) x /= m;
  }
  std::vector<double> w(n);
  std::vector<double> log_growth;
  log_growth.reserve(std::min<std::size_t>(max_iter, 1 << 16));
  for (std::size_t it = 1; it <= max_iter; ++it) {
    apply(a, v, w);
    const double growth = std::abs(w[argmax_abs(w)]);
    if (growth == 0.0) return {0.0, true, it};
    log_growth.push_back(std::log(growth));
    double same = 0.0;
    double flipped = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double next = w[i] / growth;
      same = std::max(same, std::abs(next - v[i]));
      flipped = std::max(flipped, std::abs(next + v[i]));
      v[i] = next;
    }
    if (std::min(same, flipped) <= tol) return {growth, true, it};
  }
  // Average growth over the second half of the run.
  const std::size_t from = log_growth.size() / 2;
  double s = 0.0;
  for (std::size_t i = from; i < log_growth.size(); ++i) s += log_growth[i];
  const double count = static_cast<double>(log_growth.size() - from);
  return {std::exp(s / count), false, max_iter};
}

double symmetric_max_eigenvalue(const DenseMatrix& a, double tol,
                                std::size_t max_iter) {
  require_square(a, "symmetric_max_eigenvalue");
  const std::size_t n = a.rows();
  if (n == 0) return 0.0;
  std::vector<double> v = start_vector(n);
  double nrm = std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0));
  for (double& x : v) x /= nrm;
  std::vector<double> w(n);
  double rq = 0.0;
  for (std::size_t it = 0; it < max_iter; ++it) {
    apply(a, v, w);
    const double next_rq = std::inner_product(v.begin(), v.end(), w.begin(), 0.0);
    nrm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
    if (nrm == 0.0) return 0.0;
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nrm;
    const bool settled =
        it > 0 && std::abs(next_rq - rq) <= tol * std::max(std::abs(next_rq), 1e-300);
    rq = next_rq;
    if (settled) break;
  }
  return rq;
}

}  // namespace dpo
