#include "dpo/costs.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "dpo/error.hpp"
#include "dpo/linalg.hpp"
#include "dpo/rng.hpp"

namespace dpo {

namespace {

void require_dim(std::size_t expected, std::size_t got, const char* what) {
  if (expected != got) {
    throw DimensionError(std::string(what) + ": expected length " +
                         std::to_string(expected) + ", got " +
                         std::to_string(got));
  }
}

std::string format17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

DenseVector CostModel::gradient(const DenseVector& w) const {
  require_dim(dim(), w.size(), "gradient");
  DenseVector g(dim());
  accumulate_gradient(w.span(), 1.0, g.span());
  return g;
}

QuadraticCost::QuadraticCost(DenseMatrix x, DenseVector y)
    : x_(std::move(x)), y_(std::move(y)) {
  if (x_.rows() == 0 || x_.cols() == 0) {
    throw DimensionError("QuadraticCost: data matrix must be non-empty");
  }
  require_dim(x_.rows(), y_.size(), "QuadraticCost target");
}

double QuadraticCost::value(std::span<const double> w) const {
  require_dim(dim(), w.size(), "value");
  double s = 0.0;
  for (std::size_t i = 0; i < x_.rows(); ++i) {
    const auto r = x_.row(i);
    double e = -y_[i];
    for (std::size_t j = 0; j < r.size(); ++j) e += r[j] * w[j];
    s += e * e;
  }
  return s;
}

void QuadraticCost::accumulate_gradient(std::span<const double> w,
                                        double weight,
                                        std::span<double> out) const {
  // 2 X'(X w - y), one residual entry at a time.
  const std::size_t m = x_.cols();
  for (std::size_t i = 0; i < x_.rows(); ++i) {
    const auto r = x_.row(i);
    double e = -y_[i];
    for (std::size_t j = 0; j < m; ++j) e += r[j] * w[j];
    const double f = 2.0 * weight * e;
    for (std::size_t j = 0; j < m; ++j) out[j] += f * r[j];
  }
}

DenseMatrix QuadraticCost::hessian(std::span<const double>) const {
  const std::size_t m = x_.cols();
  DenseMatrix h(m, m);
  for (std::size_t i = 0; i < x_.rows(); ++i) {
    const auto r = x_.row(i);
    for (std::size_t p = 0; p < m; ++p)
      for (std::size_t q = 0; q < m; ++q) h(p, q) += 2.0 * r[p] * r[q];
  }
  return h;
}

HessianBounds QuadraticCost::hessian_bounds() const {
  const DenseMatrix h = hessian();
  const double top = symmetric_max_eigenvalue(h);
  if (top <= 0.0) return {0.0, 0.0};
  const DenseMatrix shifted = top * DenseMatrix::identity(dim()) - h;
  const double gap = symmetric_max_eigenvalue(shifted);
  return {std::max(0.0, top - gap), top};
}

CostEnsemble::CostEnsemble(std::vector<QuadraticCost> costs,
                           std::uint64_t data_seed)
    : costs_(std::move(costs)), data_seed_(data_seed) {
  if (costs_.empty()) throw ValidationError("CostEnsemble: no costs");
  dim_ = costs_.front().dim();
  bounds_.reserve(costs_.size());
  for (const auto& c : costs_) {
    require_dim(dim_, c.dim(), "CostEnsemble member dimension");
    bounds_.push_back(c.hessian_bounds());
  }
}

CostEnsemble sample_ensemble(std::size_t n, std::size_t m, std::size_t rows,
                             std::uint64_t data_seed) {
  if (n == 0 || m == 0 || rows == 0) {
    throw ValidationError("sample_ensemble: n, m and rows must be positive");
  }
  NormalStream normal(data_seed);
  std::vector<QuadraticCost> costs;
  costs.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    std::vector<double> x(rows * m);
    for (double& v : x) v = normal();
    std::vector<double> y(rows);
    for (double& v : y) v = normal();
    costs.emplace_back(DenseMatrix(rows, m, std::move(x)),
                       DenseVector(std::move(y)));
  }
  return CostEnsemble(std::move(costs), data_seed);
}

CostEnsemble sample_identical_ensemble(std::size_t n, std::size_t m,
                                       std::size_t rows,
                                       std::uint64_t data_seed) {
  const CostEnsemble one = sample_ensemble(1, m, rows, data_seed);
  return CostEnsemble(std::vector<QuadraticCost>(n, one[0]), data_seed);
}

DenseVector gradient(const CostModel& cost, const DenseVector& w) {
  return cost.gradient(w);
}

DenseMatrix hessian(const QuadraticCost& cost) { return cost.hessian(); }

HessianBounds hessian_bounds(const CostModel& cost) {
  return cost.hessian_bounds();
}

double aggregate_value(const CostEnsemble& ensemble, const DenseVector& w) {
  double s = 0.0;
  for (const auto& c : ensemble.costs()) s += c.value(w.span());
  return s;
}

DenseVector global_optimum(const CostEnsemble& ensemble) {
  const std::size_t m = ensemble.dim();
  DenseMatrix normal(m, m);
  DenseVector rhs(m);
  for (const auto& c : ensemble.costs()) {
    const DenseMatrix& x = c.x();
    for (std::size_t i = 0; i < x.rows(); ++i) {
      const auto r = x.row(i);
      for (std::size_t p = 0; p < m; ++p) {
        rhs[p] += r[p] * c.y()[i];
        for (std::size_t q = 0; q < m; ++q) normal(p, q) += r[p] * r[q];
      }
    }
  }
  try {
    return solve_linear(normal, rhs);
  } catch (const SingularMatrixError& e) {
    throw AssumptionError(
        std::string("global optimum undefined: the summed Hessian is "
                    "singular, so the lower Hessian bounds are not positive "
                    "in aggregate (") +
        e.what() + ")");
  }
}

DenseVector stacked_gradient(const CostEnsemble& ensemble,
                             const DenseVector& w) {
  const std::size_t m = ensemble.dim();
  require_dim(m, w.size(), "stacked_gradient");
  DenseVector g(m * ensemble.size());
  for (std::size_t k = 0; k < ensemble.size(); ++k) {
    ensemble[k].accumulate_gradient(w.span(), 1.0,
                                    g.span().subspan(k * m, m));
  }
  return g;
}

Assumption1Report check_assumption1(const CombinationMatrix& c,
                                    const CostEnsemble& ensemble) {
  const std::size_t n = ensemble.size();
  if (c.size() != n) {
    throw DimensionError("check_assumption1: C has " +
                         std::to_string(c.size()) + " nodes, ensemble " +
                         std::to_string(n));
  }
  Assumption1Report report;
  report.satisfied = true;
  report.weighted_min.assign(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double s = 0.0;
    for (std::size_t l = 0; l < n; ++l)
      s += c(l, k) * ensemble.bounds()[l].lambda_min;
    report.weighted_min[k] = s;
    if (!(s > 0.0)) report.satisfied = false;
  }
  return report;
}

double max_step_size(std::size_t node, const CombinationMatrix& c,
                     const CostEnsemble& ensemble) {
  const std::size_t n = ensemble.size();
  if (c.size() != n || node >= n) {
    throw DimensionError("max_step_size: node " + std::to_string(node) +
                         " with C of size " + std::to_string(c.size()) +
                         " and " + std::to_string(n) + " costs");
  }
  double low = 0.0;
  double high = 0.0;
  for (std::size_t l = 0; l < n; ++l) {
    low += c(l, node) * ensemble.bounds()[l].lambda_min;
    high += c(l, node) * ensemble.bounds()[l].lambda_max;
  }
  if (!(low > 0.0)) {
    throw AssumptionError(
        "node " + std::to_string(node) +
        ": combined lower Hessian bound sum_l c_lk lambda_l,min is " +
        std::to_string(low) + ", must be positive");
  }
  return 2.0 / high;
}

void write_ensemble(std::ostream& os, const CostEnsemble& ensemble) {
  const std::size_t rows = ensemble[0].x().rows();
  for (const auto& c : ensemble.costs()) {
    if (c.x().rows() != rows) {
      throw ValidationError(
          "write_ensemble: all nodes must have the same number of rows");
    }
  }
  os << ensemble.size() << ' ' << ensemble.dim() << ' ' << rows << '\n';
  for (const auto& c : ensemble.costs()) {
    for (std::size_t i = 0; i < rows; ++i) {
      const auto r = c.x().row(i);
      for (std::size_t j = 0; j < r.size(); ++j)
        os << (j ? " " : "") << format17(r[j]);
      os << '\n';
    }
    for (std::size_t i = 0; i < rows; ++i)
      os << (i ? " " : "") << format17(c.y()[i]);
    os << '\n';
  }
}

std::string to_text(const CostEnsemble& ensemble) {
  std::ostringstream os;
  write_ensemble(os, ensemble);
  return os.str();
}

CostEnsemble read_ensemble(std::istream& is) {
  long long n = 0;
  long long m = 0;
  long long rows = 0;
  if (!(is >> n >> m >> rows) || n < 1 || m < 1 || rows < 1) {
    throw ValidationError("ensemble: expected header \"N M rows\"");
  }
  std::vector<QuadraticCost> costs;
  costs.reserve(static_cast<std::size_t>(n));
  for (long long k = 0; k < n; ++k) {
    std::vector<double> x(static_cast<std::size_t>(rows * m));
    std::vector<double> y(static_cast<std::size_t>(rows));
    for (double& v : x)
      if (!(is >> v)) throw ValidationError("ensemble: truncated data matrix");
    for (double& v : y)
      if (!(is >> v)) throw ValidationError("ensemble: truncated target");
    costs.emplace_back(DenseMatrix(static_cast<std::size_t>(rows),
                                   static_cast<std::size_t>(m), std::move(x)),
                       DenseVector(std::move(y)));
  }
  return CostEnsemble(std::move(costs));
}

}  // namespace dpo
