#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "dpo/matrix.hpp"
#include "dpo/network.hpp"

namespace dpo {

/// Extreme Hessian eigenvalues of one node's cost.
struct HessianBounds {
  double lambda_min = 0.0;
  double lambda_max = 0.0;
};

/// Interface every per-node cost satisfies. Only the quadratic model exists
/// today; the diffusion and bias code talk to costs through this.
class CostModel {
 public:
  virtual ~CostModel() = default;

  virtual std::size_t dim() const noexcept = 0;
  virtual double value(std::span<const double> w) const = 0;
  /// out += weight * grad J(w). `out` and `w` must not alias.
  virtual void accumulate_gradient(std::span<const double> w, double weight,
                                   std::span<double> out) const = 0;
  virtual DenseMatrix hessian(std::span<const double> w) const = 0;
  virtual HessianBounds hessian_bounds() const = 0;

  DenseVector gradient(const DenseVector& w) const;
};

/// J(w) = ||X w - y||^2.
class QuadraticCost final : public CostModel {
 public:
  QuadraticCost(DenseMatrix x, DenseVector y);

  const DenseMatrix& x() const noexcept { return x_; }
  const DenseVector& y() const noexcept { return y_; }

  std::size_t dim() const noexcept override { return x_.cols(); }
  double value(std::span<const double> w) const override;
  void accumulate_gradient(std::span<const double> w, double weight,
                           std::span<double> out) const override;
  /// 2 X'X, the same at every point.
  DenseMatrix hessian(std::span<const double> w = {}) const override;
  /// Largest eigenvalue by power iteration; smallest from the shifted matrix
  /// lambda_max * I - 2 X'X. Negative round-off is clamped to zero.
  HessianBounds hessian_bounds() const override;

  bool operator==(const QuadraticCost& other) const {
    return x_ == other.x_ && y_ == other.y_;
  }

 private:
  DenseMatrix x_;
  DenseVector y_;
};

class CostEnsemble {
 public:
  CostEnsemble(std::vector<QuadraticCost> costs, std::uint64_t data_seed = 0);

  std::size_t size() const noexcept { return costs_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  std::uint64_t data_seed() const noexcept { return data_seed_; }

  const QuadraticCost& operator[](std::size_t k) const { return costs_[k]; }
  const std::vector<QuadraticCost>& costs() const noexcept { return costs_; }
  /// Per-node bounds, computed once at construction.
  const std::vector<HessianBounds>& bounds() const noexcept { return bounds_; }

  bool operator==(const CostEnsemble& other) const {
    return costs_ == other.costs_;
  }

 private:
  std::vector<QuadraticCost> costs_;
  std::vector<HessianBounds> bounds_;
  std::size_t dim_ = 0;
  std::uint64_t data_seed_ = 0;
};

/// n costs with `rows` x m data matrices and length-`rows` targets, every
/// entry i.i.d. standard normal from a seeded SplitMix64/Box-Muller stream.
/// Node by node, X row-major first and then y.
CostEnsemble sample_ensemble(std::size_t n, std::size_t m, std::size_t rows,
                             std::uint64_t data_seed);

/// Every node gets the same (X, y), drawn as node 0 of sample_ensemble.
CostEnsemble sample_identical_ensemble(std::size_t n, std::size_t m,
                                       std::size_t rows,
                                       std::uint64_t data_seed);

DenseVector gradient(const CostModel& cost, const DenseVector& w);
DenseMatrix hessian(const QuadraticCost& cost);
HessianBounds hessian_bounds(const CostModel& cost);

/// Sum of all node costs at w.
double aggregate_value(const CostEnsemble& ensemble, const DenseVector& w);

/// Minimizer of the summed costs, (sum X'X)^-1 (sum X'y). Throws
/// AssumptionError when the normal matrix is singular.
DenseVector global_optimum(const CostEnsemble& ensemble);

/// Per-node gradients at the common point w, stacked into an MN vector.
DenseVector stacked_gradient(const CostEnsemble& ensemble, const DenseVector& w);

struct Assumption1Report {
  bool satisfied = false;
  /// sum_l c_lk * lambda_l,min for every node k.
  std::vector<double> weighted_min;
};

Assumption1Report check_assumption1(const CombinationMatrix& c,
                                    const CostEnsemble& ensemble);

/// Strict upper bound 2 / sum_l c_lk lambda_l,max on the step size of node
/// k. Throws AssumptionError when sum_l c_lk lambda_l,min is not positive.
double max_step_size(std::size_t node, const CombinationMatrix& c,
                     const CostEnsemble& ensemble);

/// Text bundle: "N M rows", then for every node its X rows followed by one
/// line holding y. Values use 17 significant digits.
void write_ensemble(std::ostream& os, const CostEnsemble& ensemble);
std::string to_text(const CostEnsemble& ensemble);
CostEnsemble read_ensemble(std::istream& is);

}  // namespace dpo
