#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dpo/costs.hpp"
#include "dpo/diffusion.hpp"
#include "dpo/matrix.hpp"
#include "dpo/network.hpp"

namespace dpo {

/// MN x MN block diagonal matrix whose k-th block is
/// sum_l c(l,k) * Hessian_l(w_star).
DenseMatrix r_infinity(const CombinationMatrix& c, const CostEnsemble& ensemble,
                       const DenseVector& w_star);

/// Stacked steady-state bias w° - w_k,inf of every node, from the linear
/// system
///
///   [I - A2'(I - M R) A1'] b = A2' M C' g°
///
/// with A1, A2, C, M lifted by a Kronecker product with I_M and g° the
/// stacked gradients at the global optimum. Throws SingularMatrixError whose
/// message carries the spectral radius of A2'(I - M R)A1'.
DenseVector closed_form_bias(const DiffusionConfig& config,
                             const CostEnsemble& ensemble);

/// Operators describing the bias as the largest step size goes to zero with
/// the normalized step sizes held fixed.
struct LimitOperators {
  DenseMatrix x_op;      ///< I - A2'A1' (lifted), rank-deficient by M.
  DenseMatrix y_op;      ///< A2' M0 R A1' (lifted), M0 = normalized steps.
  DenseMatrix d_matrix;  ///< M x M inverse of (theta' x I) Y (1 x I).
  DenseVector z_vector;  ///< Omega0 A2 theta.
  DenseMatrix z_op;      ///< (1 x I) D (theta' x I), the limit of mu (X + mu Y)^-1.
  DenseVector theta;
};

/// Throws AssumptionError when A1 A2 is not primitive or when the M x M
/// system defining D is singular.
LimitOperators limit_operators(const DiffusionConfig& config,
                               const CostEnsemble& ensemble);

/// Per-node limit of the bias as mu_max -> 0:
///
///   (sum_k z_k sum_l c_lk H_l)^-1 (sum_k z_k sum_l c_lk grad J_l(w°)),
///
/// the same M-vector at every node.
DenseVector limit_bias(const DiffusionConfig& config,
                       const CostEnsemble& ensemble);

/// Same value through the explicit D matrix of limit_operators.
DenseVector limit_bias(const LimitOperators& ops, const DiffusionConfig& config,
                       const CostEnsemble& ensemble);

/// `per_node` repeated for each of `nodes` nodes.
DenseVector replicate(const DenseVector& per_node, std::size_t nodes);

struct LimitConvergenceRow {
  double mu_max = 0.0;
  double deviation = 0.0;  ///< ||closed_form_bias - replicated limit||
  double bias_norm = 0.0;  ///< ||closed_form_bias||
};

/// Evaluates the exact bias along a strictly decreasing mu_max schedule (step
/// size shape frozen) and reports its distance to the small-step limit.
/// Points are evaluated in parallel; the table keeps schedule order.
std::vector<LimitConvergenceRow> verify_limit_convergence(
    const DiffusionConfig& config, const CostEnsemble& ensemble,
    const std::vector<double>& mu_schedule);

struct SpectralCheck {
  double radius = 0.0;
  bool converged = false;
  /// Raised when the radius is not below one.
  bool warning = false;
};

/// Dense A2'(I - M R) A1' at the global optimum.
DenseMatrix error_propagation_matrix(const DiffusionConfig& config,
                                     const CostEnsemble& ensemble);

/// Spectral radius of the error-propagation matrix. Power iteration runs on
/// a 2^12-th power formed by repeated squaring, which separates the clustered
/// eigenvalues 1 - O(mu) that make plain power iteration crawl at small
/// step sizes.
SpectralCheck spectral_check(const DiffusionConfig& config,
                             const CostEnsemble& ensemble);

struct BiasReport {
  DenseMatrix empirical_bias;     ///< N x M, w° - w_k,inf from iteration
  DenseVector closed_form_bias;   ///< MN
  DenseVector limit_bias;         ///< M, common to all nodes
  double spectral_radius = 0.0;
  bool spectral_converged = false;
  Assumption3Report assumption3;
};

/// Runs the recursion to its fixed point and gathers every bias quantity.
BiasReport build_bias_report(const DiffusionConfig& config,
                             const CostEnsemble& ensemble,
                             const FixedPointOptions& options = {});

/// JSON document with fields empirical_bias, closed_form_bias, limit_bias,
/// spectral_radius and assumption3 {satisfied, c0, max_deviation}. Reals are
/// printed with 17 significant digits.
std::string to_json(const BiasReport& report);

}  // namespace dpo
