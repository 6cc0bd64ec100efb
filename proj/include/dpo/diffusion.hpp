#pragma once

#include <cstddef>
#include <functional>
#include <string_view>

#include "dpo/costs.hpp"
#include "dpo/matrix.hpp"
#include "dpo/network.hpp"

namespace dpo {

enum class Strategy { atc, cta, general };

std::string_view to_string(Strategy s);
/// Parses "atc", "cta" or "general".
Strategy parse_strategy(std::string_view name);

/// Combination matrices and step sizes of the general diffusion recursion
///
///   phi_k = sum_l a1(l,k) w_l
///   psi_k = phi_k - mu_k sum_l c(l,k) grad J_l(phi_k)
///   w_k   = sum_l a2(l,k) psi_l
///
/// with A1, A2 left-stochastic and C right-stochastic.
struct DiffusionConfig {
  CombinationMatrix a1;
  CombinationMatrix a2;
  CombinationMatrix c;
  DenseVector step_sizes;
  Strategy strategy = Strategy::general;

  std::size_t nodes() const noexcept { return step_sizes.size(); }
  double mu_max() const;
  /// Step sizes divided by their maximum.
  DenseVector normalized_steps() const;
  /// Same matrices, step sizes rescaled so that the largest equals `mu_max`.
  DiffusionConfig with_mu_max(double mu_max) const;
};

struct CombinationPair {
  CombinationMatrix a1;
  CombinationMatrix a2;
  Strategy strategy = Strategy::general;
};

/// Adapt-then-combine: A1 = I, A2 = A.
CombinationPair preset_atc(const CombinationMatrix& a);
/// Combine-then-adapt: A1 = A, A2 = I.
CombinationPair preset_cta(const CombinationMatrix& a);

DiffusionConfig make_config(const CombinationPair& pair, CombinationMatrix c,
                            DenseVector step_sizes);

/// Shapes and stochasticity of every matrix, positivity of the step sizes,
/// and mu_k < 2 / sum_l c_lk lambda_l,max for every node (which in turn
/// requires the lower Hessian bounds to be positive in combination).
/// Throws ValidationError / AssumptionError naming the first violation.
void check_config(const DiffusionConfig& config, const CostEnsemble& ensemble);

/// Per-node estimates, one row per node.
struct NetworkState {
  DenseMatrix iterate;
  std::size_t iteration = 0;
};

NetworkState initial_state(std::size_t nodes, std::size_t dim);

/// One synchronous iteration; every node reads only the previous iterate.
/// Throws DivergenceError if a non-finite value appears.
NetworkState step(const NetworkState& state, const DiffusionConfig& config,
                  const CostEnsemble& ensemble);

struct FixedPointResult {
  DenseMatrix w_infinity;
  std::size_t iterations_used = 0;
  bool converged = false;
  /// max_k ||w_k,i - w_k,i-1|| / (1 + ||w_k,i||) at the last iteration.
  double final_update_norm = 0.0;
};

/// Receives (iteration, normalized max update) after every iteration.
using TraceSink = std::function<void(std::size_t, double)>;

struct FixedPointOptions {
  double tol = 1e-12;
  std::size_t max_iter = 1000000;
  TraceSink trace;
};

/// Iterates `step` from `init` until the normalized update falls to `tol`.
/// Exhausting `max_iter` is reported through `converged`, not thrown.
FixedPointResult run_to_fixed_point(const DiffusionConfig& config,
                                    const CostEnsemble& ensemble,
                                    const DenseMatrix& init,
                                    const FixedPointOptions& options = {});

/// Starts from all zeros.
FixedPointResult run_to_fixed_point(const DiffusionConfig& config,
                                    const CostEnsemble& ensemble,
                                    const FixedPointOptions& options = {});

namespace serial {

/// Reference single-threaded iteration, kept for testing and benchmarking.
NetworkState step(const NetworkState& state, const DiffusionConfig& config,
                  const CostEnsemble& ensemble);

}  // namespace serial

}  // namespace dpo
