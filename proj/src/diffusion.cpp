#include "dpo/diffusion.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "dpo/error.hpp"

namespace dpo {

namespace {

struct Weight {
  std::size_t from;
  double value;
};

using Column = std::vector<Weight>;

std::vector<Column> nonzero_columns(const DenseMatrix& m) {
  std::vector<Column> cols(m.cols());
  for (std::size_t k = 0; k < m.cols(); ++k)
    for (std::size_t l = 0; l < m.rows(); ++l)
      if (m(l, k) != 0.0) cols[k].push_back({l, m(l, k)});
  return cols;
}

// Column sparsity of every matrix, extracted once per run.
class DiffusionKernel {
 public:
  DiffusionKernel(const DiffusionConfig& config, const CostEnsemble& ensemble)
      : ensemble_(ensemble),
        a1_(nonzero_columns(config.a1.matrix)),
        a2_(nonzero_columns(config.a2.matrix)),
        c_(nonzero_columns(config.c.matrix)),
        mu_(config.step_sizes.values()),
        n_(config.nodes()),
        m_(ensemble.dim()),
        psi_(n_, m_) {}

  // Combine, adapt and combine for node k, writing psi_k.
  void adapt(const DenseMatrix& w, std::size_t k) {
    auto psi = psi_.row(k);
    // phi_k lands in psi_k, then the gradient step is taken in place from
    // a private copy of phi_k.
    std::fill(psi.begin(), psi.end(), 0.0);
    for (const Weight& a : a1_[k]) {
      const auto wl = w.row(a.from);
      for (std::size_t j = 0; j < m_; ++j) psi[j] += a.value * wl[j];
    }
    double phi[kStackDim];
    std::vector<double> heap;
    double* p = phi;
    if (m_ > kStackDim) {
      heap.assign(psi.begin(), psi.end());
      p = heap.data();
    } else {
      std::copy(psi.begin(), psi.end(), phi);
    }
    const std::span<const double> phi_view(p, m_);
    for (const Weight& c : c_[k]) {
      ensemble_[c.from].accumulate_gradient(phi_view, -mu_[k] * c.value, psi);
    }
  }

  void combine(DenseMatrix& out, std::size_t k) const {
    auto wk = out.row(k);
    std::fill(wk.begin(), wk.end(), 0.0);
    for (const Weight& a : a2_[k]) {
      const auto pl = psi_.row(a.from);
      for (std::size_t j = 0; j < m_; ++j) wk[j] += a.value * pl[j];
    }
  }

  void advance_serial(const DenseMatrix& w, DenseMatrix& out) {
    for (std::size_t k = 0; k < n_; ++k) adapt(w, k);
    for (std::size_t k = 0; k < n_; ++k) combine(out, k);
  }

  void advance_parallel(const DenseMatrix& w, DenseMatrix& out) {
    const auto n = static_cast<std::ptrdiff_t>(n_);
    const bool wide = n_ * m_ >= kParallelThreshold;
#pragma omp parallel if (wide)
    {
#pragma omp for schedule(static)
      for (std::ptrdiff_t k = 0; k < n; ++k)
        adapt(w, static_cast<std::size_t>(k));
#pragma omp for schedule(static)
      for (std::ptrdiff_t k = 0; k < n; ++k)
        combine(out, static_cast<std::size_t>(k));
    }
  }

  std::size_t nodes() const noexcept { return n_; }

 private:
  static constexpr std::size_t kStackDim = 16;
  static constexpr std::size_t kParallelThreshold = 512;

  const CostEnsemble& ensemble_;
  std::vector<Column> a1_;
  std::vector<Column> a2_;
  std::vector<Column> c_;
  const std::vector<double>& mu_;
  std::size_t n_;
  std::size_t m_;
  DenseMatrix psi_;
};

void require_finite(const DenseMatrix& w, std::size_t iteration) {
  for (std::size_t k = 0; k < w.rows(); ++k)
    for (double x : w.row(k))
      if (!std::isfinite(x)) {
        throw DivergenceError("diffusion diverged at node " +
                                  std::to_string(k) + ", iteration " +
                                  std::to_string(iteration),
                              k, iteration);
      }
}

void require_shapes(const DenseMatrix& w, const DiffusionConfig& config,
                    const CostEnsemble& ensemble) {
  const std::size_t n = config.nodes();
  if (config.a1.size() != n || config.a2.size() != n || config.c.size() != n ||
      ensemble.size() != n) {
    throw DimensionError("diffusion: A1, A2, C, step sizes and costs must all "
                         "cover the same " + std::to_string(n) + " nodes");
  }
  if (w.rows() != n || w.cols() != ensemble.dim()) {
    throw DimensionError("diffusion: state is " + std::to_string(w.rows()) +
                         "x" + std::to_string(w.cols()) + ", expected " +
                         std::to_string(n) + "x" +
                         std::to_string(ensemble.dim()));
  }
}

// max_k ||new_k - old_k|| / (1 + ||new_k||)
double normalized_update(const DenseMatrix& old_w, const DenseMatrix& new_w) {
  double worst = 0.0;
  for (std::size_t k = 0; k < new_w.rows(); ++k) {
    const auto a = old_w.row(k);
    const auto b = new_w.row(k);
    double d = 0.0;
    double s = 0.0;
    for (std::size_t j = 0; j < b.size(); ++j) {
      d += (b[j] - a[j]) * (b[j] - a[j]);
      s += b[j] * b[j];
    }
    worst = std::max(worst, std::sqrt(d) / (1.0 + std::sqrt(s)));
  }
  return worst;
}

}  // namespace

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::atc: return "atc";
    case Strategy::cta: return "cta";
    case Strategy::general: return "general";
  }
  return "unknown";
}

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::atc, Strategy::cta, Strategy::general})
    if (to_string(s) == name) return s;
  throw ValidationError("unknown strategy \"" + std::string(name) + "\"");
}

double DiffusionConfig::mu_max() const {
  if (step_sizes.empty()) throw ValidationError("no step sizes");
  return *std::max_element(step_sizes.begin(), step_sizes.end());
}

DenseVector DiffusionConfig::normalized_steps() const {
  const double top = mu_max();
  if (!(top > 0.0)) {
    throw ValidationError("step sizes must be positive to normalize");
  }
  DenseVector out = step_sizes;
  for (double& x : out) x /= top;
  return out;
}

DiffusionConfig DiffusionConfig::with_mu_max(double mu) const {
  DiffusionConfig out = *this;
  const DenseVector shape = normalized_steps();
  for (std::size_t k = 0; k < shape.size(); ++k)
    out.step_sizes[k] = mu * shape[k];
  return out;
}

CombinationPair preset_atc(const CombinationMatrix& a) {
  return {CombinationMatrix::identity(a.size()), a, Strategy::atc};
}

CombinationPair preset_cta(const CombinationMatrix& a) {
  return {a, CombinationMatrix::identity(a.size()), Strategy::cta};
}

DiffusionConfig make_config(const CombinationPair& pair, CombinationMatrix c,
                            DenseVector step_sizes) {
  return {pair.a1, pair.a2, std::move(c), std::move(step_sizes),
          pair.strategy};
}

void check_config(const DiffusionConfig& config, const CostEnsemble& ensemble) {
  require_shapes(DenseMatrix(config.nodes(), ensemble.dim()), config,
                 ensemble);
  if (config.a1.kind == Stochasticity::right ||
      config.a2.kind == Stochasticity::right) {
    throw ValidationError("A1 and A2 must be left-stochastic");
  }
  if (config.c.kind == Stochasticity::left) {
    throw ValidationError("C must be right-stochastic");
  }
  validate(config.a1);
  validate(config.a2);
  validate(config.c);
  for (std::size_t k = 0; k < config.nodes(); ++k) {
    const double mu = config.step_sizes[k];
    if (!(mu > 0.0)) {
      throw ValidationError("step size of node " + std::to_string(k) +
                            " must be positive");
    }
    const double bound = max_step_size(k, config.c, ensemble);
    if (!(mu < bound)) {
      throw AssumptionError("step size " + std::to_string(mu) + " of node " +
                            std::to_string(k) +
                            " violates the stability bound mu_k < " +
                            std::to_string(bound));
    }
  }
}

NetworkState initial_state(std::size_t nodes, std::size_t dim) {
  return {DenseMatrix(nodes, dim), 0};
}

NetworkState step(const NetworkState& state, const DiffusionConfig& config,
                  const CostEnsemble& ensemble) {
  require_shapes(state.iterate, config, ensemble);
  DiffusionKernel kernel(config, ensemble);
  NetworkState next{DenseMatrix(state.iterate.rows(), state.iterate.cols()),
                    state.iteration + 1};
  kernel.advance_parallel(state.iterate, next.iterate);
  require_finite(next.iterate, next.iteration);
  return next;
}

namespace serial {

NetworkState step(const NetworkState& state, const DiffusionConfig& config,
                  const CostEnsemble& ensemble) {
  require_shapes(state.iterate, config, ensemble);
  DiffusionKernel kernel(config, ensemble);
  NetworkState next{DenseMatrix(state.iterate.rows(), state.iterate.cols()),
                    state.iteration + 1};
  kernel.advance_serial(state.iterate, next.iterate);
  require_finite(next.iterate, next.iteration);
  return next;
}

}  // namespace serial

FixedPointResult run_to_fixed_point(const DiffusionConfig& config,
                                    const CostEnsemble& ensemble,
                                    const DenseMatrix& init,
                                    const FixedPointOptions& options) {
  check_config(config, ensemble);
  require_shapes(init, config, ensemble);

  DiffusionKernel kernel(config, ensemble);
  DenseMatrix current = init;
  DenseMatrix next(init.rows(), init.cols());
  FixedPointResult result;
  for (std::size_t it = 1; it <= options.max_iter; ++it) {
    kernel.advance_parallel(current, next);
    require_finite(next, it);
    const double update = normalized_update(current, next);
    std::swap(current, next);
    result.iterations_used = it;
    result.final_update_norm = update;
    if (options.trace) options.trace(it, update);
    if (update <= options.tol) {
      result.converged = true;
      break;
    }
  }
  result.w_infinity = std::move(current);
  return result;
}

FixedPointResult run_to_fixed_point(const DiffusionConfig& config,
                                    const CostEnsemble& ensemble,
                                    const FixedPointOptions& options) {
  return run_to_fixed_point(
      config, ensemble, DenseMatrix(config.nodes(), ensemble.dim()), options);
}

}  // namespace dpo
