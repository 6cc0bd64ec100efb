#include "dpo/bias.hpp"

#include <cmath>
#include <cstdio>
#include <exception>
#include <sstream>

#include "dpo/error.hpp"
#include "dpo/linalg.hpp"

namespace dpo {

namespace {

constexpr int kSquarings = 12;

DenseMatrix lift(const DenseMatrix& a, std::size_t m) {
  return kron(a, DenseMatrix::identity(m));
}

DenseMatrix lift_diagonal(const DenseVector& d, std::size_t m) {
  return lift(DenseMatrix::diagonal(d.span()), m);
}

// (1 x I_M): MN x M
DenseMatrix stack_identity(std::size_t n, std::size_t m) {
  return lift(DenseMatrix(n, 1, 1.0), m);
}

// (v' x I_M): M x MN
DenseMatrix weighted_row(const DenseVector& v, std::size_t m) {
  return lift(DenseMatrix(1, v.size(), v.values()), m);
}

std::string fmt17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace

DenseMatrix r_infinity(const CombinationMatrix& c, const CostEnsemble& ensemble,
                       const DenseVector& w_star) {
  const std::size_t n = ensemble.size();
  const std::size_t m = ensemble.dim();
  if (c.size() != n || w_star.size() != m) {
    throw DimensionError("r_infinity: C, costs and w* disagree in size");
  }
  std::vector<DenseMatrix> hessians;
  hessians.reserve(n);
  for (const auto& cost : ensemble.costs())
    hessians.push_back(cost.hessian(w_star.span()));

  DenseMatrix r(n * m, n * m);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) {
      const double w = c(l, k);
      if (w == 0.0) continue;
      for (std::size_t p = 0; p < m; ++p)
        for (std::size_t q = 0; q < m; ++q)
          r(k * m + p, k * m + q) += w * hessians[l](p, q);
    }
  return r;
}

DenseMatrix error_propagation_matrix(const DiffusionConfig& config,
                                     const CostEnsemble& ensemble) {
  const std::size_t n = config.nodes();
  const std::size_t m = ensemble.dim();
  const DenseVector w_opt = global_optimum(ensemble);
  const DenseMatrix r = r_infinity(config.c, ensemble, w_opt);
  const DenseMatrix inner = DenseMatrix::identity(n * m) -
                            mat_mul(lift_diagonal(config.step_sizes, m), r);
  return mat_mul(lift(transpose(config.a2.matrix), m),
                 mat_mul(inner, lift(transpose(config.a1.matrix), m)));
}

SpectralCheck spectral_check(const DiffusionConfig& config,
                             const CostEnsemble& ensemble) {
  DenseMatrix p = error_propagation_matrix(config, ensemble);
  // B^(2^j) = exp(log_scale) * p after j renormalized squarings.
  double log_scale = 0.0;
  for (int j = 0; j < kSquarings; ++j) {
    p = mat_mul(p, p);
    const double s = norm_inf(p);
    if (s == 0.0) return {0.0, true, false};
    p = (1.0 / s) * p;
    log_scale = 2.0 * log_scale + std::log(s);
  }
  const SpectralEstimate est = spectral_radius(p, 1e-12, 20000);
  if (est.value == 0.0) return {0.0, est.converged, false};
  const double power = std::ldexp(1.0, kSquarings);
  const double radius = std::exp((log_scale + std::log(est.value)) / power);
  return {radius, est.converged, !(radius < 1.0)};
}

DenseVector closed_form_bias(const DiffusionConfig& config,
                             const CostEnsemble& ensemble) {
  const std::size_t n = config.nodes();
  const std::size_t m = ensemble.dim();
  if (ensemble.size() != n) {
    throw DimensionError("closed_form_bias: config covers " +
                         std::to_string(n) + " nodes, ensemble " +
                         std::to_string(ensemble.size()));
  }
  const DenseVector w_opt = global_optimum(ensemble);
  const DenseVector g = stacked_gradient(ensemble, w_opt);
  const DenseMatrix b = error_propagation_matrix(config, ensemble);
  const DenseMatrix lhs = DenseMatrix::identity(n * m) - b;

  DenseVector rhs = mat_vec(lift(transpose(config.c.matrix), m), g);
  const DenseMatrix mu = lift_diagonal(config.step_sizes, m);
  rhs = mat_vec(mu, rhs);
  rhs = mat_vec(lift(transpose(config.a2.matrix), m), rhs);

  try {
    return LuFactorization(lhs).solve(rhs);
  } catch (const SingularMatrixError& e) {
    const SpectralCheck sc = spectral_check(config, ensemble);
    throw SingularMatrixError(
        std::string(e.what()) +
            "; spectral radius of the error-propagation matrix is " +
            fmt17(sc.radius) + (sc.warning ? " (not below one)" : ""),
        e.pivot());
  }
}

LimitOperators limit_operators(const DiffusionConfig& config,
                               const CostEnsemble& ensemble) {
  const std::size_t n = config.nodes();
  const std::size_t m = ensemble.dim();
  LimitOperators ops;
  ops.theta = perron_theta(config.a1, config.a2).theta;
  const DenseVector omega0 = config.normalized_steps();
  ops.z_vector = mat_vec(config.a2.matrix, ops.theta);
  for (std::size_t k = 0; k < n; ++k) ops.z_vector[k] *= omega0[k];

  const DenseMatrix a1t = lift(transpose(config.a1.matrix), m);
  const DenseMatrix a2t = lift(transpose(config.a2.matrix), m);
  ops.x_op = DenseMatrix::identity(n * m) - mat_mul(a2t, a1t);

  const DenseVector w_opt = global_optimum(ensemble);
  const DenseMatrix r = r_infinity(config.c, ensemble, w_opt);
  ops.y_op = mat_mul(a2t, mat_mul(lift_diagonal(omega0, m), mat_mul(r, a1t)));

  const DenseMatrix ones = stack_identity(n, m);
  const DenseMatrix theta_row = weighted_row(ops.theta, m);
  const DenseMatrix reduced = mat_mul(theta_row, mat_mul(ops.y_op, ones));
  try {
    ops.d_matrix = LuFactorization(reduced).solve(DenseMatrix::identity(m));
  } catch (const SingularMatrixError& e) {
    throw AssumptionError(
        std::string("small-step limit undefined: the z-weighted combined "
                    "Hessian is singular (") +
        e.what() + ")");
  }
  ops.z_op = mat_mul(ones, mat_mul(ops.d_matrix, theta_row));
  return ops;
}

DenseVector limit_bias(const DiffusionConfig& config,
                       const CostEnsemble& ensemble) {
  const std::size_t n = config.nodes();
  const std::size_t m = ensemble.dim();
  const DenseVector theta = perron_theta(config.a1, config.a2).theta;
  const DenseVector omega0 = config.normalized_steps();
  DenseVector z = mat_vec(config.a2.matrix, theta);
  for (std::size_t k = 0; k < n; ++k) z[k] *= omega0[k];

  const DenseVector w_opt = global_optimum(ensemble);
  DenseMatrix h(m, m);
  DenseVector g(m);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) {
      const double w = z[k] * config.c(l, k);
      if (w == 0.0) continue;
      const DenseMatrix hl = ensemble[l].hessian(w_opt.span());
      for (std::size_t p = 0; p < m; ++p)
        for (std::size_t q = 0; q < m; ++q) h(p, q) += w * hl(p, q);
      ensemble[l].accumulate_gradient(w_opt.span(), w, g.span());
    }
  try {
    return solve_linear(h, g);
  } catch (const SingularMatrixError& e) {
    throw AssumptionError(
        std::string("small-step limit undefined: the z-weighted combined "
                    "Hessian is singular (") +
        e.what() + ")");
  }
}

DenseVector limit_bias(const LimitOperators& ops, const DiffusionConfig& config,
                       const CostEnsemble& ensemble) {
  const std::size_t m = ensemble.dim();
  const DenseVector w_opt = global_optimum(ensemble);
  const DenseVector g = stacked_gradient(ensemble, w_opt);
  // (z' C' x I) g = sum_l (C z)_l g_l
  const DenseVector cz = mat_vec(config.c.matrix, ops.z_vector);
  DenseVector folded(m);
  for (std::size_t l = 0; l < cz.size(); ++l)
    for (std::size_t j = 0; j < m; ++j) folded[j] += cz[l] * g[l * m + j];
  return mat_vec(ops.d_matrix, folded);
}

DenseVector replicate(const DenseVector& per_node, std::size_t nodes) {
  const std::size_t m = per_node.size();
  DenseVector out(nodes * m);
  for (std::size_t k = 0; k < nodes; ++k)
    for (std::size_t j = 0; j < m; ++j) out[k * m + j] = per_node[j];
  return out;
}

std::vector<LimitConvergenceRow> verify_limit_convergence(
    const DiffusionConfig& config, const CostEnsemble& ensemble,
    const std::vector<double>& mu_schedule) {
  if (mu_schedule.empty()) {
    throw ValidationError("verify_limit_convergence: empty schedule");
  }
  std::vector<DiffusionConfig> points;
  points.reserve(mu_schedule.size());
  for (std::size_t i = 0; i < mu_schedule.size(); ++i) {
    if (i > 0 && !(mu_schedule[i] < mu_schedule[i - 1])) {
      throw ValidationError(
          "verify_limit_convergence: schedule must be strictly decreasing");
    }
    points.push_back(config.with_mu_max(mu_schedule[i]));
    check_config(points.back(), ensemble);
  }

  const DenseVector limit =
      replicate(limit_bias(config, ensemble), config.nodes());
  std::vector<LimitConvergenceRow> table(points.size());
  std::vector<std::exception_ptr> errors(points.size());
  const auto count = static_cast<std::ptrdiff_t>(points.size());
#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    try {
      const DenseVector b = closed_form_bias(points[idx], ensemble);
      table[idx] = {mu_schedule[idx], norm2(b - limit), norm2(b)};
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return table;
}

BiasReport build_bias_report(const DiffusionConfig& config,
                             const CostEnsemble& ensemble,
                             const FixedPointOptions& options) {
  const FixedPointResult fp = run_to_fixed_point(config, ensemble, options);
  const DenseVector w_opt = global_optimum(ensemble);
  BiasReport report;
  report.empirical_bias = DenseMatrix(config.nodes(), ensemble.dim());
  for (std::size_t k = 0; k < config.nodes(); ++k)
    for (std::size_t j = 0; j < ensemble.dim(); ++j)
      report.empirical_bias(k, j) = w_opt[j] - fp.w_infinity(k, j);
  report.closed_form_bias = closed_form_bias(config, ensemble);
  report.limit_bias = limit_bias(config, ensemble);
  const SpectralCheck sc = spectral_check(config, ensemble);
  report.spectral_radius = sc.radius;
  report.spectral_converged = sc.converged;
  const DenseVector theta = perron_theta(config.a1, config.a2).theta;
  report.assumption3 = check_assumption3(theta, config.a2,
                                         config.normalized_steps(), config.c);
  return report;
}

std::string to_json(const BiasReport& report) {
  std::ostringstream os;
  auto array = [&os](std::span<const double> v) {
    os << '[';
    for (std::size_t i = 0; i < v.size(); ++i)
      os << (i ? ", " : "") << fmt17(v[i]);
    os << ']';
  };
  os << "{\n  \"empirical_bias\": [";
  for (std::size_t k = 0; k < report.empirical_bias.rows(); ++k) {
    os << (k ? ", " : "");
    array(report.empirical_bias.row(k));
  }
  os << "],\n  \"closed_form_bias\": ";
  array(report.closed_form_bias.span());
  os << ",\n  \"limit_bias\": ";
  array(report.limit_bias.span());
  os << ",\n  \"spectral_radius\": " << fmt17(report.spectral_radius);
  os << ",\n  \"assumption3\": {\"satisfied\": "
     << (report.assumption3.satisfied ? "true" : "false")
     << ", \"c0\": " << fmt17(report.assumption3.c0_estimate)
     << ", \"max_deviation\": " << fmt17(report.assumption3.max_deviation)
     << "}\n}\n";
  return os.str();
}

}  // namespace dpo
