#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "dpo/costs.hpp"
#include "dpo/diffusion.hpp"
#include "dpo/network.hpp"

namespace dpo {

enum class StepMode { equal, unequal_uniform_half };

std::string_view to_string(StepMode mode);
StepMode parse_step_mode(std::string_view name);

/// One sweep: every entry of `a_rules` is a scenario sharing the topology,
/// data and step-size shape, evaluated at every mu_max of the schedule.
struct ExperimentConfig {
  std::size_t n_nodes = 50;
  std::size_t dim = 4;
  std::size_t rows = 6;
  double avg_degree = 4.0;
  std::uint64_t topology_seed = 1;
  std::uint64_t data_seed = 2;
  std::uint64_t step_seed = 3;
  Strategy strategy = Strategy::atc;
  std::vector<WeightRule> a_rules{WeightRule::metropolis};
  WeightRule c_rule = WeightRule::relative_degree;
  StepMode step_mode = StepMode::equal;
  std::vector<double> mu_max_schedule;
  double tol = 1e-12;
  std::size_t max_iter = 1000000;
  /// Debug switch: every node gets the same cost, so the bias vanishes.
  bool identical_costs = false;
};

/// Parses a UTF-8 JSON object. Unknown fields and type errors raise
/// ValidationError. `a_rule` may be a single rule name or an array of them.
ExperimentConfig parse_experiment_config(std::string_view json_text);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
std::string to_json(const ExperimentConfig& config);

/// Structural checks that need no computation: sizes, rules, schedule.
void validate(const ExperimentConfig& config);

/// Everything a scenario shares across the schedule.
struct Scenario {
  std::string id;
  Topology topology;
  CostEnsemble ensemble;
  CombinationMatrix a;
  DiffusionConfig base;  ///< step sizes equal the normalized shape
  std::uint64_t fingerprint = 0;
};

/// Normalized step-size shape: all ones, or node 0 at one and every other
/// node drawn uniformly from [1/2, 1) with the step seed.
DenseVector step_shape(std::size_t n, StepMode mode, std::uint64_t step_seed);

std::vector<Scenario> build_scenarios(const ExperimentConfig& config);

struct SweepRow {
  std::string scenario_id;
  Strategy strategy = Strategy::atc;
  WeightRule a_rule = WeightRule::averaging;
  WeightRule c_rule = WeightRule::identity;
  StepMode step_mode = StepMode::equal;
  double mu_max = 0.0;
  double bias_sq_norm = 0.0;        ///< sum_k ||w° - w_k,inf||^2, iterated
  double limit_bias_sq_norm = 0.0;  ///< N * ||small-step limit||^2; 0 when assumption3 holds
  bool assumption3_satisfied = false;
  double spectral_radius = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  // Not written to CSV.
  double closed_form_sq_norm = 0.0;
  std::uint64_t fingerprint = 0;
};

/// Validates the configuration (including the step-size bound of every node
/// at the largest mu_max) before any run, then evaluates every
/// (scenario, mu_max) pair. Pairs run in parallel; rows come back ordered by
/// scenario and then by descending mu_max.
std::vector<SweepRow> run_sweep(const ExperimentConfig& config,
                                const TraceSink& progress = {});

enum class SweepField { bias_sq_norm, limit_bias_sq_norm, closed_form_sq_norm };

/// Least-squares slope of log(field) against log(mu_max).
double fit_loglog_slope(const std::vector<SweepRow>& rows,
                        SweepField field = SweepField::bias_sq_norm);

inline constexpr std::string_view kCsvHeader =
    "scenario_id,strategy,a_rule,c_rule,step_mode,mu_max,bias_sq_norm,"
    "limit_bias_sq_norm,assumption3_satisfied,spectral_radius,iterations,"
    "converged";

void write_csv(std::ostream& os, const std::vector<SweepRow>& rows);
void emit_csv(const std::vector<SweepRow>& rows,
              const std::filesystem::path& path);

/// gnuplot script plotting 10 log10(bias_sq_norm) against mu_max on a log
/// axis, one curve per scenario, with a dashed reference line at the
/// small-step limit when that limit is not zero. Data are embedded inline.
void write_plot_script(std::ostream& os, const std::vector<SweepRow>& rows,
                       std::string_view image_name);
void emit_plot_script(const std::vector<SweepRow>& rows,
                      const std::filesystem::path& path);

/// Built-in configurations for the four bias-versus-step-size figures:
/// ATC/CTA crossed with unequal/equal step sizes, each over the three rules
/// for A.
std::vector<std::pair<std::string, ExperimentConfig>> figure_configs();

/// Default seven-point schedule 1e-2 ... 1e-5 in half-decade steps.
std::vector<double> default_schedule();

}  // namespace dpo
