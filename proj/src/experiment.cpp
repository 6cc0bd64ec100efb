#include "dpo/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "dpo/bias.hpp"
#include "dpo/error.hpp"
#include "dpo/linalg.hpp"
#include "dpo/rng.hpp"

namespace dpo {

namespace {

using nlohmann::json;

std::string sci17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ull) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

template <class T>
T get_field(const json& j, const char* name) {
  try {
    return j.get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config field \"") + name +
                          "\" has the wrong type");
  }
}

std::size_t get_count(const json& j, const char* name) {
  if (!j.is_number_integer() || j.get<long long>() < 0) {
    throw ValidationError(std::string("config field \"") + name +
                          "\" must be a non-negative integer");
  }
  return j.get<std::size_t>();
}

std::uint64_t get_seed(const json& j, const char* name) {
  if (!j.is_number_integer() ||
      (!j.is_number_unsigned() && j.get<long long>() < 0)) {
    throw ValidationError(std::string("config field \"") + name +
                          "\" must be a non-negative integer");
  }
  return j.get<std::uint64_t>();
}

double get_real(const json& j, const char* name) {
  if (!j.is_number()) {
    throw ValidationError(std::string("config field \"") + name +
                          "\" must be a number");
  }
  return j.get<double>();
}

}  // namespace

std::string_view to_string(StepMode mode) {
  switch (mode) {
    case StepMode::equal: return "equal";
    case StepMode::unequal_uniform_half: return "unequal_uniform_half";
  }
  return "unknown";
}

StepMode parse_step_mode(std::string_view name) {
  for (auto m : {StepMode::equal, StepMode::unequal_uniform_half})
    if (to_string(m) == name) return m;
  throw ValidationError("unknown step_mode \"" + std::string(name) + "\"");
}

ExperimentConfig parse_experiment_config(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");

  ExperimentConfig cfg;
  for (const auto& [key, value] : doc.items()) {
    const char* k = key.c_str();
    if (key == "n_nodes") cfg.n_nodes = get_count(value, k);
    else if (key == "dim") cfg.dim = get_count(value, k);
    else if (key == "rows") cfg.rows = get_count(value, k);
    else if (key == "avg_degree") cfg.avg_degree = get_real(value, k);
    else if (key == "topology_seed") cfg.topology_seed = get_seed(value, k);
    else if (key == "data_seed") cfg.data_seed = get_seed(value, k);
    else if (key == "step_seed") cfg.step_seed = get_seed(value, k);
    else if (key == "strategy") {
      cfg.strategy = parse_strategy(get_field<std::string>(value, k));
      if (cfg.strategy == Strategy::general) {
        throw ValidationError("config strategy must be \"atc\" or \"cta\"");
      }
    } else if (key == "a_rule") {
      cfg.a_rules.clear();
      if (value.is_array()) {
        for (const auto& r : value)
          cfg.a_rules.push_back(parse_weight_rule(get_field<std::string>(r, k)));
      } else {
        cfg.a_rules.push_back(parse_weight_rule(get_field<std::string>(value, k)));
      }
    } else if (key == "c_rule") {
      cfg.c_rule = parse_weight_rule(get_field<std::string>(value, k));
    } else if (key == "step_mode") {
      cfg.step_mode = parse_step_mode(get_field<std::string>(value, k));
    } else if (key == "mu_max_schedule") {
      if (!value.is_array()) {
        throw ValidationError("config field \"mu_max_schedule\" must be an array");
      }
      cfg.mu_max_schedule.clear();
      for (const auto& mu : value) cfg.mu_max_schedule.push_back(get_real(mu, k));
    } else if (key == "tol") cfg.tol = get_real(value, k);
    else if (key == "max_iter") cfg.max_iter = get_count(value, k);
    else if (key == "identical_costs") cfg.identical_costs = get_field<bool>(value, k);
    else throw ValidationError("unknown config field \"" + key + "\"");
  }
  validate(cfg);
  return cfg;
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot read config " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_experiment_config(buf.str());
}

std::string to_json(const ExperimentConfig& config) {
  json::array_t rules;
  for (auto r : config.a_rules) rules.emplace_back(std::string(to_string(r)));
  nlohmann::ordered_json doc;
  doc["n_nodes"] = config.n_nodes;
  doc["dim"] = config.dim;
  doc["rows"] = config.rows;
  doc["avg_degree"] = config.avg_degree;
  doc["topology_seed"] = config.topology_seed;
  doc["data_seed"] = config.data_seed;
  doc["step_seed"] = config.step_seed;
  doc["strategy"] = std::string(to_string(config.strategy));
  doc["a_rule"] = rules;
  doc["c_rule"] = std::string(to_string(config.c_rule));
  doc["step_mode"] = std::string(to_string(config.step_mode));
  doc["mu_max_schedule"] = config.mu_max_schedule;
  doc["tol"] = config.tol;
  doc["max_iter"] = config.max_iter;
  doc["identical_costs"] = config.identical_costs;
  return doc.dump(2) + "\n";
}

void validate(const ExperimentConfig& config) {
  if (config.n_nodes < 2) throw ValidationError("n_nodes must be at least 2");
  if (config.dim < 1 || config.rows < 1) {
    throw ValidationError("dim and rows must be positive");
  }
  if (config.a_rules.empty()) throw ValidationError("a_rule list is empty");
  for (auto r : config.a_rules) {
    if (r == WeightRule::identity) {
      throw ValidationError("a_rule must be averaging, relative_degree or "
                            "metropolis");
    }
  }
  if (config.c_rule == WeightRule::metropolis) {
    throw ValidationError("c_rule must be averaging, relative_degree or "
                          "identity");
  }
  if (config.strategy == Strategy::general) {
    throw ValidationError("strategy must be atc or cta");
  }
  if (config.mu_max_schedule.empty()) {
    throw ValidationError("mu_max_schedule is empty");
  }
  for (double mu : config.mu_max_schedule) {
    if (!(mu > 0.0) || !std::isfinite(mu)) {
      throw ValidationError("mu_max_schedule entries must be positive");
    }
  }
  if (!(config.tol > 0.0)) throw ValidationError("tol must be positive");
}

DenseVector step_shape(std::size_t n, StepMode mode, std::uint64_t step_seed) {
  DenseVector shape(n, 1.0);
  if (mode == StepMode::unequal_uniform_half) {
    SplitMix64 rng(step_seed);
    for (std::size_t k = 1; k < n; ++k) shape[k] = rng.uniform(0.5, 1.0);
  }
  return shape;
}

std::vector<Scenario> build_scenarios(const ExperimentConfig& config) {
  validate(config);
  const Topology topology = generate_topology(
      config.n_nodes, config.avg_degree, config.topology_seed);
  const CostEnsemble ensemble =
      config.identical_costs
          ? sample_identical_ensemble(config.n_nodes, config.dim, config.rows,
                                      config.data_seed)
          : sample_ensemble(config.n_nodes, config.dim, config.rows,
                            config.data_seed);
  const DenseVector shape =
      step_shape(config.n_nodes, config.step_mode, config.step_seed);
  const CombinationMatrix c = build_C(topology, config.c_rule);

  std::string shape_text;
  for (double x : shape) shape_text += sci17(x) + "\n";
  const std::uint64_t fingerprint = fnv1a(
      shape_text, fnv1a(to_text(ensemble), fnv1a(to_edge_list(topology))));

  std::vector<Scenario> out;
  for (WeightRule rule : config.a_rules) {
    CombinationMatrix a = build_A(topology, rule);
    const CombinationPair pair = config.strategy == Strategy::atc
                                     ? preset_atc(a)
                                     : preset_cta(a);
    std::string id = std::string(to_string(config.strategy)) + "_" +
                     std::string(to_string(rule)) + "_" +
                     std::string(to_string(config.c_rule)) + "_" +
                     std::string(to_string(config.step_mode));
    out.push_back({std::move(id), topology, ensemble, a,
                   make_config(pair, c, shape), fingerprint});
  }
  return out;
}

std::vector<SweepRow> run_sweep(const ExperimentConfig& config,
                                const TraceSink& progress) {
  const std::vector<Scenario> scenarios = build_scenarios(config);
  std::vector<double> schedule = config.mu_max_schedule;
  std::sort(schedule.begin(), schedule.end(), std::greater<>());
  const double largest = schedule.front();

  struct Prepared {
    DenseVector limit;
    Assumption3Report a3;
  };
  std::vector<Prepared> prepared;
  for (const Scenario& s : scenarios) {
    // Rejects before any run, naming the violating node.
    check_config(s.base.with_mu_max(largest), s.ensemble);
    const DenseVector theta = perron_theta(s.base.a1, s.base.a2).theta;
    prepared.push_back(
        {limit_bias(s.base, s.ensemble),
         check_assumption3(theta, s.base.a2, s.base.normalized_steps(),
                           s.base.c)});
  }

  const std::size_t per = schedule.size();
  const std::size_t total = scenarios.size() * per;
  std::vector<SweepRow> rows(total);
  std::vector<std::exception_ptr> errors(total);
  std::mutex trace_lock;
  const auto count = static_cast<std::ptrdiff_t>(total);

#pragma omp parallel for schedule(dynamic)
  for (std::ptrdiff_t t = 0; t < count; ++t) {
    const auto idx = static_cast<std::size_t>(t);
    const Scenario& s = scenarios[idx / per];
    const Prepared& p = prepared[idx / per];
    const double mu = schedule[idx % per];
    try {
      const DiffusionConfig cfg = s.base.with_mu_max(mu);
      FixedPointOptions opts{config.tol, config.max_iter, {}};
      if (progress) {
        opts.trace = [&](std::size_t it, double update) {
          std::lock_guard<std::mutex> guard(trace_lock);
          progress(it, update);
        };
      }
      const FixedPointResult fp = run_to_fixed_point(cfg, s.ensemble, opts);
      const DenseVector w_opt = global_optimum(s.ensemble);

      SweepRow row;
      row.scenario_id = s.id;
      row.strategy = config.strategy;
      row.a_rule = s.a.rule;
      row.c_rule = config.c_rule;
      row.step_mode = config.step_mode;
      row.mu_max = mu;
      for (std::size_t k = 0; k < cfg.nodes(); ++k)
        for (std::size_t j = 0; j < s.ensemble.dim(); ++j) {
          const double e = w_opt[j] - fp.w_infinity(k, j);
          row.bias_sq_norm += e * e;
        }
      // The limit vanishes analytically when the weighted sums are balanced;
      // report it as exactly zero rather than round-off.
      row.limit_bias_sq_norm =
          p.a3.satisfied
              ? 0.0
              : static_cast<double>(cfg.nodes()) * dot(p.limit, p.limit);
      row.assumption3_satisfied = p.a3.satisfied;
      row.spectral_radius = spectral_check(cfg, s.ensemble).radius;
      row.iterations = fp.iterations_used;
      row.converged = fp.converged;
      const DenseVector exact = closed_form_bias(cfg, s.ensemble);
      row.closed_form_sq_norm = dot(exact, exact);
      row.fingerprint = s.fingerprint;
      rows[idx] = std::move(row);
    } catch (...) {
      errors[idx] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  return rows;
}

double fit_loglog_slope(const std::vector<SweepRow>& rows, SweepField field) {
  if (rows.size() < 3) {
    throw ValidationError("slope fit needs at least 3 rows");
  }
  double lo = rows.front().mu_max;
  double hi = lo;
  std::vector<double> xs;
  std::vector<double> ys;
  for (const SweepRow& r : rows) {
    const double v = field == SweepField::bias_sq_norm ? r.bias_sq_norm
                     : field == SweepField::limit_bias_sq_norm
                         ? r.limit_bias_sq_norm
                         : r.closed_form_sq_norm;
    if (!(v > 0.0) || !(r.mu_max > 0.0)) {
      throw ValidationError(
          "slope fit is inapplicable: a value is zero or negative (the bias "
          "may have vanished to round-off)");
    }
    lo = std::min(lo, r.mu_max);
    hi = std::max(hi, r.mu_max);
    xs.push_back(std::log(r.mu_max));
    ys.push_back(std::log(v));
  }
  if (hi < 10.0 * lo * (1.0 - 1e-12)) {
    throw ValidationError("slope fit needs mu_max to span at least a decade");
  }
  const double n = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
  }
  return sxy / sxx;
}

void write_csv(std::ostream& os, const std::vector<SweepRow>& rows) {
  os << kCsvHeader << '\n';
  for (const SweepRow& r : rows) {
    os << r.scenario_id << ',' << to_string(r.strategy) << ','
       << to_string(r.a_rule) << ',' << to_string(r.c_rule) << ','
       << to_string(r.step_mode) << ',' << sci17(r.mu_max) << ','
       << sci17(r.bias_sq_norm) << ',' << sci17(r.limit_bias_sq_norm) << ','
       << (r.assumption3_satisfied ? "true" : "false") << ','
       << sci17(r.spectral_radius) << ',' << r.iterations << ','
       << (r.converged ? "true" : "false") << '\n';
  }
}

void emit_csv(const std::vector<SweepRow>& rows,
              const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  write_csv(out, rows);
  if (!out) throw Error("failed while writing " + path.string());
}

void write_plot_script(std::ostream& os, const std::vector<SweepRow>& rows,
                       std::string_view image_name) {
  // Group rows by scenario, keeping first-seen order.
  std::vector<std::string> order;
  std::map<std::string, std::vector<const SweepRow*>> groups;
  for (const SweepRow& r : rows) {
    if (!groups.count(r.scenario_id)) order.push_back(r.scenario_id);
    groups[r.scenario_id].push_back(&r);
  }

  os << "# Squared norm of the steady-state bias against the largest step "
        "size.\n"
     << "# Dashed lines: predicted small-step limit (omitted when zero).\n"
     << "set terminal pngcairo size 900,650\n"
     << "set output '" << image_name << "'\n"
     << "set logscale x\n"
     << "set format x '10^{%L}'\n"
     << "set xlabel 'largest step size mu_max'\n"
     << "set ylabel 'squared norm of bias (dB)'\n"
     << "set key outside right\n"
     << "set grid\n";
  for (std::size_t i = 0; i < order.size(); ++i) {
    os << "$scenario" << i << " << EOD\n";
    for (const SweepRow* r : groups[order[i]])
      os << sci17(r->mu_max) << ' ' << sci17(r->bias_sq_norm) << '\n';
    os << "EOD\n";
  }
  if (order.empty()) {
    os << "set xrange [1e-5:1e-2]\n"
       << "plot NaN notitle\n";
    return;
  }
  os << "plot \\\n";
  bool first = true;
  for (std::size_t i = 0; i < order.size(); ++i) {
    const auto& g = groups[order[i]];
    os << (first ? "  " : ", \\\n  ") << "$scenario" << i
       << " using 1:(10*log10($2)) with linespoints lt " << i + 1
       << " title '" << order[i] << "'";
    first = false;
    const double limit = g.front()->limit_bias_sq_norm;
    if (limit > 0.0) {
      os << ", \\\n  " << sci17(10.0 * std::log10(limit))
         << " with lines dt 2 lt " << i + 1 << " title '" << order[i]
         << " (limit)'";
    }
  }
  os << "\n";
}

void emit_plot_script(const std::vector<SweepRow>& rows,
                      const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  std::filesystem::path image = path.filename();
  image.replace_extension(".png");
  write_plot_script(out, rows, image.string());
  if (!out) throw Error("failed while writing " + path.string());
}

std::vector<double> default_schedule() {
  std::vector<double> s;
  for (int i = 0; i <= 6; ++i) s.push_back(std::pow(10.0, -2.0 - 0.5 * i));
  return s;
}

std::vector<std::pair<std::string, ExperimentConfig>> figure_configs() {
  const std::vector<WeightRule> all{WeightRule::averaging,
                                    WeightRule::relative_degree,
                                    WeightRule::metropolis};
  auto make = [&](Strategy s, WeightRule c, StepMode mode) {
    ExperimentConfig cfg;
    cfg.strategy = s;
    cfg.a_rules = all;
    cfg.c_rule = c;
    cfg.step_mode = mode;
    cfg.mu_max_schedule = default_schedule();
    return cfg;
  };
  return {
      {"fig1", make(Strategy::atc, WeightRule::relative_degree,
                    StepMode::unequal_uniform_half)},
      {"fig2", make(Strategy::cta, WeightRule::averaging,
                    StepMode::unequal_uniform_half)},
      {"fig3", make(Strategy::atc, WeightRule::relative_degree, StepMode::equal)},
      {"fig4", make(Strategy::cta, WeightRule::averaging, StepMode::equal)},
  };
}

}  // namespace dpo
