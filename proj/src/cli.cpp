#include "dpo/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>

#include "dpo/bias.hpp"
#include "dpo/error.hpp"
#include "dpo/experiment.hpp"
#include "dpo/linalg.hpp"

namespace dpo {

namespace {

namespace fs = std::filesystem;

std::string g(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", x);
  return buf;
}

std::string e6(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6e", x);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("failed while writing " + path.string());
}

// Returns false when a hard requirement (Hessian bounds, step-size bound,
// primitivity) fails.
bool report_scenario(const Scenario& s, double mu_max, std::ostream& out) {
  bool ok = true;
  const DiffusionConfig cfg = s.base.with_mu_max(mu_max);
  out << "Scenario " << s.id << " (mu_max=" << g(mu_max) << ")\n";

  const Assumption1Report a1 = check_assumption1(cfg.c, s.ensemble);
  const double weakest =
      *std::min_element(a1.weighted_min.begin(), a1.weighted_min.end());
  out << "  Assumption 1: " << (a1.satisfied ? "SATISFIED" : "VIOLATED")
      << " (min_k sum_l c_lk lambda_l,min=" << g(weakest) << ")\n";
  ok = ok && a1.satisfied;

  if (a1.satisfied) {
    double worst = 0.0;
    std::size_t worst_node = 0;
    for (std::size_t k = 0; k < cfg.nodes(); ++k) {
      const double ratio =
          cfg.step_sizes[k] / max_step_size(k, cfg.c, s.ensemble);
      if (ratio > worst) {
        worst = ratio;
        worst_node = k;
      }
    }
    const bool stable = worst < 1.0;
    out << "  Step-size bound: " << (stable ? "SATISFIED" : "VIOLATED")
        << " (max_k mu_k/bound_k=" << g(worst) << " at node " << worst_node
        << ")\n";
    ok = ok && stable;
  }

  DenseVector theta;
  try {
    theta = perron_theta(cfg.a1, cfg.a2).theta;
    out << "  Assumption 2: SATISFIED (A1*A2 left-stochastic and primitive)\n";
  } catch (const AssumptionError& e) {
    out << "  Assumption 2: VIOLATED (" << e.what() << ")\n";
    return false;
  }

  const Assumption3Report a3 =
      check_assumption3(theta, cfg.a2, cfg.normalized_steps(), cfg.c);
  if (a3.satisfied) {
    out << "  Assumption 3: SATISFIED (c0=" << g(a3.c0_estimate) << ")\n";
  } else {
    out << "  Assumption 3: NOT SATISFIED (c0=" << g(a3.c0_estimate)
        << ", max deviation=" << g(a3.max_deviation) << ")\n";
  }

  if (ok) {
    const SpectralCheck sc = spectral_check(cfg, s.ensemble);
    out << "  Spectral radius: " << e6(sc.radius)
        << (sc.warning ? " (WARNING: not below 1)" : " (< 1)")
        << (sc.converged ? "" : " [estimate, not converged]") << "\n";
    const DenseVector lim = limit_bias(cfg, s.ensemble);
    out << "  Small-step limit bias, squared norm over all nodes: "
        << e6(static_cast<double>(cfg.nodes()) * dot(lim, lim)) << "\n";
  }
  return ok;
}

int run_check(const std::string& config_path, const std::string& json_path,
              std::ostream& out) {
  const ExperimentConfig config = load_experiment_config(config_path);
  const std::vector<Scenario> scenarios = build_scenarios(config);
  const double mu_max = *std::max_element(config.mu_max_schedule.begin(),
                                          config.mu_max_schedule.end());
  const Topology& topo = scenarios.front().topology;
  out << "Topology: N=" << topo.size() << ", edges=" << topo.edge_count()
      << ", average degree " << g(topo.average_degree()) << "\n";
  bool ok = true;
  for (const Scenario& s : scenarios) ok = report_scenario(s, mu_max, out) && ok;
  if (!ok) return 1;

  if (!json_path.empty()) {
    for (const Scenario& s : scenarios) {
      fs::path path = json_path;
      if (scenarios.size() > 1) {
        path.replace_filename(path.stem().string() + "_" + s.id +
                              path.extension().string());
      }
      const BiasReport report = build_bias_report(
          s.base.with_mu_max(mu_max), s.ensemble,
          {config.tol, config.max_iter, {}});
      write_text(path, to_json(report));
      out << "Wrote " << path.string() << "\n";
    }
  }
  return 0;
}

int run_sweep_cmd(const std::string& config_path, const std::string& csv_path,
                  const std::string& plot_path, bool progress,
                  std::ostream& out, std::ostream& err) {
  const ExperimentConfig config = load_experiment_config(config_path);
  TraceSink sink;
  if (progress) {
    sink = [&err](std::size_t it, double update) {
      if (it % 100000 == 0) {
        err << "  iteration " << it << ", update " << e6(update) << "\n";
      }
    };
  }
  const std::vector<SweepRow> rows = run_sweep(config, sink);
  emit_csv(rows, csv_path);
  out << "Wrote " << rows.size() << " rows to " << csv_path << "\n";
  if (!plot_path.empty()) {
    emit_plot_script(rows, plot_path);
    out << "Wrote " << plot_path << "\n";
  }
  return 0;
}

int run_figures(const std::string& outdir, std::ostream& out) {
  fs::create_directories(outdir);
  for (const auto& [name, config] : figure_configs()) {
    const fs::path base = fs::path(outdir) / name;
    write_text(base.string() + ".json", to_json(config));
    const std::vector<SweepRow> rows = run_sweep(config);
    emit_csv(rows, base.string() + ".csv");
    emit_plot_script(rows, base.string() + ".gp");
    out << name << ": " << rows.size() << " rows -> " << base.string()
        << ".csv, " << base.string() << ".gp\n";
  }
  return 0;
}

int run_topo(std::size_t n, double degree, std::uint64_t seed,
             const std::string& path, std::ostream& out) {
  const Topology topo = generate_topology(n, degree, seed);
  if (path.empty() || path == "-") {
    write_edge_list(out, topo);
  } else {
    write_text(path, to_edge_list(topo));
  }
  return 0;
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out,
             std::ostream& err) {
  CLI::App app{"Diffusion Pareto optimization: steady-state bias toolkit",
               "dpo_cli"};
  app.require_subcommand(1);

  std::string config_path;
  std::string csv_path;
  std::string plot_path;
  std::string json_path;
  std::string outdir;
  std::string topo_out;
  bool progress = false;
  std::size_t topo_n = 50;
  double topo_deg = 4.0;
  std::uint64_t topo_seed = 1;

  auto* sweep = app.add_subcommand("sweep", "Run a step-size sweep");
  sweep->add_option("--config", config_path, "JSON experiment config")
      ->required();
  sweep->add_option("--out", csv_path, "CSV output path")->required();
  sweep->add_option("--plot", plot_path, "gnuplot script output path");
  sweep->add_flag("--progress", progress, "Print iteration progress");

  auto* check = app.add_subcommand(
      "check", "Check modelling assumptions at the largest step size");
  check->add_option("--config", config_path, "JSON experiment config")
      ->required();
  check->add_option("--json", json_path,
                    "Also run to the fixed point and write a JSON bias report");

  auto* figures =
      app.add_subcommand("figures", "Run the four built-in figure sweeps");
  figures->add_option("--outdir", outdir, "Output directory")->required();

  auto* topo = app.add_subcommand("topo", "Generate a random topology");
  topo->add_option("--n", topo_n, "Number of nodes")->required();
  topo->add_option("--deg", topo_deg, "Target average degree")->required();
  topo->add_option("--seed", topo_seed, "Seed")->required();
  topo->add_option("--out", topo_out, "Edge-list output path ('-' = stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return 1;
  }

  try {
    if (*sweep) return run_sweep_cmd(config_path, csv_path, plot_path, progress, out, err);
    if (*check) return run_check(config_path, json_path, out);
    if (*figures) return run_figures(outdir, out);
    if (*topo) return run_topo(topo_n, topo_deg, topo_seed, topo_out, out);
  } catch (const ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 1;
}

}  // namespace dpo
