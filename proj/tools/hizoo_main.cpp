// Command-line front end: run experiments, compare optimizers, sweep
// hyperparameter grids, verify the estimator identities and plot results.
//
// Exit codes: 0 success / threshold reached, 2 threshold not reached,
// 3 diverged, 64 configuration error. Verification failures exit 1.

#include <cstdio>
#include <iostream>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "hizoo/hizoo.hpp"

namespace {

using namespace hizoo;

int cmd_run(const std::string& config_path, const std::string& out_override,
            bool seed_given, std::uint64_t seed_override) {
  ExperimentConfig cfg = load_config(config_path);
  if (!out_override.empty()) cfg.out_path = out_override;
  if (seed_given) cfg.master_seed = seed_override;
  const Trajectory traj = run_experiment(cfg);
  std::printf("status=%s steps=%zu final_loss=%s fwd_passes=%llu%s%s\n",
              run_status_name(traj.status).c_str(), traj.records.size(),
              format_double(traj.final_loss).c_str(),
              static_cast<unsigned long long>(traj.total_fwd_passes),
              cfg.out_path.empty() ? "" : " csv=",
              cfg.out_path.c_str());
  return exit_code_for(traj, cfg.loss_threshold.has_value());
}

int cmd_compare(const std::string& objective_id,
                const std::vector<std::string>& optimizer_ids,
                double threshold, const std::string& out_path,
                const std::vector<double>& lr_grid, std::uint64_t steps,
                double mu, double alpha, std::uint64_t seed,
                std::vector<double> start, const std::string& baseline) {
  ExperimentConfig probe;
  probe.objective_id = objective_id;
  const Objective obj = make_objective(probe);
  if (start.empty()) start.assign(obj.dim, 1.0);
  const ParamVector theta0{start};

  // Each optimizer picks its best constant learning rate from the shared
  // grid (fewest steps to threshold; not reached sorts last).
  std::vector<CompareEntry> entries;
  for (const auto& id : optimizer_ids) {
    OptimizerConfig best;
    std::uint64_t best_steps = 0;
    bool found = false;
    for (double lr : lr_grid) {
      OptimizerConfig cand;
      cand.mu = mu;
      cand.alpha = alpha;
      cand.lr = lr;
      cand.steps = steps;
      StoppingRule stop;
      stop.max_steps = steps;
      stop.loss_threshold = threshold;
      const Trajectory traj = run_loop(optimizer_kind_from_id(id), cand, obj,
                                       stop, theta0, seed);
      if (traj.steps_to_threshold &&
          (!found || *traj.steps_to_threshold < best_steps)) {
        best = cand;
        best_steps = *traj.steps_to_threshold;
        found = true;
      }
    }
    if (!found) {
      // No grid point reached the threshold; keep the smallest rate so the
      // report still carries a row for this optimizer.
      best.mu = mu;
      best.alpha = alpha;
      best.lr = lr_grid.front();
      best.steps = steps;
    }
    entries.push_back({id, best});
  }

  const ComparisonReport report =
      compare(obj, theta0, entries, threshold, seed, baseline);
  if (!out_path.empty()) write_comparison_csv(report, out_path);
  std::fputs(comparison_csv_string(report).c_str(), stdout);
  bool all_reached = true;
  for (const auto& row : report.rows) {
    if (!row.steps_to_threshold) all_reached = false;
  }
  return all_reached ? 0 : 2;
}

int cmd_sweep(const std::string& config_path,
              const std::vector<std::string>& grid_args,
              const std::string& out_path, std::size_t cap) {
  const ExperimentConfig base = load_config(config_path);
  SweepGrid grid;
  for (const auto& arg : grid_args) {
    const auto eq = arg.find('=');
    if (eq == std::string::npos) {
      throw config_error("--grid expects KEY=V1,V2,..., got '" + arg + "'");
    }
    std::vector<std::string> values;
    for (auto v : split_view(std::string_view(arg).substr(eq + 1), ',')) {
      values.emplace_back(trim_view(v));
    }
    grid.axes.emplace_back(arg.substr(0, eq), std::move(values));
  }
  const SweepResult result = sweep(base, grid, cap);
  if (!out_path.empty()) write_sweep_csv(result, out_path);
  std::fputs(sweep_csv_string(result).c_str(), stdout);
  return 0;
}

int cmd_verify(const std::vector<std::string>& suites, std::uint64_t samples,
               std::uint64_t seed, const std::string& out_path) {
  std::set<std::string> wanted(suites.begin(), suites.end());
  const auto reports = run_verify_suites(wanted, samples, seed);
  std::fputs(verify_report_lines(reports).c_str(), stdout);
  if (!out_path.empty()) write_verify_summary(reports, out_path);
  for (const auto& r : reports) {
    if (!r.pass) return 1;
  }
  return 0;
}

int cmd_plot(const std::vector<std::string>& inputs, const std::string& mode,
             const std::string& out_path, const std::string& objective_id) {
  PlotMode m;
  if (mode == "loss_curve") {
    m = PlotMode::loss_curve;
  } else if (mode == "trajectory_2d") {
    m = PlotMode::trajectory_2d;
  } else {
    throw config_error("--mode must be loss_curve or trajectory_2d");
  }
  plot_trajectory_files(inputs, m, out_path, objective_id);
  std::printf("wrote %s\n", out_path.c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hizoo: Hessian-informed zeroth-order optimization bench"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "run one experiment from a config");
  std::string run_config, run_out;
  std::uint64_t run_seed = 0;
  bool run_seed_given = false;
  run->add_option("--config", run_config, "config file path")->required();
  run->add_option("--out", run_out, "override output.path");
  run->add_option("--seed", run_seed, "override master seed")
      ->each([&](const std::string&) { run_seed_given = true; });

  // compare
  auto* cmp = app.add_subcommand("compare",
                                 "race optimizers to a loss threshold");
  std::string cmp_objective, cmp_out, cmp_baseline;
  std::vector<std::string> cmp_optimizers;
  double cmp_threshold = 1e-6;
  std::vector<double> cmp_lr_grid{1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
  std::uint64_t cmp_steps = 20000, cmp_seed = 0;
  double cmp_mu = 1e-3, cmp_alpha = 1e-6;
  std::vector<double> cmp_start;
  cmp->add_option("--objective", cmp_objective,
                  "objective id (func_a|func_b|func_c)")
      ->required();
  cmp->add_option("--optimizers", cmp_optimizers,
                  "comma-separated optimizer ids")
      ->required()
      ->delimiter(',');
  cmp->add_option("--threshold", cmp_threshold, "loss threshold")->required();
  cmp->add_option("--out", cmp_out, "comparison CSV path");
  cmp->add_option("--lr-grid", cmp_lr_grid, "shared learning-rate grid")
      ->delimiter(',');
  cmp->add_option("--steps", cmp_steps, "step budget per run");
  cmp->add_option("--mu", cmp_mu, "perturbation scale");
  cmp->add_option("--alpha", cmp_alpha, "EMA smooth scale");
  cmp->add_option("--seed", cmp_seed, "master seed");
  cmp->add_option("--start", cmp_start, "start point coordinates")
      ->delimiter(',');
  cmp->add_option("--baseline", cmp_baseline, "baseline optimizer id");

  // sweep
  auto* swp = app.add_subcommand("sweep", "cartesian hyperparameter sweep");
  std::string swp_config, swp_out;
  std::vector<std::string> swp_grid;
  std::size_t swp_cap = 4096;
  swp->add_option("--config", swp_config, "base config file")->required();
  swp->add_option("--grid", swp_grid, "KEY=V1,V2,... (repeatable)")
      ->required();
  swp->add_option("--out", swp_out, "results CSV path");
  swp->add_option("--cap", swp_cap, "max grid points");

  // verify
  auto* ver = app.add_subcommand("verify", "estimator identity checks");
  std::vector<std::string> ver_suites;
  std::uint64_t ver_samples = 1000000, ver_seed = 20240601;
  std::string ver_out;
  ver->add_option("--suite", ver_suites, "magnus,hessian,gmu,fd")
      ->delimiter(',');
  ver->add_option("--samples", ver_samples, "Monte-Carlo sample count");
  ver->add_option("--seed", ver_seed, "oracle seed");
  ver->add_option("--out", ver_out, "machine-readable summary (JSON)");

  // plot
  auto* plt = app.add_subcommand("plot", "render trajectories to SVG");
  std::vector<std::string> plt_inputs;
  std::string plt_mode = "loss_curve", plt_out, plt_objective;
  plt->add_option("--input", plt_inputs, "trajectory CSV paths")
      ->required()
      ->expected(-1);
  plt->add_option("--mode", plt_mode, "loss_curve|trajectory_2d");
  plt->add_option("--out", plt_out, "output SVG path")->required();
  plt->add_option("--objective", plt_objective,
                  "contour objective override (func_a|func_b|func_c)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 64;
  }

  try {
    if (*run) return cmd_run(run_config, run_out, run_seed_given, run_seed);
    if (*cmp) {
      return cmd_compare(cmp_objective, cmp_optimizers, cmp_threshold,
                         cmp_out, cmp_lr_grid, cmp_steps, cmp_mu, cmp_alpha,
                         cmp_seed, cmp_start, cmp_baseline);
    }
    if (*swp) return cmd_sweep(swp_config, swp_grid, swp_out, swp_cap);
    if (*ver) return cmd_verify(ver_suites, ver_samples, ver_seed, ver_out);
    if (*plt) return cmd_plot(plt_inputs, plt_mode, plt_out, plt_objective);
  } catch (const config_error& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 64;
  } catch (const hizoo::error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 64;
  }
  return 0;
}
