#pragma once

// Experiment runner: objective construction, trajectory CSV persistence,
// optimizer comparisons and parameter sweeps. All randomness flows from the
// config's master seed; no call site reads entropy from the environment.

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "hizoo/config.hpp"
#include "hizoo/core.hpp"
#include "hizoo/format.hpp"
#include "hizoo/objectives.hpp"
#include "hizoo/optimizers.hpp"

namespace hizoo {

inline Objective make_objective(const ExperimentConfig& cfg) {
  if (cfg.objective_id == "func_a") return test_function(TestFunction::a);
  if (cfg.objective_id == "func_b") return test_function(TestFunction::b);
  if (cfg.objective_id == "func_c") return test_function(TestFunction::c);
  if (cfg.objective_id == "quadratic") return quadratic(cfg.quad_h);
  if (cfg.objective_id == "logistic") {
    return logistic_objective(make_synthetic_dataset(
        cfg.dataset_seed, cfg.dataset_n, cfg.dataset_dim,
        cfg.dataset_separation));
  }
  if (cfg.objective_id == "accuracy") {
    return accuracy_objective(make_synthetic_dataset(
        cfg.dataset_seed, cfg.dataset_n, cfg.dataset_dim,
        cfg.dataset_separation));
  }
  throw config_error("objective.id: unknown objective '" + cfg.objective_id +
                     "'");
}

inline ParamVector resolve_start_point(const ExperimentConfig& cfg,
                                       std::size_t dim) {
  if (!cfg.start_point.empty()) {
    if (cfg.start_point.size() != dim) {
      throw config_error("start.point: expected " + std::to_string(dim) +
                         " coordinates, got " +
                         std::to_string(cfg.start_point.size()));
    }
    return ParamVector(cfg.start_point);
  }
  SeedStream stream(derive_seed(cfg.start_seed, 0x57A27ull));
  ParamVector theta(dim);
  for (std::size_t i = 0; i < dim; ++i) {
    theta[i] = 2.0 * stream.next_uniform() - 1.0;
  }
  return theta;
}

// ---------------------------------------------------------------------------
// Trajectory CSV. Header is bit-exact:
//   step,loss,loss_plus,loss_minus,proj_grad,fwd_passes,sigma_min,sigma_mean,
//   sigma_max,seed,wall_ns[,param_0..param_{d-1} when d <= 16]
// ---------------------------------------------------------------------------

inline constexpr std::string_view kTrajectoryHeader =
    "step,loss,loss_plus,loss_minus,proj_grad,fwd_passes,sigma_min,"
    "sigma_mean,sigma_max,seed,wall_ns";

inline std::string trajectory_csv_string(const Trajectory& traj) {
  std::string out(kTrajectoryHeader);
  const bool with_params = traj.dim <= 16;
  if (with_params) {
    for (std::size_t i = 0; i < traj.dim; ++i) {
      out += ",param_" + std::to_string(i);
    }
  }
  out += "\n";
  for (const auto& r : traj.records) {
    out += format_u64(r.step);
    out += ",";
    out += format_double(r.loss);
    out += ",";
    out += format_double(r.loss_plus);
    out += ",";
    out += format_double(r.loss_minus);
    out += ",";
    out += format_double(r.projected_grad);
    out += ",";
    out += format_u64(r.forward_passes);
    out += ",";
    out += format_double(r.sigma_min);
    out += ",";
    out += format_double(r.sigma_mean);
    out += ",";
    out += format_double(r.sigma_max);
    out += ",";
    out += format_u64(r.seed);
    out += ",";
    out += format_u64(r.wall_ns);
    if (with_params) {
      for (std::size_t i = 0; i < traj.dim; ++i) {
        out += ",";
        out += format_double(i < r.params.size() ? r.params[i] : 0.0);
      }
    }
    out += "\n";
  }
  return out;
}

inline void write_trajectory_csv(const Trajectory& traj,
                                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open " + path + " for writing");
  out << trajectory_csv_string(traj);
}

/// Deterministic JSON sidecar carrying what the pinned CSV schema cannot:
/// the config fingerprint and the objective identity (used by plot legends
/// and contour backgrounds).
inline void write_trajectory_sidecar(const Trajectory& traj,
                                     const std::string& objective_id,
                                     const std::string& optimizer_id,
                                     const std::string& csv_path) {
  nlohmann::json meta;
  meta["schema"] = "hizoo-trajectory-meta-v1";
  meta["fingerprint"] = traj.fingerprint;
  meta["objective"] = objective_id;
  meta["optimizer"] = optimizer_id;
  meta["dim"] = traj.dim;
  meta["status"] = run_status_name(traj.status);
  std::ofstream out(csv_path + ".meta.json", std::ios::binary);
  if (!out) throw error("cannot open " + csv_path + ".meta.json for writing");
  out << meta.dump(2) << "\n";
}

struct LoadedTrajectory {
  Trajectory trajectory;
  std::string objective_id;  // from sidecar, may be empty
  std::string label;         // fingerprint when known, else file stem
};

inline LoadedTrajectory read_trajectory_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw error(path + ": empty trajectory file");
  while (!line.empty() && (line.back() == '\r' || line.back() == '\n')) {
    line.pop_back();
  }
  if (line.rfind(std::string(kTrajectoryHeader), 0) != 0) {
    throw error(path + ": unrecognized trajectory header");
  }
  const auto cols = split_view(line, ',');
  const std::size_t base_cols = 11;
  if (cols.size() < base_cols) {
    throw error(path + ": truncated trajectory header");
  }
  LoadedTrajectory out;
  Trajectory& traj = out.trajectory;
  traj.dim = cols.size() - base_cols;

  while (std::getline(in, line)) {
    if (trim_view(line).empty()) continue;
    const auto cells = split_view(trim_view(line), ',');
    if (cells.size() != cols.size()) {
      throw error(path + ": row has wrong column count");
    }
    StepRecord r;
    r.step = parse_u64(cells[0], "step");
    r.loss = parse_double(cells[1], "loss");
    r.loss_plus = parse_double(cells[2], "loss_plus");
    r.loss_minus = parse_double(cells[3], "loss_minus");
    r.projected_grad = parse_double(cells[4], "proj_grad");
    r.forward_passes =
        static_cast<std::uint32_t>(parse_u64(cells[5], "fwd_passes"));
    r.sigma_min = parse_double(cells[6], "sigma_min");
    r.sigma_mean = parse_double(cells[7], "sigma_mean");
    r.sigma_max = parse_double(cells[8], "sigma_max");
    r.seed = parse_u64(cells[9], "seed");
    r.wall_ns = parse_u64(cells[10], "wall_ns");
    for (std::size_t i = 0; i < traj.dim; ++i) {
      r.params.push_back(parse_double(cells[base_cols + i], "param"));
    }
    traj.records.push_back(std::move(r));
  }
  if (!traj.records.empty()) {
    traj.final_loss = traj.records.back().loss;
    if (traj.dim > 0) traj.terminal_theta = traj.records.back().params;
  }

  // Sidecar metadata is optional.
  std::ifstream meta_in(path + ".meta.json", std::ios::binary);
  if (meta_in) {
    nlohmann::json meta = nlohmann::json::parse(meta_in, nullptr, false);
    if (!meta.is_discarded()) {
      traj.fingerprint = meta.value("fingerprint", "");
      out.objective_id = meta.value("objective", "");
    }
  }
  if (!traj.fingerprint.empty()) {
    out.label = traj.fingerprint;
  } else {
    std::string stem = path;
    const auto slash = stem.find_last_of("/\\");
    if (slash != std::string::npos) stem = stem.substr(slash + 1);
    out.label = stem;
  }
  return out;
}

// ---------------------------------------------------------------------------
// run / compare / sweep
// ---------------------------------------------------------------------------

inline Trajectory run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const Objective obj = make_objective(cfg);
  const ParamVector theta0 = resolve_start_point(cfg, obj.dim);
  StoppingRule stop;
  stop.max_steps = cfg.opt.steps;
  stop.loss_threshold = cfg.loss_threshold;
  stop.patience = cfg.patience;
  RunOptions opts;
  opts.record_every = cfg.record_every;
  opts.record_walltime = cfg.record_walltime;

  Trajectory traj = run_loop(cfg.optimizer_kind(), cfg.opt, obj, stop, theta0,
                             cfg.master_seed, opts);
  traj.fingerprint = config_fingerprint(cfg);
  if (!cfg.out_path.empty()) {
    write_trajectory_csv(traj, cfg.out_path);
    write_trajectory_sidecar(traj, cfg.objective_id, cfg.optimizer_id,
                             cfg.out_path);
  }
  return traj;
}

/// Exit status: 0 success / threshold reached, 2 threshold not reached,
/// 3 diverged.
inline int exit_code_for(const Trajectory& traj, bool threshold_requested) {
  switch (traj.status) {
    case RunStatus::diverged: return 3;
    case RunStatus::reached: return 0;
    case RunStatus::stalled: return threshold_requested ? 2 : 0;
    case RunStatus::exhausted: return threshold_requested ? 2 : 0;
  }
  return 2;
}

struct CompareEntry {
  std::string id;  // optimizer id (hizoo | zo_sgd | gd | adam)
  OptimizerConfig config;
};

struct ComparisonRow {
  std::string optimizer;
  RunStatus status = RunStatus::exhausted;
  std::optional<std::uint64_t> steps_to_threshold;
  std::optional<std::uint64_t> fwd_passes_to_threshold;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  std::optional<double> speedup_steps;  // baseline steps / candidate steps
  std::optional<double> speedup_fwd;
};

struct ComparisonReport {
  std::string baseline;
  double threshold = 0.0;
  std::vector<ComparisonRow> rows;
};

inline OptimizerKind optimizer_kind_from_id(const std::string& id) {
  if (id == "hizoo") return OptimizerKind::hizoo;
  if (id == "zo_sgd") return OptimizerKind::zo_sgd;
  if (id == "gd") return OptimizerKind::gd;
  if (id == "adam") return OptimizerKind::adam;
  throw config_error("unknown optimizer id '" + id + "'");
}

/// Runs every optimizer from the same start on the same objective and
/// reports steps-to-threshold and forward-passes-to-threshold (the fair ZO
/// metric) plus speedups versus the named baseline. Requires >= 2 entries;
/// rows are sorted by optimizer id so the report is list-order invariant.
inline ComparisonReport compare(const Objective& obj,
                                const ParamVector& start,
                                std::vector<CompareEntry> optimizers,
                                double threshold, std::uint64_t master_seed,
                                std::string baseline_id = "") {
  if (optimizers.size() < 2) {
    throw invalid_argument_error("comparison requires >= 2 optimizers");
  }
  std::sort(optimizers.begin(), optimizers.end(),
            [](const CompareEntry& a, const CompareEntry& b) {
              if (a.id != b.id) return a.id < b.id;
              return a.config.lr < b.config.lr;
            });
  if (baseline_id.empty()) baseline_id = optimizers.front().id;

  ComparisonReport report;
  report.baseline = baseline_id;
  report.threshold = threshold;

  std::optional<std::uint64_t> baseline_steps, baseline_fwd;
  for (const auto& entry : optimizers) {
    StoppingRule stop;
    stop.max_steps = entry.config.steps;
    stop.loss_threshold = threshold;
    Trajectory traj = run_loop(optimizer_kind_from_id(entry.id), entry.config,
                               obj, stop, start, master_seed);
    ComparisonRow row;
    row.optimizer = entry.id;
    row.status = traj.status;
    row.steps_to_threshold = traj.steps_to_threshold;
    row.fwd_passes_to_threshold = traj.fwd_passes_to_threshold;
    row.final_loss = traj.final_loss;
    report.rows.push_back(row);
    if (entry.id == baseline_id && !baseline_steps &&
        traj.steps_to_threshold) {
      baseline_steps = traj.steps_to_threshold;
      baseline_fwd = traj.fwd_passes_to_threshold;
    }
  }
  for (auto& row : report.rows) {
    if (baseline_steps && row.steps_to_threshold) {
      row.speedup_steps = static_cast<double>(*baseline_steps) /
                          static_cast<double>(*row.steps_to_threshold);
      row.speedup_fwd = static_cast<double>(*baseline_fwd) /
                        static_cast<double>(*row.fwd_passes_to_threshold);
    }
  }
  return report;
}

/// Comparison CSV; unreached thresholds are written as the "not_reached"
/// sentinel, never a float infinity.
inline std::string comparison_csv_string(const ComparisonReport& report) {
  std::string out =
      "optimizer,status,steps_to_threshold,fwd_passes_to_threshold,"
      "final_loss,speedup_steps_vs_" +
      report.baseline + ",speedup_fwd_vs_" + report.baseline + "\n";
  for (const auto& row : report.rows) {
    out += row.optimizer;
    out += ",";
    out += run_status_name(row.status);
    out += ",";
    out += row.steps_to_threshold ? format_u64(*row.steps_to_threshold)
                                  : "not_reached";
    out += ",";
    out += row.fwd_passes_to_threshold
               ? format_u64(*row.fwd_passes_to_threshold)
               : "not_reached";
    out += ",";
    out += format_double(row.final_loss);
    out += ",";
    out += row.speedup_steps ? format_double(*row.speedup_steps) : "na";
    out += ",";
    out += row.speedup_fwd ? format_double(*row.speedup_fwd) : "na";
    out += "\n";
  }
  return out;
}

inline void write_comparison_csv(const ComparisonReport& report,
                                 const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open " + path + " for writing");
  out << comparison_csv_string(report);
}

// ---------------------------------------------------------------------------
// Sweeps: cartesian grids over config keys, rows in deterministic
// lexicographic order (keys sorted, leftmost key slowest, values as listed).
// ---------------------------------------------------------------------------

struct SweepGrid {
  // key -> candidate values (as config-file strings)
  std::vector<std::pair<std::string, std::vector<std::string>>> axes;
};

struct SweepRow {
  std::vector<std::string> values;  // one per sorted axis
  RunStatus status = RunStatus::exhausted;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
  std::optional<std::uint64_t> steps_to_threshold;
};

struct SweepResult {
  std::vector<std::string> keys;  // sorted
  std::vector<SweepRow> rows;
};

inline SweepResult sweep(const ExperimentConfig& base, SweepGrid grid,
                         std::size_t cap = 4096) {
  if (grid.axes.empty()) {
    throw invalid_argument_error("sweep requires a non-empty grid");
  }
  std::sort(grid.axes.begin(), grid.axes.end(),
            [](const auto& a, const auto& b) { return a.first < b.first; });
  std::size_t total = 1;
  for (const auto& [key, values] : grid.axes) {
    if (values.empty()) {
      throw invalid_argument_error("sweep axis '" + key + "' has no values");
    }
    total *= values.size();
  }
  if (total > cap) {
    throw invalid_argument_error(
        "sweep grid has " + std::to_string(total) +
        " points, exceeding the cap; rerun with cap >= " +
        std::to_string(total));
  }

  SweepResult result;
  for (const auto& [key, values] : grid.axes) result.keys.push_back(key);

  std::vector<std::size_t> odometer(grid.axes.size(), 0);
  for (std::size_t point = 0; point < total; ++point) {
    ExperimentConfig cfg = base;
    cfg.out_path.clear();
    SweepRow row;
    for (std::size_t a = 0; a < grid.axes.size(); ++a) {
      const std::string& value = grid.axes[a].second[odometer[a]];
      set_config_value(cfg, grid.axes[a].first, value);
      row.values.push_back(value);
    }
    cfg.validate();
    const Trajectory traj = run_experiment(cfg);
    row.status = traj.status;
    row.final_loss = traj.final_loss;
    row.steps_to_threshold = traj.steps_to_threshold;
    result.rows.push_back(std::move(row));

    // Rightmost axis fastest.
    for (std::size_t a = grid.axes.size(); a-- > 0;) {
      if (++odometer[a] < grid.axes[a].second.size()) break;
      odometer[a] = 0;
    }
  }
  return result;
}

inline std::string sweep_csv_string(const SweepResult& result) {
  std::string out;
  for (const auto& k : result.keys) {
    out += k;
    out += ",";
  }
  out += "final_loss,steps_to_threshold,status\n";
  for (const auto& row : result.rows) {
    for (const auto& v : row.values) {
      out += v;
      out += ",";
    }
    out += format_double(row.final_loss);
    out += ",";
    out += row.steps_to_threshold ? format_u64(*row.steps_to_threshold)
                                  : "not_reached";
    out += ",";
    out += run_status_name(row.status);
    out += "\n";
  }
  return out;
}

inline void write_sweep_csv(const SweepResult& result,
                            const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open " + path + " for writing");
  out << sweep_csv_string(result);
}

}  // namespace hizoo
