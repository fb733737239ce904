#pragma once

// Experiment configuration and its file format: flat UTF-8 key=value lines
// with dotted section prefixes (optimizer.mu=1e-3). '#' starts a comment.
// Serialization is canonical (fixed key order, 17-digit floats) so configs
// round-trip losslessly and hash stably.

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hizoo/core.hpp"
#include "hizoo/format.hpp"
#include "hizoo/optimizers.hpp"

namespace hizoo {

struct ExperimentConfig {
  // objective
  std::string objective_id = "func_c";
  std::vector<double> quad_h;  // quadratic objective only
  std::uint64_t dataset_seed = 1;
  std::size_t dataset_n = 200;
  std::size_t dataset_dim = 10;
  double dataset_separation = 6.0;

  // optimizer
  std::string optimizer_id = "hizoo";
  OptimizerConfig opt;

  // start point: explicit coordinates, or drawn uniformly from [-1,1]^d
  // with start_seed when start_point is empty.
  std::vector<double> start_point;
  std::uint64_t start_seed = 0;

  // stopping
  std::optional<double> loss_threshold;
  std::uint64_t patience = 0;

  std::uint64_t master_seed = 0;
  std::string out_path;
  std::uint64_t record_every = 1;
  bool record_walltime = false;

  bool objective_uses_dataset() const {
    return objective_id == "logistic" || objective_id == "accuracy";
  }

  OptimizerKind optimizer_kind() const {
    if (optimizer_id == "hizoo") return OptimizerKind::hizoo;
    if (optimizer_id == "zo_sgd") return OptimizerKind::zo_sgd;
    if (optimizer_id == "gd") return OptimizerKind::gd;
    if (optimizer_id == "adam") return OptimizerKind::adam;
    throw config_error("optimizer.id: unknown optimizer '" + optimizer_id +
                       "'");
  }

  void validate() const {
    if (objective_id != "func_a" && objective_id != "func_b" &&
        objective_id != "func_c" && objective_id != "quadratic" &&
        objective_id != "logistic" && objective_id != "accuracy") {
      throw config_error("objective.id: unknown objective '" + objective_id +
                         "'");
    }
    if (objective_id == "quadratic") {
      if (quad_h.empty()) {
        throw config_error("objective.quad_h: required for quadratic");
      }
      for (double x : quad_h) {
        if (!(x > 0.0)) {
          throw config_error("objective.quad_h: entries must be positive");
        }
      }
    }
    if (objective_uses_dataset()) {
      if (dataset_n < 2) throw config_error("objective.dataset.n must be >= 2");
      if (dataset_dim < 1) {
        throw config_error("objective.dataset.dim must be >= 1");
      }
      if (!(dataset_separation >= 0.0)) {
        throw config_error("objective.dataset.separation must be >= 0");
      }
    }
    (void)optimizer_kind();
    opt.validate();
    if (loss_threshold && !std::isfinite(*loss_threshold)) {
      throw config_error("stopping.threshold must be finite");
    }
    if (record_every < 1) {
      throw config_error("output.record_every must be >= 1");
    }
  }
};

namespace detail {

inline std::string join_doubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += format_double(v[i]);
  }
  return out;
}

inline std::vector<double> parse_double_list(std::string_view s,
                                             const std::string& what) {
  std::vector<double> out;
  for (auto cell : split_view(s, ',')) {
    out.push_back(parse_double(trim_view(cell), what));
  }
  return out;
}

inline bool parse_bool(std::string_view s, const std::string& what) {
  if (s == "true") return true;
  if (s == "false") return false;
  throw config_error(what + ": expected true or false, got '" +
                     std::string(s) + "'");
}

}  // namespace detail

/// Apply one key=value assignment; shared by the file parser and sweep grids.
inline void set_config_value(ExperimentConfig& cfg, std::string_view key,
                             std::string_view value) {
  const std::string k(key);
  const std::string what = k;
  if (k == "objective.id") {
    cfg.objective_id = std::string(value);
  } else if (k == "objective.quad_h") {
    cfg.quad_h = detail::parse_double_list(value, what);
  } else if (k == "objective.dataset.seed") {
    cfg.dataset_seed = parse_u64(value, what);
  } else if (k == "objective.dataset.n") {
    cfg.dataset_n = parse_u64(value, what);
  } else if (k == "objective.dataset.dim") {
    cfg.dataset_dim = parse_u64(value, what);
  } else if (k == "objective.dataset.separation") {
    cfg.dataset_separation = parse_double(value, what);
  } else if (k == "objective.batch") {
    cfg.opt.batch_size = parse_u64(value, what);
  } else if (k == "optimizer.id") {
    cfg.optimizer_id = std::string(value);
  } else if (k == "optimizer.mu") {
    cfg.opt.mu = parse_double(value, what);
  } else if (k == "optimizer.lr") {
    cfg.opt.lr = parse_double(value, what);
  } else if (k == "optimizer.alpha") {
    cfg.opt.alpha = parse_double(value, what);
  } else if (k == "optimizer.n_samples") {
    cfg.opt.n_samples = parse_u64(value, what);
  } else if (k == "optimizer.steps") {
    cfg.opt.steps = parse_u64(value, what);
  } else if (k == "optimizer.clamp_lower") {
    cfg.opt.clamp.lower = parse_double(value, what);
  } else if (k == "optimizer.clamp_upper") {
    cfg.opt.clamp.upper = parse_double(value, what);
  } else if (k == "optimizer.include_correction") {
    cfg.opt.include_correction = detail::parse_bool(value, what);
  } else if (k == "optimizer.sigma_variant") {
    if (value == "updated") {
      cfg.opt.sigma_variant = SigmaVariant::use_updated;
    } else if (value == "previous") {
      cfg.opt.sigma_variant = SigmaVariant::use_previous;
    } else {
      throw config_error(what + ": expected updated or previous");
    }
  } else if (k == "optimizer.shared_loss") {
    cfg.opt.shared_loss = detail::parse_bool(value, what);
  } else if (k == "start.point") {
    cfg.start_point = detail::parse_double_list(value, what);
  } else if (k == "start.seed") {
    cfg.start_seed = parse_u64(value, what);
    cfg.start_point.clear();
  } else if (k == "stopping.threshold") {
    cfg.loss_threshold = parse_double(value, what);
  } else if (k == "stopping.patience") {
    cfg.patience = parse_u64(value, what);
  } else if (k == "seed") {
    cfg.master_seed = parse_u64(value, what);
  } else if (k == "output.path") {
    cfg.out_path = std::string(value);
  } else if (k == "output.record_every") {
    cfg.record_every = parse_u64(value, what);
  } else if (k == "output.record_walltime") {
    cfg.record_walltime = detail::parse_bool(value, what);
  } else {
    throw config_error("unknown config key: '" + k + "'");
  }
}

inline ExperimentConfig parse_config_text(std::string_view text) {
  ExperimentConfig cfg;
  std::size_t line_no = 0;
  for (auto raw : split_view(text, '\n')) {
    ++line_no;
    auto line = trim_view(raw);
    if (line.empty() || line.front() == '#') continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw config_error("line " + std::to_string(line_no) +
                         ": expected key=value");
    }
    set_config_value(cfg, trim_view(line.substr(0, eq)),
                     trim_view(line.substr(eq + 1)));
  }
  return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw config_error("cannot open config file: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

/// Canonical serialization: every applicable key, fixed order.
inline std::string serialize_config(const ExperimentConfig& cfg) {
  std::string out;
  auto kv = [&out](std::string_view k, const std::string& v) {
    out.append(k);
    out.push_back('=');
    out.append(v);
    out.push_back('\n');
  };
  kv("objective.id", cfg.objective_id);
  if (cfg.objective_id == "quadratic") {
    kv("objective.quad_h", detail::join_doubles(cfg.quad_h));
  }
  if (cfg.objective_uses_dataset()) {
    kv("objective.dataset.seed", format_u64(cfg.dataset_seed));
    kv("objective.dataset.n", format_u64(cfg.dataset_n));
    kv("objective.dataset.dim", format_u64(cfg.dataset_dim));
    kv("objective.dataset.separation", format_double(cfg.dataset_separation));
  }
  kv("objective.batch", format_u64(cfg.opt.batch_size));
  kv("optimizer.id", cfg.optimizer_id);
  kv("optimizer.mu", format_double(cfg.opt.mu));
  kv("optimizer.lr", format_double(cfg.opt.lr));
  kv("optimizer.alpha", format_double(cfg.opt.alpha));
  kv("optimizer.n_samples", format_u64(cfg.opt.n_samples));
  kv("optimizer.steps", format_u64(cfg.opt.steps));
  kv("optimizer.clamp_lower", format_double(cfg.opt.clamp.lower));
  kv("optimizer.clamp_upper", format_double(cfg.opt.clamp.upper));
  kv("optimizer.include_correction",
     cfg.opt.include_correction ? "true" : "false");
  kv("optimizer.sigma_variant",
     cfg.opt.sigma_variant == SigmaVariant::use_updated ? "updated"
                                                        : "previous");
  kv("optimizer.shared_loss", cfg.opt.shared_loss ? "true" : "false");
  if (!cfg.start_point.empty()) {
    kv("start.point", detail::join_doubles(cfg.start_point));
  } else {
    kv("start.seed", format_u64(cfg.start_seed));
  }
  if (cfg.loss_threshold) {
    kv("stopping.threshold", format_double(*cfg.loss_threshold));
  }
  kv("stopping.patience", format_u64(cfg.patience));
  kv("seed", format_u64(cfg.master_seed));
  kv("output.path", cfg.out_path);
  kv("output.record_every", format_u64(cfg.record_every));
  kv("output.record_walltime", cfg.record_walltime ? "true" : "false");
  return out;
}

/// FNV-1a 64 over the canonical serialization, as 16 hex digits.
inline std::string config_fingerprint(const ExperimentConfig& cfg) {
  const std::string s = serialize_config(cfg);
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  static const char* hex = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = hex[h & 0xF];
    h >>= 4;
  }
  return out;
}

}  // namespace hizoo
