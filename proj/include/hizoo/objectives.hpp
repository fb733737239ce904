#pragma once

// The objective zoo: three 2-D test surfaces with heterogeneous curvature,
// parameterized quadratics, and a synthetic two-cluster classification task
// with differentiable (logistic) and non-differentiable (accuracy) losses.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hizoo/core.hpp"
#include "hizoo/format.hpp"
#include "hizoo/perturb.hpp"

namespace hizoo {

/// Minibatch selector. size == 0 means the full batch (deterministic
/// objectives ignore batches entirely).
struct BatchSpec {
  std::uint64_t seed = 0;
  std::size_t size = 0;
};

/// A loss surface. eval is deterministic given (theta, batch seed);
/// gradient / hessian_diag are null when no closed form exists.
struct Objective {
  std::size_t dim = 0;
  std::string name;
  std::function<double(const ParamVector&, const BatchSpec&)> eval;
  std::function<std::vector<double>(const ParamVector&)> gradient;
  std::function<std::vector<double>(const ParamVector&)> hessian_diag;

  double operator()(const ParamVector& theta,
                    const BatchSpec& batch = {}) const {
    return eval(theta, batch);
  }
};

inline std::vector<double> analytic_gradient(const Objective& obj,
                                             const ParamVector& theta) {
  if (!obj.gradient) {
    throw unsupported_objective_error(obj.name +
                                      " has no analytic gradient");
  }
  return obj.gradient(theta);
}

enum class TestFunction { a, b, c };

namespace detail {

inline double sign0(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

}  // namespace detail

/// The three bundled 2-D test surfaces:
///   (a) 8(x-1)^2 (1.3x^2 + 2x + 1) + 0.5(y-4)^2, minimum (1,4)
///   (b) |x| + |y|, minimum (0,0); subgradient convention sign(0) = 0
///   (c) 10000 x^2 + y^2, minimum (0,0); curvature ratio 10^4 everywhere
inline Objective test_function(TestFunction which) {
  Objective obj;
  obj.dim = 2;
  switch (which) {
    case TestFunction::a: {
      obj.name = "func_a";
      obj.eval = [](const ParamVector& t, const BatchSpec&) {
        const double x = t[0], y = t[1];
        const double xm = x - 1.0;
        return 8.0 * xm * xm * (1.3 * x * x + 2.0 * x + 1.0) +
               0.5 * (y - 4.0) * (y - 4.0);
      };
      obj.gradient = [](const ParamVector& t) {
        const double x = t[0], y = t[1];
        const double xm = x - 1.0;
        const double q = 1.3 * x * x + 2.0 * x + 1.0;
        return std::vector<double>{
            16.0 * xm * q + 8.0 * xm * xm * (2.6 * x + 2.0), y - 4.0};
      };
      obj.hessian_diag = [](const ParamVector& t) {
        const double x = t[0];
        const double xm = x - 1.0;
        const double q = 1.3 * x * x + 2.0 * x + 1.0;
        return std::vector<double>{
            16.0 * q + 32.0 * xm * (2.6 * x + 2.0) + 20.8 * xm * xm, 1.0};
      };
      break;
    }
    case TestFunction::b: {
      obj.name = "func_b";
      obj.eval = [](const ParamVector& t, const BatchSpec&) {
        return std::fabs(t[0]) + std::fabs(t[1]);
      };
      // Subgradient for first-order baselines only; ZO paths never call it.
      obj.gradient = [](const ParamVector& t) {
        return std::vector<double>{detail::sign0(t[0]), detail::sign0(t[1])};
      };
      break;
    }
    case TestFunction::c: {
      obj.name = "func_c";
      obj.eval = [](const ParamVector& t, const BatchSpec&) {
        return 10000.0 * t[0] * t[0] + t[1] * t[1];
      };
      obj.gradient = [](const ParamVector& t) {
        return std::vector<double>{20000.0 * t[0], 2.0 * t[1]};
      };
      obj.hessian_diag = [](const ParamVector&) {
        return std::vector<double>{20000.0, 2.0};
      };
      break;
    }
  }
  return obj;
}

/// L(theta) = 1/2 sum_i h_i theta_i^2 with h > 0; the oracle substrate, since
/// Taylor remainders vanish exactly.
inline Objective quadratic(std::vector<double> h) {
  if (h.empty()) {
    throw invalid_argument_error("quadratic requires a non-empty h");
  }
  for (double x : h) {
    if (!std::isfinite(x) || !(x > 0.0)) {
      throw invalid_argument_error("quadratic requires positive h entries");
    }
  }
  auto hp = std::make_shared<std::vector<double>>(std::move(h));
  Objective obj;
  obj.dim = hp->size();
  obj.name = "quadratic";
  obj.eval = [hp](const ParamVector& t, const BatchSpec&) {
    double s = 0.0;
    for (std::size_t i = 0; i < hp->size(); ++i) s += (*hp)[i] * t[i] * t[i];
    return 0.5 * s;
  };
  obj.gradient = [hp](const ParamVector& t) {
    std::vector<double> g(hp->size());
    for (std::size_t i = 0; i < hp->size(); ++i) g[i] = (*hp)[i] * t[i];
    return g;
  };
  obj.hessian_diag = [hp](const ParamVector&) { return *hp; };
  return obj;
}

inline double condition_number(std::span<const double> h) {
  double lo = h[0], hi = h[0];
  for (double x : h) {
    lo = std::min(lo, x);
    hi = std::max(hi, x);
  }
  return hi / lo;
}

/// Two Gaussian clusters at +-(separation/2) e1 with unit covariance,
/// labels +-1 by cluster, balanced within one sample.
struct SyntheticDataset {
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  double separation = 0.0;
  std::vector<double> features;  // row-major n x dim
  std::vector<int> labels;       // -1 / +1

  std::size_t size() const { return labels.size(); }
  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
};

inline SyntheticDataset make_synthetic_dataset(std::uint64_t seed,
                                               std::size_t n, std::size_t dim,
                                               double separation) {
  if (n < 2 || dim < 1 || !(separation >= 0.0)) {
    throw invalid_argument_error(
        "make_synthetic_dataset requires n >= 2, d >= 1, separation >= 0");
  }
  SyntheticDataset ds;
  ds.dim = dim;
  ds.seed = seed;
  ds.separation = separation;
  ds.features.resize(n * dim);
  ds.labels.resize(n);
  SeedStream stream(derive_seed(seed, 0xD5ull));
  const double shift = separation / 2.0;
  for (std::size_t i = 0; i < n; ++i) {
    const int label = (i % 2 == 0) ? 1 : -1;  // balanced within +-1
    ds.labels[i] = label;
    for (std::size_t j = 0; j < dim; ++j) {
      double x = stream.next_normal();
      if (j == 0) x += label * shift;
      ds.features[i * dim + j] = x;
    }
  }
  return ds;
}

namespace detail {

inline double dot_row(std::span<const double> x, const ParamVector& theta) {
  double s = 0.0;
  for (std::size_t j = 0; j < x.size(); ++j) s += x[j] * theta[j];
  return s;
}

// Batch indices for (batch.seed, batch.size); size 0 selects every row.
inline std::vector<std::size_t> batch_indices(const SyntheticDataset& ds,
                                              const BatchSpec& batch) {
  std::vector<std::size_t> idx;
  if (batch.size == 0 || batch.size >= ds.size()) {
    idx.resize(ds.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    return idx;
  }
  SeedStream stream(derive_seed(batch.seed, 0xBA7C4ull));
  idx.resize(batch.size);
  for (std::size_t i = 0; i < batch.size; ++i) {
    idx[i] = static_cast<std::size_t>(stream.next_u64() % ds.size());
  }
  return idx;
}

inline double log1p_exp(double m) {
  // log(1 + exp(m)) without overflow.
  return m > 0.0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
}

}  // namespace detail

/// Mean cross-entropy of a linear model: log(1 + exp(-y theta.x)).
/// The analytic gradient is the full-batch one.
inline Objective logistic_objective(const SyntheticDataset& dataset) {
  if (dataset.size() == 0) {
    throw invalid_argument_error("logistic_objective requires a non-empty dataset");
  }
  auto ds = std::make_shared<SyntheticDataset>(dataset);
  Objective obj;
  obj.dim = ds->dim;
  obj.name = "logistic";
  obj.eval = [ds](const ParamVector& theta, const BatchSpec& batch) {
    const auto idx = detail::batch_indices(*ds, batch);
    double s = 0.0;
    for (std::size_t i : idx) {
      const double m = ds->labels[i] * detail::dot_row(ds->row(i), theta);
      s += detail::log1p_exp(-m);
    }
    return s / static_cast<double>(idx.size());
  };
  obj.gradient = [ds](const ParamVector& theta) {
    std::vector<double> g(ds->dim, 0.0);
    for (std::size_t i = 0; i < ds->size(); ++i) {
      const auto x = ds->row(i);
      const double y = ds->labels[i];
      const double m = y * detail::dot_row(x, theta);
      const double w = -y / (1.0 + std::exp(m));
      for (std::size_t j = 0; j < ds->dim; ++j) g[j] += w * x[j];
    }
    for (double& v : g) v /= static_cast<double>(ds->size());
    return g;
  };
  return obj;
}

inline int predict_sign(double margin) { return margin > 0.0 ? 1 : -1; }

/// loss = -(accuracy of sign(theta.x)) on the batch; piecewise constant,
/// quantized by 1/batch-size, values in [-1, 0]. sign(0) predicts class -1.
inline Objective accuracy_objective(const SyntheticDataset& dataset) {
  if (dataset.size() == 0) {
    throw invalid_argument_error("accuracy_objective requires a non-empty dataset");
  }
  auto ds = std::make_shared<SyntheticDataset>(dataset);
  Objective obj;
  obj.dim = ds->dim;
  obj.name = "accuracy";
  obj.eval = [ds](const ParamVector& theta, const BatchSpec& batch) {
    const auto idx = detail::batch_indices(*ds, batch);
    std::size_t correct = 0;
    for (std::size_t i : idx) {
      if (predict_sign(detail::dot_row(ds->row(i), theta)) == ds->labels[i]) {
        ++correct;
      }
    }
    return -static_cast<double>(correct) / static_cast<double>(idx.size());
  };
  return obj;
}

/// Full-dataset accuracy of sign(theta.x); used for held-out evaluation.
inline double dataset_accuracy(const SyntheticDataset& ds,
                               const ParamVector& theta) {
  std::size_t correct = 0;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    if (predict_sign(detail::dot_row(ds.row(i), theta)) == ds.labels[i]) {
      ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// CSV export/import: feature columns then label column, one row per sample.

inline void write_dataset_csv(const SyntheticDataset& ds,
                              const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw error("cannot open " + path + " for writing");
  for (std::size_t j = 0; j < ds.dim; ++j) out << "x" << j << ",";
  out << "label\n";
  for (std::size_t i = 0; i < ds.size(); ++i) {
    for (std::size_t j = 0; j < ds.dim; ++j) {
      out << format_double(ds.features[i * ds.dim + j]) << ",";
    }
    out << ds.labels[i] << "\n";
  }
}

inline SyntheticDataset read_dataset_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw error(path + ": empty dataset file");
  const std::size_t dim = split_view(line, ',').size() - 1;
  if (dim == 0) throw error(path + ": no feature columns");
  SyntheticDataset ds;
  ds.dim = dim;
  while (std::getline(in, line)) {
    if (trim_view(line).empty()) continue;
    const auto cells = split_view(line, ',');
    if (cells.size() != dim + 1) {
      throw error(path + ": row has wrong column count");
    }
    for (std::size_t j = 0; j < dim; ++j) {
      ds.features.push_back(parse_double(trim_view(cells[j]), "feature"));
    }
    ds.labels.push_back(
        static_cast<int>(parse_double(trim_view(cells[dim]), "label")));
  }
  return ds;
}

}  // namespace hizoo
