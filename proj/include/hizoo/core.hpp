#pragma once

// Dense parameter vectors and diagonal-covariance arithmetic shared by the
// whole library, plus the error types every module throws.

#include <algorithm>
#include <cassert>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hizoo {

struct error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct invalid_covariance_error : error {
  using error::error;
};
struct dimension_error : error {
  using error::error;
};
struct empty_dimension_error : error {
  using error::error;
};
struct invalid_scale_error : error {
  using error::error;
};
struct invalid_smoothing_error : error {
  using error::error;
};
struct invalid_argument_error : error {
  using error::error;
};
struct unsupported_objective_error : error {
  using error::error;
};
struct unsupported_plot_error : error {
  using error::error;
};
struct config_error : error {
  using error::error;
};

// A loss became non-finite (or crossed the runaway threshold) mid-run.
struct diverged_error : error {
  std::uint64_t step;
  double loss;
  diverged_error(std::uint64_t step_, double loss_)
      : error("loss diverged at step " + std::to_string(step_)),
        step(step_),
        loss(loss_) {}
};

/// Parameter vector theta; length is fixed at construction.
class ParamVector {
 public:
  ParamVector() = default;
  explicit ParamVector(std::size_t dim, double fill = 0.0) : v_(dim, fill) {}
  explicit ParamVector(std::vector<double> values) : v_(std::move(values)) {}
  ParamVector(std::initializer_list<double> values) : v_(values) {}

  std::size_t size() const { return v_.size(); }
  double operator[](std::size_t i) const { return v_[i]; }
  double& operator[](std::size_t i) { return v_[i]; }
  const std::vector<double>& values() const { return v_; }
  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }

  auto begin() { return v_.begin(); }
  auto end() { return v_.end(); }
  auto begin() const { return v_.begin(); }
  auto end() const { return v_.end(); }

  bool all_finite() const {
    return std::all_of(v_.begin(), v_.end(),
                       [](double x) { return std::isfinite(x); });
  }

  friend bool operator==(const ParamVector& a, const ParamVector& b) {
    return a.v_ == b.v_;
  }

 private:
  std::vector<double> v_;
};

/// Enforced range of Sigma entries. lower must be positive.
struct ClampBounds {
  double lower = 1e-8;
  double upper = 1e8;

  void validate() const {
    if (!(lower > 0.0) || !(lower <= upper) || !std::isfinite(lower) ||
        !std::isfinite(upper)) {
      throw invalid_covariance_error("clamp bounds require 0 < lower <= upper");
    }
  }
  friend bool operator==(const ClampBounds&, const ClampBounds&) = default;
};

/// Diagonal covariance Sigma: strictly positive entries plus clamp bounds.
/// Entries may sit outside the bounds until clamp_diag is applied.
class DiagCovariance {
 public:
  DiagCovariance() = default;

  DiagCovariance(std::vector<double> diag, ClampBounds bounds = {})
      : d_(std::move(diag)), b_(bounds) {
    b_.validate();
    for (double x : d_) {
      if (!std::isfinite(x) || !(x > 0.0)) {
        throw invalid_covariance_error(
            "covariance entries must be positive and finite");
      }
    }
  }

  static DiagCovariance identity(std::size_t dim, ClampBounds bounds = {}) {
    return DiagCovariance(std::vector<double>(dim, 1.0), bounds);
  }

  std::size_t size() const { return d_.size(); }
  double operator[](std::size_t i) const { return d_[i]; }
  double& operator[](std::size_t i) { return d_[i]; }
  const std::vector<double>& values() const { return d_; }
  const ClampBounds& bounds() const { return b_; }

  auto begin() const { return d_.begin(); }
  auto end() const { return d_.end(); }

  double min_entry() const { return *std::min_element(d_.begin(), d_.end()); }
  double max_entry() const { return *std::max_element(d_.begin(), d_.end()); }
  double mean_entry() const {
    return d_.empty()
               ? 0.0
               : std::accumulate(d_.begin(), d_.end(), 0.0) /
                     static_cast<double>(d_.size());
  }

  // Debug-mode audit of the positivity invariant.
  void audit() const {
#ifndef NDEBUG
    for (double x : d_) assert(std::isfinite(x) && x > 0.0);
#endif
  }

  friend bool operator==(const DiagCovariance& a, const DiagCovariance& b) {
    return a.d_ == b.d_ && a.b_ == b.b_;
  }

 private:
  std::vector<double> d_;
  ClampBounds b_;
};

/// Elementwise square root; bounds carry through unchanged.
inline DiagCovariance sqrt_diag(const DiagCovariance& s) {
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    const double x = s[i];
    if (!std::isfinite(x) || !(x > 0.0)) {
      throw invalid_covariance_error("sqrt_diag requires positive finite entries");
    }
    out[i] = std::sqrt(x);
  }
  return DiagCovariance(std::move(out), s.bounds());
}

inline double clamp_entry(double x, const ClampBounds& b) {
  return std::min(b.upper, std::max(b.lower, x));
}

/// Clamp every entry into [lower, upper]; idempotent.
inline DiagCovariance clamp_diag(const DiagCovariance& s) {
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (!std::isfinite(s[i])) {
      throw invalid_covariance_error("clamp_diag requires finite entries");
    }
    out[i] = clamp_entry(s[i], s.bounds());
  }
  return DiagCovariance(std::move(out), s.bounds());
}

}  // namespace hizoo
