#pragma once

// Independent verification of the estimator identities: finite-difference
// oracles for analytic derivatives and Monte-Carlo checks of the Gaussian
// moment identities the estimators rely on. Oracle sampling uses a salted
// seed namespace so it can never share draws with optimizer replay.

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "hizoo/core.hpp"
#include "hizoo/estimators.hpp"
#include "hizoo/objectives.hpp"
#include "hizoo/perturb.hpp"

namespace hizoo {

/// Deterministic fixed-order pairwise summation; reproducible regardless of
/// how the sample loop is eventually parallelized, and accurate for long
/// Monte-Carlo sums.
class PairwiseSum {
 public:
  void add(double x) {
    block_ += x;
    if (++filled_ == kBlock) {
      partials_.push_back(block_);
      block_ = 0.0;
      filled_ = 0;
    }
  }

  double total() const {
    std::vector<double> level = partials_;
    if (filled_ > 0) level.push_back(block_);
    if (level.empty()) return 0.0;
    while (level.size() > 1) {
      std::vector<double> next;
      next.reserve(level.size() / 2 + 1);
      for (std::size_t i = 0; i + 1 < level.size(); i += 2) {
        next.push_back(level[i] + level[i + 1]);
      }
      if (level.size() % 2 == 1) next.push_back(level.back());
      level.swap(next);
    }
    return level[0];
  }

 private:
  static constexpr std::size_t kBlock = 1024;
  std::vector<double> partials_;
  double block_ = 0.0;
  std::size_t filled_ = 0;
};

/// One Monte-Carlo check. Per entry i the check passes when
///   |estimate_i - target_i| <= max(rel_tol * |target_i|, 5 * std_error_i),
/// so the false-failure rate stays below 1e-6 even where the stated relative
/// tolerance is finer than the estimator's statistical resolution.
struct MCReport {
  std::string name;
  std::vector<double> estimate;
  std::vector<double> target;
  std::vector<double> std_error;
  std::uint64_t n_samples = 0;
  double rel_tol = 0.0;
  bool pass = false;

  double max_abs_deviation() const {
    double m = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
      m = std::max(m, std::fabs(estimate[i] - target[i]));
    }
    return m;
  }

  double max_rel_deviation() const {
    double m = 0.0;
    for (std::size_t i = 0; i < estimate.size(); ++i) {
      const double denom = std::max(std::fabs(target[i]), 1e-300);
      m = std::max(m, std::fabs(estimate[i] - target[i]) / denom);
    }
    return m;
  }
};

namespace detail {

inline void finalize_report(MCReport& r) {
  r.pass = true;
  for (std::size_t i = 0; i < r.estimate.size(); ++i) {
    const double tol =
        std::max(r.rel_tol * std::fabs(r.target[i]), 5.0 * r.std_error[i]);
    if (!(std::fabs(r.estimate[i] - r.target[i]) <= tol)) {
      r.pass = false;
      return;
    }
  }
}

// Streaming per-entry mean and standard error with pairwise accumulation.
class MeanAccumulator {
 public:
  explicit MeanAccumulator(std::size_t dim) : sum_(dim), sumsq_(dim) {}

  void add(std::size_t i, double x) {
    sum_[i].add(x);
    sumsq_[i].add(x * x);
  }

  void fill(MCReport& r, std::uint64_t n) const {
    r.n_samples = n;
    r.estimate.resize(sum_.size());
    r.std_error.resize(sum_.size());
    const double dn = static_cast<double>(n);
    for (std::size_t i = 0; i < sum_.size(); ++i) {
      const double mean = sum_[i].total() / dn;
      const double var =
          std::max(0.0, sumsq_[i].total() / dn - mean * mean);
      r.estimate[i] = mean;
      r.std_error[i] = std::sqrt(var / dn);
    }
  }

 private:
  std::vector<PairwiseSum> sum_;
  std::vector<PairwiseSum> sumsq_;
};

}  // namespace detail

/// Central-difference gradient (obj(theta + h e_i) - obj(theta - h e_i)) / 2h.
inline std::vector<double> fd_gradient(const Objective& obj,
                                       const ParamVector& theta, double h,
                                       const BatchSpec& batch = {}) {
  if (!(h > 0.0)) throw invalid_argument_error("fd_gradient requires h > 0");
  ParamVector probe = theta;
  std::vector<double> g(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = obj.eval(probe, batch);
    probe[i] = orig - h;
    const double fm = obj.eval(probe, batch);
    probe[i] = orig;
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

/// Second-difference diagonal Hessian
/// (obj(theta + h e_i) + obj(theta - h e_i) - 2 obj(theta)) / h^2.
inline std::vector<double> fd_hessian_diag(const Objective& obj,
                                           const ParamVector& theta, double h,
                                           const BatchSpec& batch = {}) {
  if (!(h > 0.0)) {
    throw invalid_argument_error("fd_hessian_diag requires h > 0");
  }
  ParamVector probe = theta;
  const double f0 = obj.eval(probe, batch);
  std::vector<double> d(theta.size());
  for (std::size_t i = 0; i < theta.size(); ++i) {
    const double orig = probe[i];
    probe[i] = orig + h;
    const double fp = obj.eval(probe, batch);
    probe[i] = orig - h;
    const double fm = obj.eval(probe, batch);
    probe[i] = orig;
    d[i] = (fp + fm - 2.0 * f0) / (h * h);
  }
  return d;
}

/// Checks E[u'Au * u'Bu] = tr(A) tr(B) + 2 tr(AB) for diagonal A, B.
inline MCReport mc_magnus(std::span<const double> a_diag,
                          std::span<const double> b_diag, std::uint64_t n,
                          std::uint64_t seed, double rel_tol = 0.0) {
  if (a_diag.size() != b_diag.size()) {
    throw dimension_error("mc_magnus: A and B length mismatch");
  }
  if (n < 1) throw invalid_argument_error("mc_magnus requires N >= 1");
  const std::size_t d = a_diag.size();
  double tr_a = 0.0, tr_b = 0.0, tr_ab = 0.0;
  for (std::size_t i = 0; i < d; ++i) {
    tr_a += a_diag[i];
    tr_b += b_diag[i];
    tr_ab += a_diag[i] * b_diag[i];
  }

  SeedStream stream(derive_seed(seed, kOracleSeedSalt));
  detail::MeanAccumulator acc(1);
  std::vector<double> u(d);
  for (std::uint64_t k = 0; k < n; ++k) {
    double qa = 0.0, qb = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      u[i] = stream.next_normal();
      qa += a_diag[i] * u[i] * u[i];
      qb += b_diag[i] * u[i] * u[i];
    }
    acc.add(0, qa * qb);
  }

  MCReport r;
  r.name = "magnus_moment";
  r.rel_tol = rel_tol;
  r.target = {tr_a * tr_b + 2.0 * tr_ab};
  acc.fill(r, n);
  detail::finalize_report(r);
  return r;
}

/// Monte-Carlo mean of the diagonal Hessian sample on the quadratic
/// 1/2 theta' diag(h) theta, run through the real estimator path (three loss
/// evaluations per draw). Targets: h when corrected; for the uncorrected form
/// entry i picks up the exact bias tr(Sigma diag(h)) / (2 Sigma_i).
inline MCReport mc_hessian_mean(std::span<const double> h,
                                const DiagCovariance& sigma, double mu,
                                bool include_correction, std::uint64_t n,
                                std::uint64_t seed, double rel_tol = 0.0) {
  if (h.size() != sigma.size()) {
    throw dimension_error("mc_hessian_mean: h and sigma length mismatch");
  }
  if (n < 1) throw invalid_argument_error("mc_hessian_mean requires N >= 1");
  const std::size_t d = h.size();
  const Objective obj = quadratic(std::vector<double>(h.begin(), h.end()));
  const DiagCovariance root = sqrt_diag(sigma);

  double tr_sh = 0.0;
  for (std::size_t i = 0; i < d; ++i) tr_sh += sigma[i] * h[i];

  // Evaluated away from the minimum so the odd Taylor terms are exercised
  // too; for a quadratic they cancel exactly in the second difference.
  ParamVector theta(d, 0.5);
  const double ell = obj(theta);

  SeedStream stream(derive_seed(seed, kOracleSeedSalt + 1));
  detail::MeanAccumulator acc(d);
  std::vector<double> u(d);
  ParamVector probe(d);
  for (std::uint64_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      u[i] = stream.next_normal();
      probe[i] = theta[i] + mu * root[i] * u[i];
    }
    const double lp = obj(probe);
    for (std::size_t i = 0; i < d; ++i) {
      probe[i] = theta[i] - mu * root[i] * u[i];
    }
    const double lm = obj(probe);
    const double dl = delta_loss({ell, lp, lm});
    for (std::size_t i = 0; i < d; ++i) {
      acc.add(i, hessian_sample_entry(dl, mu, sigma[i], u[i],
                                      include_correction));
    }
  }

  MCReport r;
  r.name = include_correction ? "hessian_mean_corrected"
                              : "hessian_mean_uncorrected";
  r.rel_tol = rel_tol;
  r.target.resize(d);
  for (std::size_t i = 0; i < d; ++i) {
    r.target[i] = include_correction
                      ? h[i]
                      : h[i] + tr_sh / (2.0 * sigma[i]);
  }
  acc.fill(r, n);
  detail::finalize_report(r);
  return r;
}

/// Monte-Carlo mean of the preconditioned descent direction versus
/// Sigma * grad L(theta); the bias term is O(mu).
inline MCReport mc_gmu_mean(const Objective& obj, const ParamVector& theta,
                            const DiagCovariance& sigma, double mu,
                            std::uint64_t n, std::uint64_t seed,
                            double rel_tol = 0.0) {
  if (theta.size() != sigma.size() || theta.size() != obj.dim) {
    throw dimension_error("mc_gmu_mean: dimension mismatch");
  }
  if (n < 1) throw invalid_argument_error("mc_gmu_mean requires N >= 1");
  const std::size_t d = theta.size();
  const DiagCovariance root = sqrt_diag(sigma);
  const std::vector<double> grad = analytic_gradient(obj, theta);

  SeedStream stream(derive_seed(seed, kOracleSeedSalt + 2));
  detail::MeanAccumulator acc(d);
  std::vector<double> u(d);
  ParamVector probe(d);
  for (std::uint64_t k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < d; ++i) {
      u[i] = stream.next_normal();
      probe[i] = theta[i] + mu * root[i] * u[i];
    }
    const double lp = obj(probe);
    for (std::size_t i = 0; i < d; ++i) {
      probe[i] = theta[i] - mu * root[i] * u[i];
    }
    const double lm = obj(probe);
    const double pg = projected_gradient(lp, lm, mu);
    for (std::size_t i = 0; i < d; ++i) acc.add(i, pg * root[i] * u[i]);
  }

  MCReport r;
  r.name = "gmu_mean";
  r.rel_tol = rel_tol;
  r.target.resize(d);
  for (std::size_t i = 0; i < d; ++i) r.target[i] = sigma[i] * grad[i];
  acc.fill(r, n);
  detail::finalize_report(r);
  return r;
}

/// Empirical lower bounds for the smoothness constant L (max gradient
/// difference quotient over sampled pairs, finite-difference gradients) and
/// the minibatch gradient variance sigma^2 (max over sampled points).
struct SmoothnessEstimate {
  double smoothness = 0.0;
  double grad_variance = 0.0;
};

inline SmoothnessEstimate estimate_smoothness_and_variance(
    const Objective& obj, double box_lo, double box_hi, std::uint64_t n,
    std::uint64_t seed, double fd_step = 1e-5, std::size_t batch_size = 0,
    std::size_t batch_draws = 8) {
  if (n < 1) {
    throw invalid_argument_error(
        "estimate_smoothness_and_variance requires N >= 1");
  }
  SeedStream stream(derive_seed(seed, kOracleSeedSalt + 3));
  const std::size_t d = obj.dim;
  const double span = box_hi - box_lo;
  auto sample_point = [&] {
    ParamVector p(d);
    for (std::size_t i = 0; i < d; ++i) {
      p[i] = box_lo + span * stream.next_uniform();
    }
    return p;
  };

  SmoothnessEstimate out;
  for (std::uint64_t k = 0; k < n; ++k) {
    const ParamVector p1 = sample_point();
    const ParamVector p2 = sample_point();
    const auto g1 = fd_gradient(obj, p1, fd_step);
    const auto g2 = fd_gradient(obj, p2, fd_step);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      num += (g1[i] - g2[i]) * (g1[i] - g2[i]);
      den += (p1[i] - p2[i]) * (p1[i] - p2[i]);
    }
    if (den > 0.0) {
      out.smoothness = std::max(out.smoothness, std::sqrt(num / den));
    }

    if (batch_size > 0) {
      // Variance of the batched finite-difference gradient across draws.
      std::vector<std::vector<double>> grads;
      grads.reserve(batch_draws);
      for (std::size_t b = 0; b < batch_draws; ++b) {
        grads.push_back(fd_gradient(obj, p1, fd_step,
                                    BatchSpec{stream.next_u64(), batch_size}));
      }
      std::vector<double> mean(d, 0.0);
      for (const auto& g : grads) {
        for (std::size_t i = 0; i < d; ++i) mean[i] += g[i];
      }
      for (double& m : mean) m /= static_cast<double>(grads.size());
      double var = 0.0;
      for (const auto& g : grads) {
        for (std::size_t i = 0; i < d; ++i) {
          var += (g[i] - mean[i]) * (g[i] - mean[i]);
        }
      }
      var /= static_cast<double>(grads.size());
      out.grad_variance = std::max(out.grad_variance, var);
    }
  }
  return out;
}

}  // namespace hizoo
