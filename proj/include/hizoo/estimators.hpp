#pragma once

// Zeroth-order gradient and diagonal-Hessian estimators. All functions here
// are pure; the optimizer streams them per coordinate to stay O(d).

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "hizoo/core.hpp"

namespace hizoo {

/// Losses at theta, theta + mu*S*u and theta - mu*S*u for one probe.
struct LossTriple {
  double ell = 0.0;
  double ell_plus = 0.0;
  double ell_minus = 0.0;
};

/// Per-step diagonal Hessian sample; entries may be negative before the EMA
/// absolute value is applied.
struct HessianSample {
  std::vector<double> diag;
  bool correction_included = false;
};

/// Directional derivative estimate along the probe: (l+ - l-) / (2 mu).
inline double projected_gradient(double ell_plus, double ell_minus,
                                 double mu) {
  if (!(mu > 0.0)) {
    throw invalid_scale_error("projected_gradient requires mu > 0");
  }
  return (ell_plus - ell_minus) / (2.0 * mu);
}

/// SPSA gradient estimate ((l+ - l-) / (2 mu)) * u.
inline std::vector<double> spsa_gradient(double ell_plus, double ell_minus,
                                         double mu,
                                         std::span<const double> u) {
  const double g = projected_gradient(ell_plus, ell_minus, mu);
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = g * u[i];
  return out;
}

/// Second difference l+ + l- - 2 l; the curvature signal along the probe.
inline double delta_loss(const LossTriple& t) {
  return t.ell_plus + t.ell_minus - 2.0 * t.ell;
}

/// Diagonal entry of the per-probe Hessian sample. With the correction the
/// sample is unbiased on quadratics; without it (the default descent form)
/// entry i picks up a +tr(Sigma H)/(2 Sigma_i) bias.
inline double hessian_sample_entry(double delta_l, double mu, double sigma_i,
                                   double u_i, bool include_correction) {
  const double c = delta_l / (2.0 * mu * mu);
  const double quad = u_i * u_i / sigma_i;
  return include_correction ? c * (quad - 1.0 / sigma_i) : c * quad;
}

inline HessianSample hessian_sample(double delta_l, double mu,
                                    const DiagCovariance& sigma,
                                    std::span<const double> u,
                                    bool include_correction) {
  if (!(mu > 0.0)) {
    throw invalid_scale_error("hessian_sample requires mu > 0");
  }
  if (sigma.size() != u.size()) {
    throw dimension_error("hessian_sample: sigma and u length mismatch");
  }
  HessianSample out;
  out.correction_included = include_correction;
  out.diag.resize(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    out.diag[i] =
        hessian_sample_entry(delta_l, mu, sigma[i], u[i], include_correction);
  }
  return out;
}

/// One EMA step on a single entry, clamped. The absolute value is applied to
/// the sample, not to the running average.
inline double ema_entry(double sigma_i, double sample_i, double alpha,
                        const ClampBounds& bounds) {
  return clamp_entry((1.0 - alpha) * sigma_i + alpha * std::fabs(sample_i),
                     bounds);
}

/// Sigma_{t+1} = clamp((1 - alpha) Sigma_t + alpha |sample|).
inline DiagCovariance ema_update(const DiagCovariance& sigma,
                                 const HessianSample& sample, double alpha) {
  if (!(alpha >= 0.0) || !(alpha <= 1.0)) {
    throw invalid_smoothing_error("ema_update requires 0 <= alpha <= 1");
  }
  if (sigma.size() != sample.diag.size()) {
    throw dimension_error("ema_update: sigma and sample length mismatch");
  }
  std::vector<double> out(sigma.size());
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    out[i] = ema_entry(sigma[i], sample.diag[i], alpha, sigma.bounds());
  }
  return DiagCovariance(std::move(out), sigma.bounds());
}

/// Preconditioned descent direction ((l+ - l-) / (2 mu)) * (S u), where S is
/// the square root of the diagonal covariance. Callers average n of these
/// for multi-probe steps.
inline std::vector<double> natural_gradient(double ell_plus, double ell_minus,
                                            double mu,
                                            const DiagCovariance& sqrt_sigma,
                                            std::span<const double> u) {
  if (sqrt_sigma.size() != u.size()) {
    throw dimension_error("natural_gradient: sqrt_sigma and u length mismatch");
  }
  const double g = projected_gradient(ell_plus, ell_minus, mu);
  std::vector<double> out(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) out[i] = g * sqrt_sigma[i] * u[i];
  return out;
}

}  // namespace hizoo
