#pragma once

// Seeded Gaussian streams and replayable in-place parameter perturbation.
//
// The generator is version-pinned; trajectory golden files depend on it:
//   * u64 stream: splitmix64, state advanced once per draw.
//   * uniform:    ((x >> 11) + 0.5) * 2^-53, strictly inside (0,1).
//   * normal:     AS241 rational approximation of the standard normal
//                 quantile (PPND16 variant, |abs err| ~ 1e-15), one uniform
//                 per normal.
// Draws are consumed in coordinate order 0..d-1; descent-phase replay must
// consume them in the same order as the perturbation phase.

#include <cmath>
#include <cstdint>
#include <vector>

#include "hizoo/core.hpp"

namespace hizoo {

inline std::uint64_t splitmix64_next(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Decorrelated child seed for (base, index); used to split one experiment
/// seed into per-run / per-step / per-purpose streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
  std::uint64_t s = base ^ (0x9E3779B97F4A7C15ull * (index + 1));
  return splitmix64_next(s);
}

// Oracle streams are salted so verification sampling can never collide with
// optimizer replay seeds.
inline constexpr std::uint64_t kOracleSeedSalt = 0x6F7261636C65ull;

/// Standard normal quantile, AS241 (PPND16 coefficients).
inline double normal_quantile(double p) {
  const double q = p - 0.5;
  if (std::fabs(q) <= 0.425) {
    const double r = 0.180625 - q * q;
    return q *
           (((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r +
                 6.7265770927008700853e4) *
                    r +
                4.5921953931549871457e4) *
                   r +
               1.3731693765509461125e4) *
                  r +
              1.9715909503065514427e3) *
                 r +
             1.3314166789178437745e2) *
                r +
            3.3871328727963666080e0) /
           (((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r +
                 3.9307895800092710610e4) *
                    r +
                2.1213794301586595867e4) *
                   r +
               5.3941960214247511077e3) *
                  r +
              6.8718700749205790830e2) *
                 r +
             4.2313330701600911252e1) *
                r +
            1.0);
  }
  double r = (q < 0.0) ? p : 1.0 - p;
  r = std::sqrt(-std::log(r));
  double val;
  if (r <= 5.0) {
    r -= 1.6;
    val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) *
                    r +
                2.41780725177450611770e-1) *
                   r +
               1.27045825245236838258e0) *
                  r +
              3.64784832476320460504e0) *
                 r +
             5.76949722146069140550e0) *
                r +
            4.63033784615654529590e0) *
               r +
           1.42343711074968357734e0) /
          (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) *
                    r +
                1.51986665636164571966e-2) *
                   r +
               1.48103976427480074590e-1) *
                  r +
              6.89767334985100004550e-1) *
                 r +
             1.67638483018380384940e0) *
                r +
            2.05319162663775882187e0) *
               r +
           1.0);
  } else {
    r -= 5.0;
    val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) *
                    r +
                1.24266094738807843860e-3) *
                   r +
               2.65321895265761230930e-2) *
                  r +
              2.96560571828504891230e-1) *
                 r +
             1.78482653991729133580e0) *
                r +
            5.46378491116411436990e0) *
               r +
           6.65790464350110377720e0) /
          (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) *
                    r +
                1.84631831751005468180e-5) *
                   r +
               7.86869131145613259100e-4) *
                  r +
              1.48753612908506148525e-2) *
                 r +
             1.36929880922735805310e-1) *
                r +
            5.99832206555887937690e-1) *
               r +
           1.0);
  }
  return (q < 0.0) ? -val : val;
}

/// Deterministic draw stream; identical (seed) values yield identical
/// sequences on every run and platform. Single-owner, no global state.
class SeedStream {
 public:
  explicit SeedStream(std::uint64_t seed = 0)
      : seed_(seed), state_(seed), position_(0) {}

  void reset() {
    state_ = seed_;
    position_ = 0;
  }

  std::uint64_t next_u64() {
    ++position_;
    return splitmix64_next(state_);
  }

  double next_uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  double next_normal() { return normal_quantile(next_uniform()); }

  std::uint64_t seed() const { return seed_; }
  std::uint64_t position() const { return position_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
  std::uint64_t position_;
};

/// d standard normals for (seed); same (seed, d) is bitwise reproducible.
inline std::vector<double> gaussian_stream(std::uint64_t seed,
                                           std::size_t dim) {
  if (dim == 0) {
    throw empty_dimension_error("gaussian_stream requires d >= 1");
  }
  SeedStream stream(seed);
  std::vector<double> out(dim);
  for (double& x : out) x = stream.next_normal();
  return out;
}

/// theta_i += scale * sqrt_sigma_i * u_i with u regenerated from seed.
/// The direction u is streamed, never materialized: O(1) auxiliary memory.
inline void perturb_in_place(ParamVector& theta, double scale,
                             const DiagCovariance& sqrt_sigma,
                             std::uint64_t seed) {
  if (theta.size() != sqrt_sigma.size()) {
    throw dimension_error("perturb_in_place: theta and sqrt_sigma length mismatch");
  }
  if (!std::isfinite(scale)) {
    throw invalid_scale_error("perturb_in_place: scale must be finite");
  }
  SeedStream stream(seed);
  for (std::size_t i = 0; i < theta.size(); ++i) {
    theta[i] += scale * sqrt_sigma[i] * stream.next_normal();
  }
}

}  // namespace hizoo
