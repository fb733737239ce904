#pragma once

// The `verify` suites: Monte-Carlo checks of the moment identities behind
// the estimators, plus the finite-difference gate for every bundled
// objective with analytic derivatives. One printed line per scalar check.

#include <cstdint>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "hizoo/core.hpp"
#include "hizoo/objectives.hpp"
#include "hizoo/oracle.hpp"

namespace hizoo {

namespace detail {

// Max relative deviation between analytic and finite-difference vectors over
// sampled points; per point, deviations are scaled by max(||analytic||_inf, 1)
// so zero crossings of single coordinates stay testable.
struct FdGateResult {
  double max_rel_grad = 0.0;
  double max_rel_hess = 0.0;
  bool has_hess = false;
};

inline FdGateResult fd_gate(const Objective& obj, double box_lo,
                            double box_hi, std::size_t n_points,
                            std::uint64_t seed, double grad_h, double hess_h,
                            double kink_band = 0.0) {
  SeedStream stream(derive_seed(seed, kOracleSeedSalt + 7));
  FdGateResult out;
  out.has_hess = static_cast<bool>(obj.hessian_diag);
  std::size_t accepted = 0;
  while (accepted < n_points) {
    ParamVector p(obj.dim);
    bool ok = true;
    for (std::size_t i = 0; i < obj.dim; ++i) {
      p[i] = box_lo + (box_hi - box_lo) * stream.next_uniform();
      if (kink_band > 0.0 && std::fabs(p[i]) < kink_band) ok = false;
    }
    if (!ok) continue;
    ++accepted;

    const auto an_g = obj.gradient(p);
    const auto fd_g = fd_gradient(obj, p, grad_h);
    double scale = 1.0;
    for (double g : an_g) scale = std::max(scale, std::fabs(g));
    for (std::size_t i = 0; i < an_g.size(); ++i) {
      out.max_rel_grad =
          std::max(out.max_rel_grad, std::fabs(fd_g[i] - an_g[i]) / scale);
    }

    if (out.has_hess) {
      const auto an_h = obj.hessian_diag(p);
      const auto fd_h = fd_hessian_diag(obj, p, hess_h);
      double hscale = 1.0;
      for (double h : an_h) hscale = std::max(hscale, std::fabs(h));
      for (std::size_t i = 0; i < an_h.size(); ++i) {
        out.max_rel_hess =
            std::max(out.max_rel_hess, std::fabs(fd_h[i] - an_h[i]) / hscale);
      }
    }
  }
  return out;
}

inline MCReport gate_report(const std::string& name, double deviation,
                            double tolerance) {
  MCReport r;
  r.name = name;
  r.estimate = {deviation};
  r.target = {0.0};
  r.std_error = {0.0};
  r.rel_tol = tolerance;
  r.pass = deviation <= tolerance;
  return r;
}

}  // namespace detail

/// Everything the `verify` subcommand runs; suites: magnus, hessian, gmu, fd.
inline std::vector<MCReport> run_verify_suites(
    const std::set<std::string>& suites, std::uint64_t samples,
    std::uint64_t seed) {
  std::vector<MCReport> reports;
  const bool all = suites.empty();
  auto wants = [&](const char* s) {
    return all || suites.count(s) > 0;
  };

  if (wants("magnus")) {
    {
      const std::vector<double> i2{1.0, 1.0};
      reports.push_back(mc_magnus(i2, i2, samples, seed, 0.02));
      reports.back().name = "magnus_identity2";
    }
    {
      const std::vector<double> a{1.0, 2.0, 3.0}, b{4.0, 5.0, 6.0};
      reports.push_back(mc_magnus(a, b, samples, seed, 0.02));
      reports.back().name = "magnus_diag123_456";
    }
  }

  if (wants("hessian")) {
    const std::vector<double> h1{2.0};
    const std::vector<double> h2{20000.0, 2.0};
    reports.push_back(mc_hessian_mean(h1, DiagCovariance::identity(1), 1e-3,
                                      true, samples, seed, 0.02));
    reports.back().name = "hessian_corrected_d1";
    reports.push_back(mc_hessian_mean(h1, DiagCovariance::identity(1), 1e-3,
                                      false, samples, seed, 0.02));
    reports.back().name = "hessian_uncorrected_d1";
    reports.push_back(mc_hessian_mean(h2, DiagCovariance::identity(2), 1e-3,
                                      true, samples, seed, 0.03));
    reports.back().name = "hessian_corrected_illcond";
    reports.push_back(mc_hessian_mean(h2, DiagCovariance::identity(2), 1e-3,
                                      false, samples, seed, 0.03));
    reports.back().name = "hessian_uncorrected_illcond";
  }

  if (wants("gmu")) {
    {
      const Objective obj = quadratic({2.0, 2.0});
      const DiagCovariance sigma({4.0, 1.0});
      reports.push_back(mc_gmu_mean(obj, ParamVector({1.0, 1.0}), sigma, 1e-3,
                                    samples, seed, 0.02));
      reports.back().name = "gmu_quadratic";
    }
    {
      const Objective fa = test_function(TestFunction::a);
      reports.push_back(mc_gmu_mean(fa, ParamVector({0.0, 0.0}),
                                    DiagCovariance::identity(2), 1e-4,
                                    samples, seed, 0.05));
      reports.back().name = "gmu_func_a";
      // O(mu) bias: with common random numbers the residual against
      // Sigma*grad must shrink when mu drops 10x.
      const MCReport coarse =
          mc_gmu_mean(fa, ParamVector({0.0, 0.0}),
                      DiagCovariance::identity(2), 1e-1, samples, seed);
      const MCReport fine =
          mc_gmu_mean(fa, ParamVector({0.0, 0.0}),
                      DiagCovariance::identity(2), 1e-2, samples, seed);
      auto norm_dev = [](const MCReport& r) {
        double s = 0.0;
        for (std::size_t i = 0; i < r.estimate.size(); ++i) {
          const double d = r.estimate[i] - r.target[i];
          s += d * d;
        }
        return std::sqrt(s);
      };
      MCReport ratio;
      ratio.name = "gmu_mu_bias_shrink";
      ratio.estimate = {norm_dev(coarse) / norm_dev(fine)};
      ratio.target = {5.0};
      ratio.std_error = {0.0};
      ratio.n_samples = samples;
      ratio.pass = ratio.estimate[0] >= 5.0;
      reports.push_back(std::move(ratio));
    }
  }

  if (wants("fd")) {
    const std::size_t pts = 100;
    {
      const auto g = detail::fd_gate(test_function(TestFunction::a), -5.0,
                                     5.0, pts, seed, 1e-5, 1e-3);
      reports.push_back(detail::gate_report("fd_grad_func_a", g.max_rel_grad,
                                            1e-5));
      reports.push_back(detail::gate_report("fd_hess_func_a", g.max_rel_hess,
                                            1e-4));
    }
    {
      const auto g = detail::fd_gate(test_function(TestFunction::b), -5.0,
                                     5.0, pts, seed, 1e-5, 1e-3, 1e-3);
      reports.push_back(detail::gate_report("fd_grad_func_b", g.max_rel_grad,
                                            1e-5));
    }
    {
      const auto g = detail::fd_gate(test_function(TestFunction::c), -5.0,
                                     5.0, pts, seed, 1e-5, 1e-3);
      reports.push_back(detail::gate_report("fd_grad_func_c", g.max_rel_grad,
                                            1e-5));
      reports.push_back(detail::gate_report("fd_hess_func_c", g.max_rel_hess,
                                            1e-4));
    }
    {
      const auto g = detail::fd_gate(quadratic({2.0, 2.0}), -5.0, 5.0, pts,
                                     seed, 1e-5, 1e-3);
      reports.push_back(detail::gate_report("fd_grad_quadratic",
                                            g.max_rel_grad, 1e-5));
      reports.push_back(detail::gate_report("fd_hess_quadratic",
                                            g.max_rel_hess, 1e-4));
    }
    {
      const auto ds = make_synthetic_dataset(7, 64, 4, 2.0);
      const auto g = detail::fd_gate(logistic_objective(ds), -1.0, 1.0, pts,
                                     seed, 1e-6, 1e-3);
      reports.push_back(detail::gate_report("fd_grad_logistic",
                                            g.max_rel_grad, 1e-5));
    }
  }

  return reports;
}

inline std::string verify_report_lines(const std::vector<MCReport>& reports) {
  std::string out;
  for (const auto& r : reports) {
    for (std::size_t i = 0; i < r.estimate.size(); ++i) {
      out += r.name;
      if (r.estimate.size() > 1) out += "[" + std::to_string(i) + "]";
      out += " estimate=" + format_double(r.estimate[i]);
      out += " target=" + format_double(r.target[i]);
      out += " stderr=" + format_double(r.std_error[i]);
      out += r.pass ? " PASS" : " FAIL";
      out += "\n";
    }
  }
  return out;
}

inline void write_verify_summary(const std::vector<MCReport>& reports,
                                 const std::string& path) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : reports) {
    nlohmann::json j;
    j["name"] = r.name;
    j["estimate"] = r.estimate;
    j["target"] = r.target;
    j["std_error"] = r.std_error;
    j["n_samples"] = r.n_samples;
    j["rel_tol"] = r.rel_tol;
    j["pass"] = r.pass;
    out.push_back(j);
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw error("cannot open " + path + " for writing");
  f << out.dump(2) << "\n";
}

}  // namespace hizoo
