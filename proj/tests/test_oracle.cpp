#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hizoo/oracle.hpp"
#include "hizoo/verify.hpp"

using namespace hizoo;

TEST_CASE("pairwise summation") {
  PairwiseSum s;
  for (int i = 1; i <= 5000; ++i) s.add(static_cast<double>(i));
  CHECK(s.total() == 5000.0 * 5001.0 / 2.0);
}

TEST_CASE("fd gradient on x^3: error is exactly h^2") {
  Objective cubic;
  cubic.dim = 1;
  cubic.name = "cubic";
  cubic.eval = [](const ParamVector& t, const BatchSpec&) {
    return t[0] * t[0] * t[0];
  };
  const auto g = fd_gradient(cubic, ParamVector{1.0}, 1e-4);
  CHECK(g[0] == doctest::Approx(3.00000001).epsilon(1e-7 / 3.0));
}

TEST_CASE("fd gradient of a constant objective is zero") {
  Objective flat;
  flat.dim = 3;
  flat.eval = [](const ParamVector&, const BatchSpec&) { return 4.25; };
  for (double g : fd_gradient(flat, ParamVector(3, 0.7), 1e-4)) {
    CHECK(g == 0.0);
  }
}

TEST_CASE("fd gradient matches function (c) analytically") {
  // Quadratic: truncation-free, so a coarse step avoids cancellation noise.
  const Objective fc = test_function(TestFunction::c);
  const auto fd = fd_gradient(fc, ParamVector{1.0, 1.0}, 1e-3);
  const auto an = fc.gradient(ParamVector{1.0, 1.0});
  CHECK(fd[0] == doctest::Approx(an[0]).epsilon(1e-8));
  CHECK(fd[1] == doctest::Approx(an[1]).epsilon(1e-8));
}

TEST_CASE("fd hessian diag examples") {
  const Objective fc = test_function(TestFunction::c);
  const auto hc = fd_hessian_diag(fc, ParamVector{-2.0, 3.0}, 1e-2);
  CHECK(hc[0] == doctest::Approx(20000.0).epsilon(1e-6));
  CHECK(hc[1] == doctest::Approx(2.0).epsilon(1e-6));

  Objective affine;
  affine.dim = 2;
  affine.eval = [](const ParamVector& t, const BatchSpec&) {
    return 3.0 * t[0] - 2.0 * t[1] + 1.0;
  };
  for (double h : fd_hessian_diag(affine, ParamVector{0.3, -0.9}, 1e-3)) {
    CHECK(std::fabs(h) <= 1e-6);
  }

  const Objective fa = test_function(TestFunction::a);
  const auto ha = fd_hessian_diag(fa, ParamVector{1.0, 4.0}, 1e-3);
  CHECK(ha[1] == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(ha[0] == doctest::Approx(68.8).epsilon(1e-6));
}

TEST_CASE("fd rejects non-positive step") {
  const Objective fc = test_function(TestFunction::c);
  CHECK_THROWS_AS(fd_gradient(fc, ParamVector{0.0, 0.0}, 0.0),
                  invalid_argument_error);
  CHECK_THROWS_AS(fd_hessian_diag(fc, ParamVector{0.0, 0.0}, -1.0),
                  invalid_argument_error);
}

TEST_CASE("fd gate: analytic derivatives agree at 100 random points") {
  // This gate guards every optimizer test downstream.
  const auto reports = run_verify_suites({"fd"}, 0, 12345);
  REQUIRE(!reports.empty());
  for (const auto& r : reports) {
    INFO(r.name, " deviation=", r.estimate[0]);
    CHECK(r.pass);
  }
}

TEST_CASE("mc_magnus closed forms (quick)") {
  SUBCASE("identity 2x2: target 8") {
    const std::vector<double> i2{1.0, 1.0};
    const auto r = mc_magnus(i2, i2, 200000, 99, 0.05);
    CHECK(r.target[0] == 8.0);
    CHECK(r.pass);
  }
  SUBCASE("diag(1,2,3) x diag(4,5,6): target 154") {
    const std::vector<double> a{1.0, 2.0, 3.0}, b{4.0, 5.0, 6.0};
    const auto r = mc_magnus(a, b, 200000, 99, 0.05);
    CHECK(r.target[0] == 154.0);
    CHECK(r.pass);
    CHECK(r.std_error[0] > 0.0);
    CHECK(r.n_samples == 200000);
  }
  SUBCASE("length mismatch") {
    const std::vector<double> a{1.0}, b{1.0, 2.0};
    CHECK_THROWS_AS(mc_magnus(a, b, 10, 1), dimension_error);
  }
}

TEST_CASE("mc_hessian_mean d=1 (quick)") {
  const std::vector<double> h{2.0};
  const auto corr = mc_hessian_mean(h, DiagCovariance::identity(1), 1e-3,
                                    true, 200000, 7, 0.05);
  CHECK(corr.target[0] == 2.0);
  CHECK(corr.pass);
  const auto plain = mc_hessian_mean(h, DiagCovariance::identity(1), 1e-3,
                                     false, 200000, 7, 0.05);
  CHECK(plain.target[0] == 3.0);
  CHECK(plain.pass);
}

TEST_CASE("mc_hessian_mean corrected is unbiased for non-identity sigma") {
  const std::vector<double> h{4.0, 1.0};
  const DiagCovariance sigma({3.0, 0.5});
  const auto r = mc_hessian_mean(h, sigma, 1e-3, true, 300000, 8, 0.1);
  CHECK(r.target[0] == 4.0);
  CHECK(r.target[1] == 1.0);
  CHECK(r.pass);
  // Uncorrected target carries the tr(Sigma H)/(2 Sigma_i) bias.
  const auto p = mc_hessian_mean(h, sigma, 1e-3, false, 300000, 8, 0.1);
  const double tr_sh = 3.0 * 4.0 + 0.5 * 1.0;
  CHECK(p.target[0] == doctest::Approx(4.0 + tr_sh / 6.0));
  CHECK(p.target[1] == doctest::Approx(1.0 + tr_sh / 1.0));
  CHECK(p.pass);
}

TEST_CASE("mc_gmu_mean quadratic (quick)") {
  const Objective q = quadratic({2.0, 2.0});
  const DiagCovariance sigma({4.0, 1.0});
  const auto r =
      mc_gmu_mean(q, ParamVector{1.0, 1.0}, sigma, 1e-3, 200000, 17, 0.05);
  CHECK(r.target[0] == 8.0);
  CHECK(r.target[1] == 2.0);
  CHECK(r.pass);
}

TEST_CASE("mc_gmu_mean at a stationary point stays within standard error") {
  const Objective q = quadratic({2.0, 2.0});
  const auto r = mc_gmu_mean(q, ParamVector{0.0, 0.0},
                             DiagCovariance::identity(2), 1e-3, 100000, 3);
  for (std::size_t i = 0; i < 2; ++i) {
    CHECK(std::fabs(r.estimate[i]) <= 5.0 * r.std_error[i]);
  }
  CHECK(r.pass);
}

TEST_CASE("mc_gmu_mean function (a) and the g_mu norm bound direction") {
  const Objective fa = test_function(TestFunction::a);
  const auto r = mc_gmu_mean(fa, ParamVector{0.0, 0.0},
                             DiagCovariance::identity(2), 1e-4, 200000, 23,
                             0.1);
  CHECK(r.target[0] == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
  CHECK(r.target[1] == doctest::Approx(-4.0));
  CHECK(r.pass);

  // E[||g_mu||^2] <= 4 (tr Sigma + beta_u) ||grad||^2_Sigma + O(mu^2):
  // check the inequality direction at small mu on the quadratic.
  const Objective q = quadratic({2.0, 2.0});
  const DiagCovariance sigma = DiagCovariance::identity(2);
  SeedStream stream(derive_seed(77, kOracleSeedSalt));
  double sum_sq = 0.0;
  const std::size_t n = 100000;
  const ParamVector theta{1.0, 1.0};
  for (std::size_t k = 0; k < n; ++k) {
    const double ux = stream.next_normal(), uy = stream.next_normal();
    ParamVector probe{theta[0] + 1e-4 * ux, theta[1] + 1e-4 * uy};
    const double lp = q(probe);
    probe = ParamVector{theta[0] - 1e-4 * ux, theta[1] - 1e-4 * uy};
    const double lm = q(probe);
    const double pg = projected_gradient(lp, lm, 1e-4);
    sum_sq += pg * pg * (ux * ux + uy * uy);
  }
  const double mean_sq = sum_sq / static_cast<double>(n);
  const double grad_sq_sigma = 2.0 * 2.0 + 2.0 * 2.0;  // ||grad||^2_Sigma
  const double bound = 4.0 * (2.0 + 1e8) * grad_sq_sigma;
  CHECK(mean_sq <= bound);
}

TEST_CASE("smoothness and variance estimates") {
  SUBCASE("quadratic h=(2,2): L -> 2 from below") {
    const Objective q = quadratic({2.0, 2.0});
    const auto est = estimate_smoothness_and_variance(q, -1.0, 1.0, 200, 5);
    CHECK(est.smoothness <= 2.0 + 1e-6);
    CHECK(est.smoothness >= 1.9);
    CHECK(est.grad_variance == 0.0);  // full-batch objective
  }
  SUBCASE("function (c): L >= 19000 at N=1000 on [-1,1]^2") {
    const Objective fc = test_function(TestFunction::c);
    const auto est =
        estimate_smoothness_and_variance(fc, -1.0, 1.0, 1000, 5);
    CHECK(est.smoothness >= 19000.0);
    CHECK(est.smoothness <= 20000.0 + 1.0);
  }
  SUBCASE("batched logistic has positive gradient variance") {
    const auto ds = make_synthetic_dataset(5, 256, 4, 2.0);
    const Objective obj = logistic_objective(ds);
    const auto est =
        estimate_smoothness_and_variance(obj, -1.0, 1.0, 10, 5, 1e-5, 16);
    CHECK(est.grad_variance > 0.0);
  }
}
