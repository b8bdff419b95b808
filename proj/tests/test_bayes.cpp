#include <doctest.h>

#include <cmath>
#include <limits>

#include "oracles.hpp"
#include "vspline/bayes.hpp"
#include "vspline/errors.hpp"
#include "vspline/gram_fit.hpp"

using namespace vspline;
using vspline::test::Rng;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

KernelConfig config_for(Rng& rng, const Samples& s, bool weighted) {
  if (!weighted) return KernelConfig::uniform();
  std::vector<double> knots;
  for (const auto& x : s) knots.push_back(x.t);
  return KernelConfig::for_knots(knots, test::random_weights(rng, knots.size() + 1));
}

Eigen::MatrixXd random_spd(Rng& rng, int n) {
  Eigen::MatrixXd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.normal();
  return a * a.transpose() + Eigen::MatrixXd::Identity(n, n);
}

Eigen::MatrixXd random_matrix(Rng& rng, int rows, int cols) {
  Eigen::MatrixXd a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = rng.normal();
  return a;
}

}  // namespace

TEST_CASE("prior covariance values") {
  const GpPrior diffuse{1.0, kInf, KernelConfig::uniform()};
  for (double s : {0.1, 0.5, 0.9}) {
    for (double t : {0.2, 0.7}) {
      CHECK(prior_cov(s, t, CovPair::ff, diffuse) ==
            doctest::Approx(test::quad_r1(s, t, KernelConfig::uniform())).epsilon(1e-12));
    }
  }
  const GpPrior two{2.0, kInf, KernelConfig::uniform()};
  CHECK(prior_cov(0.3, 0.8, CovPair::dfdf, two) == doctest::Approx(0.6).epsilon(1e-15));
  for (CovPair p : {CovPair::ff, CovPair::fdf, CovPair::dff, CovPair::dfdf}) {
    CHECK(prior_cov(0.0, 0.6, p, diffuse) == 0.0);
  }
  const GpPrior finite{2.0, 3.0, KernelConfig::uniform()};
  CHECK(prior_cov(0.3, 0.8, CovPair::ff, finite) ==
        doctest::Approx(6.0 * 1.24 + 2.0 * eval_r1(0.3, 0.8, KernelConfig::uniform())));
  CHECK(prior_cov(0.3, 0.8, CovPair::fdf, finite) == doctest::Approx(6.0 * 0.3 + 2.0 * eval_r1_dt(0.3, 0.8, KernelConfig::uniform())));
  CHECK(prior_cov(0.3, 0.8, CovPair::dfdf, finite) == doctest::Approx(6.0 + 0.6));
  CHECK_THROWS_AS(prior_cov(1.2, 0.3, CovPair::ff, diffuse), DomainError);
  CHECK_THROWS_AS(prior_cov(0.2, 0.3, CovPair::ff, GpPrior{-1.0, kInf, KernelConfig::uniform()}), InvalidInputError);
}

TEST_CASE("finite-rho posterior matches joint Gaussian conditioning") {
  Rng rng(31);
  for (int rep = 0; rep < 40; ++rep) {
    const int n = rng.integer(2, 6);
    const auto s = test::random_samples(rng, n, 0.02);
    const auto cfg = config_for(rng, s, rep % 2 == 1);
    const double beta = rng.log_uniform(0.1, 10.0);
    const double rho = rng.log_uniform(0.1, 100.0);
    const double lambda = rng.log_uniform(1e-3, 1.0);
    const double gamma = rng.log_uniform(0.1, 10.0);
    const auto post = posterior_mean_finite_rho(s, GpPrior{beta, rho, cfg}, lambda, gamma);
    const double sigma2 = n * lambda * beta;
    for (int k = 0; k < 5; ++k) {
      const double t = rng.uniform(0.0, 1.0);
      const auto ref = test::condition_joint_gaussian(s, t, rho * beta, beta, sigma2, gamma, cfg);
      CHECK(std::abs(post.mean(t) - ref.mean) <= 1e-8 * std::max(1.0, std::abs(ref.mean)));
      CHECK(std::abs(post.mean_deriv(t) - ref.mean_deriv) <= 1e-8 * std::max(1.0, std::abs(ref.mean_deriv)));
      CHECK(std::abs(post.variance(t) - ref.variance) <= 1e-8 * std::max(1.0, std::abs(ref.variance)));
    }
  }
}

TEST_CASE("zero data gives the zero posterior") {
  Samples s{{0.2, 0.0, 0.0}, {0.5, 0.0, 0.0}, {0.7, 0.0, 0.0}};
  const auto post = posterior_mean_finite_rho(s, GpPrior{1.0, 5.0, KernelConfig::uniform()}, 0.01, 1.0);
  for (double t : {0.0, 0.3, 1.0}) {
    CHECK(post.mean(t) == 0.0);
    CHECK(post.mean_deriv(t) == 0.0);
    CHECK(post.variance(t) > 0.0);
  }
}

TEST_CASE("diffuse posterior equals the gram fit") {
  Rng rng(32);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = rng.integer(2, 25);
    const auto s = test::random_samples(rng, n);
    const auto cfg = config_for(rng, s, rep % 2 == 1);
    const double lambda = rng.log_uniform(1e-5, 1.0);
    const double gamma = rng.log_uniform(1e-2, 100.0);
    const auto post = posterior_mean_diffuse(s, rng.log_uniform(0.1, 10.0), lambda, gamma, cfg);
    const auto fit = fit_vspline(s, cfg, lambda, gamma);
    CHECK(!post.has_variance());
    CHECK((post.d() - fit.d()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + fit.d().cwiseAbs().maxCoeff()));
    for (int k = 0; k < 50; ++k) {
      const double t = k / 49.0;
      const double f = evaluate(fit, t);
      worst = std::max(worst, std::abs(post.mean(t) - f) / std::max(1.0, std::abs(f)));
      worst = std::max(worst, std::abs(post.mean_deriv(t) - evaluate_deriv(fit, t)) /
                                  std::max(1.0, std::abs(evaluate_deriv(fit, t))));
    }
  }
  CHECK(worst <= 1e-10);
}

TEST_CASE("diffuse posterior on line data and unit weights") {
  Samples s;
  for (double t : {0.1, 0.3, 0.45, 0.8}) s.push_back({t, 1.0 - 2.0 * t, -2.0});
  const auto post = posterior_mean_diffuse(s, 1.0, 0.05, 2.0, KernelConfig::uniform());
  for (double t : {0.0, 0.5, 1.0}) {
    CHECK(post.mean(t) == doctest::Approx(1.0 - 2.0 * t).epsilon(1e-10));
    CHECK(post.mean_deriv(t) == doctest::Approx(-2.0).epsilon(1e-10));
  }
  CHECK_THROWS_AS(post.variance(0.5), std::logic_error);

  Rng rng(33);
  const auto r = test::random_samples(rng, 6);
  std::vector<double> knots;
  for (const auto& x : r) knots.push_back(x.t);
  const auto ones = KernelConfig::for_knots(knots, std::vector<double>(7, 1.0));
  const auto a = posterior_mean_diffuse(r, 1.0, 0.01, 1.0, ones);
  const auto b = posterior_mean_diffuse(r, 1.0, 0.01, 1.0, KernelConfig::uniform());
  for (double t : {0.05, 0.5, 0.95}) CHECK(a.mean(t) == doctest::Approx(b.mean(t)).epsilon(1e-12));
}

TEST_CASE("finite rho converges to the diffuse limit") {
  Rng rng(34);
  for (int rep = 0; rep < 10; ++rep) {
    const int n = rng.integer(3, 15);
    const auto s = test::random_samples(rng, n);
    const auto cfg = config_for(rng, s, rep % 2 == 1);
    const double lambda = rng.log_uniform(1e-3, 0.1);
    const double gamma = rng.log_uniform(0.1, 10.0);
    const auto lim = posterior_mean_diffuse(s, 1.0, lambda, gamma, cfg);

    std::vector<double> gaps;
    for (double rho : {1e2, 1e4, 1e6, 1e8}) {
      const auto post = posterior_mean_finite_rho(s, GpPrior{1.0, rho, cfg}, lambda, gamma);
      double gap = 0.0;
      for (int k = 0; k < 50; ++k) gap = std::max(gap, std::abs(post.mean(k / 49.0) - lim.mean(k / 49.0)));
      gaps.push_back(gap);
    }
    for (std::size_t i = 1; i < gaps.size(); ++i) CHECK(gaps[i] <= 1.1 * gaps[i - 1]);

    const auto far = posterior_mean_finite_rho(s, GpPrior{1.0, 1e10, cfg}, lambda, gamma);
    for (int k = 0; k < 50; ++k) {
      const double t = rng.uniform(0.0, 1.0);
      CHECK(std::abs(far.mean(t) - lim.mean(t)) <= 1e-5 * std::max(1.0, std::abs(lim.mean(t))));
    }
  }
}

TEST_CASE("limit identities at large rho") {
  Rng rng(35);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::MatrixXd m = random_spd(rng, 10);
    const Eigen::MatrixXd t = random_matrix(rng, 10, 2);
    const double bound = 1e-6 * m.inverse().norm();
    const auto diag = limit_identities_check(t, m, 1e8);
    CHECK(diag.inverse_gap <= bound);
    CHECK(diag.projector_gap <= bound);
  }
}

TEST_CASE("limit identities decay like 1/rho") {
  Rng rng(36);
  for (int rep = 0; rep < 50; ++rep) {
    const Eigen::MatrixXd m = random_spd(rng, 8);
    const Eigen::MatrixXd t = random_matrix(rng, 8, 2);
    const double rho = rng.log_uniform(1e3, 1e4);
    const auto a = limit_identities_check(t, m, rho);
    const auto b = limit_identities_check(t, m, 2.0 * rho);
    const double r1 = a.inverse_gap / b.inverse_gap;
    const double r2 = a.projector_gap / b.projector_gap;
    CHECK(r1 >= 2.0 / 1.5);
    CHECK(r1 <= 2.0 * 1.5);
    CHECK(r2 >= 2.0 / 1.5);
    CHECK(r2 <= 2.0 * 1.5);
  }
}

TEST_CASE("limit identities with the nonsymmetric V-spline M") {
  Rng rng(37);
  const auto s = test::random_samples(rng, 8);
  const auto g = build_gram(s, KernelConfig::uniform(), 0.01, 2.0);
  const auto near = limit_identities_check(g.T, g.M, 1e3);
  const auto far = limit_identities_check(g.T, g.M, 1e6);
  CHECK(far.inverse_gap < near.inverse_gap);
  CHECK(far.projector_gap < near.projector_gap);
}

TEST_CASE("limit identities reject rank-deficient T") {
  Rng rng(38);
  const Eigen::MatrixXd m = random_spd(rng, 6);
  CHECK_THROWS_AS(limit_identities_check(Eigen::MatrixXd::Zero(6, 2), m, 1e4), InvalidInputError);
  Eigen::MatrixXd t(6, 2);
  t.col(0).setOnes();
  t.col(1).setConstant(2.0);
  CHECK_THROWS_AS(limit_identities_check(t, m, 1e4), InvalidInputError);
  CHECK_THROWS_AS(limit_identities_check(random_matrix(rng, 6, 2), Eigen::MatrixXd::Zero(6, 6), 1e4),
                  SingularSystemError);
}

TEST_CASE("posterior input validation") {
  Samples s{{0.2, 1.0, 0.0}, {0.5, 0.0, 0.0}};
  CHECK_THROWS_AS(posterior_mean_finite_rho(s, GpPrior{1.0, kInf, KernelConfig::uniform()}, 0.1, 1.0),
                  InvalidInputError);
  CHECK_THROWS_AS(posterior_mean_finite_rho(s, GpPrior{1.0, 0.0, KernelConfig::uniform()}, 0.1, 1.0),
                  InvalidInputError);
  CHECK_THROWS_AS(posterior_mean_diffuse(s, 1.0, 0.1, 0.0, KernelConfig::uniform()), InvalidInputError);
  CHECK_THROWS_AS(posterior_mean_diffuse(Samples{{0.2, 1.0, 0.0}}, 1.0, 0.1, 1.0, KernelConfig::uniform()),
                  InvalidInputError);
}
