#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "oracles.hpp"
#include "vspline/basis.hpp"
#include "vspline/errors.hpp"
#include "vspline/gram_fit.hpp"

using namespace vspline;
using vspline::test::Rng;

namespace {

Eigen::VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

double quad(const std::function<double(double)>& fn, double a, double b) {
  return boost::math::quadrature::gauss_kronrod<double, 31>::integrate(fn, a, b, 0, 0.0);
}

Eigen::MatrixXd ar1(Eigen::Index n, double phi) {
  Eigen::MatrixXd w(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) w(i, j) = std::pow(phi, std::abs(static_cast<double>(i - j)));
  return w;
}

}  // namespace

TEST_CASE("Hermite basis cardinality") {
  Rng rng(41);
  const HermiteBasis basis(to_vector(test::random_knots(rng, 7)));
  const Eigen::Index n = basis.knot_count();
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      const double tj = basis.knots()[j];
      CHECK(basis.basis_value(i, tj) == doctest::Approx(i == j ? 1.0 : 0.0));
      CHECK(basis.basis_deriv(i, tj) == doctest::Approx(i == n + j ? 1.0 : 0.0));
    }
  }
}

TEST_CASE("Hermite basis is C1 and linear outside the knots") {
  Rng rng(42);
  const HermiteBasis basis(to_vector(test::random_knots(rng, 6)));
  Eigen::VectorXd theta(12);
  for (auto& x : theta) x = rng.normal();
  const auto& k = basis.knots();
  for (Eigen::Index j = 0; j < k.size(); ++j) {
    const double e = 1e-12;
    CHECK(basis.evaluate(theta, k[j] - e) == doctest::Approx(basis.evaluate(theta, k[j] + e)).epsilon(1e-7));
    CHECK(basis.evaluate_deriv(theta, k[j] - e) ==
          doctest::Approx(basis.evaluate_deriv(theta, k[j] + e)).epsilon(1e-6));
  }
  CHECK(basis.evaluate_second(theta, 0.5 * k[0]) == 0.0);
  CHECK(basis.evaluate_second(theta, 0.5 * (k[5] + 1.0)) == 0.0);
  const double slope = basis.evaluate_deriv(theta, 0.0);
  CHECK(basis.evaluate(theta, 0.0) == doctest::Approx(theta[0] - slope * k[0]));
}

TEST_CASE("stiffness entries match quadrature of second derivatives") {
  const Eigen::Vector2d knots(0.3, 0.55);
  const double h = 0.25;
  const auto design = build_design(knots, 1.0);
  CHECK(design.omega(0, 0) == doctest::Approx(12.0 / (h * h * h)).epsilon(1e-12));
  Rng rng(43);
  const auto k = to_vector(test::random_knots(rng, 6));
  Eigen::VectorXd lambdas(7);
  for (auto& x : lambdas) x = rng.log_uniform(0.1, 10.0);
  const auto d = build_design(k, lambdas);
  for (Eigen::Index i = 0; i < 12; ++i) {
    for (Eigen::Index j = 0; j < 12; ++j) {
      double ref = 0.0;
      for (Eigen::Index s = 0; s + 1 < 6; ++s) {
        ref += lambdas[s + 1] * quad([&](double t) { return d.basis.basis_second(i, t) * d.basis.basis_second(j, t); },
                                     k[s], k[s + 1]);
      }
      CHECK(d.omega(i, j) == doctest::Approx(ref).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("penalty Gram structure") {
  Rng rng(44);
  const auto k = to_vector(test::random_knots(rng, 9));
  const auto d = build_design(k, 0.7);
  CHECK((d.omega - d.omega.transpose()).cwiseAbs().maxCoeff() == 0.0);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(d.omega);
  CHECK(eig.eigenvalues().minCoeff() >= -1e-10 * eig.eigenvalues().maxCoeff());
  CHECK(build_design(k, 0.0).omega.isZero());
  CHECK((build_design(k, 1.4).omega - 2.0 * d.omega).cwiseAbs().maxCoeff() <= 1e-12 * d.omega.cwiseAbs().maxCoeff());
  CHECK(d.B.leftCols(9).isIdentity());
  CHECK(d.B.rightCols(9).isZero());
  CHECK(d.C.leftCols(9).isZero());
  CHECK(d.C.rightCols(9).isIdentity());
  // values-slope pairs more than one knot apart never interact
  CHECK(d.omega(0, 2) == 0.0);
  CHECK(d.omega(0, 9 + 2) == 0.0);
}

TEST_CASE("design input validation") {
  CHECK_THROWS_AS(build_design(Eigen::Vector2d(0.0, 0.5), 1.0), InvalidInputError);
  CHECK_THROWS_AS(build_design(Eigen::Vector2d(0.5, 0.5), 1.0), InvalidInputError);
  CHECK_THROWS_AS(build_design(Eigen::VectorXd::Constant(1, 0.5), 1.0), InvalidInputError);
  CHECK_THROWS_AS(build_design(Eigen::Vector2d(0.2, 0.5), -1.0), InvalidInputError);
  CHECK_THROWS_AS(build_design(Eigen::Vector2d(0.2, 0.5), Eigen::Vector2d(1.0, 1.0)), InvalidInputError);
}

TEST_CASE("exact line reproduction") {
  Rng rng(45);
  const auto k = to_vector(test::random_knots(rng, 8));
  const Eigen::VectorXd y = (-1.0 + 4.0 * k.array()).matrix();
  const Eigen::VectorXd v = Eigen::VectorXd::Constant(8, 4.0);
  for (double lambda : {1e-6, 1.0, 1e3}) {
    for (double gamma : {0.0, 0.1, 10.0}) {
      const auto d = build_design(k, lambda);
      const auto theta = fit_theta(d, y, v, gamma);
      CHECK((d.B * theta - y).cwiseAbs().maxCoeff() <= 1e-10);
      CHECK((d.C * theta - v).cwiseAbs().maxCoeff() <= 1e-10);
      const auto corr = fit_theta(d, y, v, gamma, CorrelationSpec{ar1(8, 0.5), ar1(8, 0.3)});
      CHECK((d.B * corr - y).cwiseAbs().maxCoeff() <= 1e-10);
    }
  }
}

TEST_CASE("fitted theta minimizes the penalized loss") {
  Rng rng(46);
  const int n = 9;
  const auto k = to_vector(test::random_knots(rng, n));
  Eigen::VectorXd y(n), v(n);
  for (auto& x : y) x = rng.normal();
  for (auto& x : v) x = rng.normal();
  const auto d = build_design(k, 0.01);
  const CorrelationSpec corr{ar1(n, 0.5), ar1(n, -0.2)};
  const double gamma = 0.8;
  auto loss = [&](const Eigen::VectorXd& th, const Eigen::MatrixXd& w, const Eigen::MatrixXd& u) {
    const Eigen::VectorXd r = y - d.B * th, s = v - d.C * th;
    return r.dot(w * r) / n + gamma * s.dot(u * s) / n + th.dot(d.omega * th);
  };
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(n, n);
  const auto plain = fit_theta(d, y, v, gamma);
  const auto weighted = fit_theta(d, y, v, gamma, corr);
  for (int rep = 0; rep < 30; ++rep) {
    const Eigen::VectorXd delta = 1e-3 * Eigen::VectorXd::Random(2 * n);
    CHECK(loss(plain + delta, eye, eye) >= loss(plain, eye, eye));
    CHECK(loss(weighted + delta, corr.W, corr.Ucorr) >= loss(weighted, corr.W, corr.Ucorr));
  }
  const auto same = fit_theta(d, y, v, gamma, CorrelationSpec::identity(n));
  CHECK((same - plain).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("hat matrices reproduce fits") {
  Rng rng(47);
  for (int rep = 0; rep < 100; ++rep) {
    const int n = rng.integer(2, 20);
    const auto k = to_vector(test::random_knots(rng, n));
    const double gamma = rep % 10 == 0 ? 0.0 : rng.log_uniform(1e-2, 1e2);
    const auto d = build_design(k, rng.log_uniform(1e-5, 1.0));
    Eigen::VectorXd y(n), v(n);
    for (auto& x : y) x = rng.normal();
    for (auto& x : v) x = rng.normal();
    const auto h = hat_matrices(d, gamma);
    const auto theta = fit_theta(d, y, v, gamma);
    CHECK((h.S * y + gamma * h.T * v - d.B * theta).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((h.U * y + gamma * h.V * v - d.C * theta).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + (d.C * theta).norm()));
    CHECK((h.S - h.S.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
    CHECK((h.V - h.V.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + h.V.cwiseAbs().maxCoeff()));
    CHECK((h.T - h.U.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + h.U.cwiseAbs().maxCoeff()));
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(n);
    CHECK((h.S * ones - ones).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((h.U * ones).cwiseAbs().maxCoeff() <= 1e-8);
    CHECK(h.S.trace() > 0.0);
    CHECK(h.S.trace() <= n + 1e-10);
  }
}

TEST_CASE("correlated hat matrices reproduce correlated fits") {
  Rng rng(48);
  const int n = 10;
  const auto d = build_design(to_vector(test::random_knots(rng, n)), 0.003);
  const CorrelationSpec corr{ar1(n, 0.5), ar1(n, 0.2)};
  Eigen::VectorXd y(n), v(n);
  for (auto& x : y) x = rng.normal();
  for (auto& x : v) x = rng.normal();
  const double gamma = 2.0;
  const auto h = hat_matrices(d, gamma, corr);
  const auto theta = fit_theta(d, y, v, gamma, corr);
  CHECK((h.S * y + gamma * h.T * v - d.B * theta).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((h.U * y + gamma * h.V * v - d.C * theta).cwiseAbs().maxCoeff() <= 1e-9);
  const auto plain = hat_matrices(d, gamma);
  const auto ident = hat_matrices(d, gamma, CorrelationSpec::identity(n));
  CHECK((plain.S - ident.S).cwiseAbs().maxCoeff() <= 1e-10);
  CHECK((plain.V - ident.V).cwiseAbs().maxCoeff() <= 1e-8);
  CHECK_THROWS_AS(hat_matrices(d, gamma, CorrelationSpec{-ar1(n, 0.5), ar1(n, 0.2)}), InvalidInputError);
}

TEST_CASE("trace of S approaches two under heavy smoothing without velocities") {
  Rng rng(49);
  const auto d = build_design(to_vector(test::random_knots(rng, 12)), 1e2);
  CHECK(hat_matrices(d, 1e-6).S.trace() == doctest::Approx(2.0).epsilon(1e-3));
}

TEST_CASE("gamma = 0 reproduces the classical cubic smoothing spline") {
  Rng rng(50);
  for (int rep = 0; rep < 30; ++rep) {
    const int n = rng.integer(3, 25);
    const auto k = to_vector(test::random_knots(rng, n));
    Eigen::VectorXd y(n);
    for (Eigen::Index i = 0; i < n; ++i) y[i] = std::sin(6.0 * k[i]) + 0.1 * rng.normal();
    const double lambda = rng.log_uniform(1e-6, 1e-1);
    const auto ref = test::reinsch_smoothing_spline(k, y, n * lambda);
    const auto d = build_design(k, lambda);
    const auto theta = fit_theta(d, y, Eigen::VectorXd::Zero(n), 0.0);
    CHECK((d.B * theta - ref.g).cwiseAbs().maxCoeff() <= 1e-6);
    CHECK((hat_matrices(d, 0.0).S - ref.hat).cwiseAbs().maxCoeff() <= 1e-6);
    for (int j = 0; j < 20; ++j) {
      const double t = rng.uniform(0.0, 1.0);
      CHECK(std::abs(d.basis.evaluate(theta, t) - ref.value(t)) <= 1e-6);
    }
  }
}

TEST_CASE("basis fit and representer fit agree at the knots") {
  Rng rng(51);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    const int n = rng.integer(2, 30);
    const auto s = test::random_samples(rng, n);
    const Eigen::VectorXd k = times_of(s);
    const bool weighted = rep % 2 == 1;
    const auto cfg = weighted
                         ? KernelConfig::for_knots(std::vector<double>(k.data(), k.data() + n),
                                                   test::random_weights(rng, static_cast<std::size_t>(n) + 1))
                         : KernelConfig::uniform();
    const double lambda = rng.log_uniform(1e-5, 1.0);
    const double gamma = rng.log_uniform(1e-2, 1e2);
    const auto d = build_design(k, interval_penalties(cfg, k, lambda));
    const auto theta = fit_theta(d, positions_of(s), velocities_of(s), gamma);
    const auto g = build_gram(s, cfg, lambda, gamma);
    const auto kv = knot_values(g, solve_coefficients(g, positions_of(s), velocities_of(s)));
    worst = std::max(worst, (d.B * theta - kv.f).cwiseAbs().maxCoeff());
    worst = std::max(worst, (d.C * theta - kv.df).cwiseAbs().maxCoeff() / (1.0 + kv.df.cwiseAbs().maxCoeff()));
  }
  CHECK(worst <= 1e-6);
}

TEST_CASE("interval penalties follow the kernel weights") {
  const Eigen::Vector2d k(0.25, 0.5);
  CHECK(interval_penalties(KernelConfig::uniform(), k, 0.3).isApprox(Eigen::Vector3d::Constant(0.3)));
  const auto cfg = KernelConfig::for_knots(std::vector<double>{0.25, 0.5}, std::vector<double>{1.0, 2.0, 4.0});
  CHECK(interval_penalties(cfg, k, 0.5).isApprox(Eigen::Vector3d(0.5, 1.0, 2.0)));
  CHECK_THROWS_AS(interval_penalties(cfg, Eigen::Vector2d(0.25, 0.6), 0.5), InvalidInputError);
}
