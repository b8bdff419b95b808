#include "vspline/basis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "detail/banded.hpp"
#include "detail/linalg.hpp"
#include "vspline/errors.hpp"

namespace vspline {

HermiteBasis::HermiteBasis(Eigen::VectorXd knots) : knots_(std::move(knots)) {
  const Eigen::Index n = knots_.size();
  if (n < 2) throw InvalidInputError("Hermite basis: need at least two knots");
  if (!(knots_[0] > 0.0) || !(knots_[n - 1] < 1.0)) throw InvalidInputError("Hermite basis: knots must lie in (0,1)");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(knots_[i] > knots_[i - 1])) throw InvalidInputError("Hermite basis: knots must be strictly increasing");
  }
}

template <int Order>
double HermiteBasis::eval(const Eigen::VectorXd& theta, double t) const {
  const Eigen::Index n = knots_.size();
  if (theta.size() != 2 * n) throw InvalidInputError("Hermite basis: coefficient vector has the wrong length");

  // Linear tails.
  if (t <= knots_[0] || t >= knots_[n - 1]) {
    const Eigen::Index k = t <= knots_[0] ? 0 : n - 1;
    if constexpr (Order == 0) return theta[k] + theta[n + k] * (t - knots_[k]);
    if constexpr (Order == 1) return theta[n + k];
    return 0.0;
  }

  const auto* begin = knots_.data();
  auto k = static_cast<Eigen::Index>(std::upper_bound(begin, begin + n, t) - begin) - 1;
  k = std::clamp<Eigen::Index>(k, 0, n - 2);
  const double h = knots_[k + 1] - knots_[k];
  const double x = (t - knots_[k]) / h;
  const double p0 = theta[k], p1 = theta[k + 1];
  const double m0 = theta[n + k], m1 = theta[n + k + 1];

  if constexpr (Order == 0) {
    const double x2 = x * x, x3 = x2 * x;
    return (2 * x3 - 3 * x2 + 1) * p0 + (x3 - 2 * x2 + x) * h * m0 + (-2 * x3 + 3 * x2) * p1 + (x3 - x2) * h * m1;
  } else if constexpr (Order == 1) {
    const double x2 = x * x;
    return ((6 * x2 - 6 * x) * p0 + (-6 * x2 + 6 * x) * p1) / h + (3 * x2 - 4 * x + 1) * m0 + (3 * x2 - 2 * x) * m1;
  } else {
    return ((12 * x - 6) * p0 + (-12 * x + 6) * p1) / (h * h) + ((6 * x - 4) * m0 + (6 * x - 2) * m1) / h;
  }
}

double HermiteBasis::evaluate(const Eigen::VectorXd& theta, double t) const { return eval<0>(theta, t); }
double HermiteBasis::evaluate_deriv(const Eigen::VectorXd& theta, double t) const { return eval<1>(theta, t); }
double HermiteBasis::evaluate_second(const Eigen::VectorXd& theta, double t) const { return eval<2>(theta, t); }

double HermiteBasis::basis_value(Eigen::Index i, double t) const {
  return eval<0>(Eigen::VectorXd::Unit(size(), i), t);
}
double HermiteBasis::basis_deriv(Eigen::Index i, double t) const {
  return eval<1>(Eigen::VectorXd::Unit(size(), i), t);
}
double HermiteBasis::basis_second(Eigen::Index i, double t) const {
  return eval<2>(Eigen::VectorXd::Unit(size(), i), t);
}

DesignMatrices build_design(const Eigen::VectorXd& knots, const Eigen::VectorXd& lambdas) {
  HermiteBasis basis(knots);
  const Eigen::Index n = basis.knot_count();
  if (lambdas.size() != n + 1) {
    std::ostringstream msg;
    msg << "build_design: expected " << n + 1 << " interval penalties, got " << lambdas.size();
    throw InvalidInputError(msg.str());
  }
  for (Eigen::Index i = 0; i <= n; ++i) {
    if (!(lambdas[i] >= 0.0) || !std::isfinite(lambdas[i])) {
      throw InvalidInputError("build_design: penalties must be finite and nonnegative");
    }
  }

  DesignMatrices out{basis, Eigen::MatrixXd::Zero(n, 2 * n), Eigen::MatrixXd::Zero(n, 2 * n),
                     Eigen::MatrixXd::Zero(2 * n, 2 * n), lambdas};
  out.B.leftCols(n).setIdentity();
  out.C.rightCols(n).setIdentity();

  // Cubic Hermite stiffness on [t_k, t_k+1], local order (value_k, slope_k, value_k+1, slope_k+1).
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    const double h = knots[k + 1] - knots[k];
    const double lam = lambdas[k + 1];
    Eigen::Matrix4d local;
    local << 12, 6 * h, -12, 6 * h,
             6 * h, 4 * h * h, -6 * h, 2 * h * h,
             -12, -6 * h, 12, -6 * h,
             6 * h, 2 * h * h, -6 * h, 4 * h * h;
    local *= lam / (h * h * h);
    const Eigen::Index idx[4] = {k, n + k, k + 1, n + k + 1};
    for (int a = 0; a < 4; ++a) {
      for (int b = 0; b < 4; ++b) out.omega(idx[a], idx[b]) += local(a, b);
    }
  }
  return out;
}

DesignMatrices build_design(const Eigen::VectorXd& knots, double lambda) {
  return build_design(knots, Eigen::VectorXd::Constant(knots.size() + 1, lambda));
}

Eigen::VectorXd interval_penalties(const KernelConfig& cfg, const Eigen::VectorXd& knots, double lambda) {
  const Eigen::Index n = knots.size();
  if (cfg.is_uniform()) return Eigen::VectorXd::Constant(n + 1, lambda);
  const auto bp = cfg.breakpoints();
  if (static_cast<Eigen::Index>(bp.size()) != n + 2) {
    throw InvalidInputError("interval_penalties: weighted kernel breakpoints must be [0, knots..., 1]");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(bp[static_cast<std::size_t>(i + 1)] - knots[i]) > 1e-12) {
      throw InvalidInputError("interval_penalties: weighted kernel breakpoints do not match the knots");
    }
  }
  Eigen::VectorXd out(n + 1);
  for (Eigen::Index i = 0; i <= n; ++i) out[i] = lambda * cfg.weights()[static_cast<std::size_t>(i)];
  return out;
}

namespace {

// Interleaved position of coefficient i: value_k -> 2k, slope_k -> 2k + 1.
Eigen::Index interleaved(Eigen::Index i, Eigen::Index n) { return i < n ? 2 * i : 2 * (i - n) + 1; }

void check_data(const DesignMatrices& design, const Eigen::VectorXd& y, const Eigen::VectorXd& v, double gamma) {
  if (y.size() != design.n() || v.size() != design.n()) throw InvalidInputError("basis fit: data length mismatch");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidInputError("basis fit: gamma must be nonnegative");
}

// Coefficients of the straight lines a + b t: values a + b t_i, slopes b.
Eigen::MatrixXd line_coefficients(const Eigen::VectorXd& knots) {
  const Eigen::Index n = knots.size();
  Eigen::MatrixXd lines(2 * n, 2);
  lines.topRows(n) << Eigen::VectorXd::Ones(n), knots;
  lines.bottomRows(n) << Eigen::VectorXd::Zero(n), Eigen::VectorXd::Ones(n);
  return lines;
}

// Solves (G + n Omega) X = R where G is the data-fit part of the system.
// Lines lie in the null space of Omega and are fitted exactly, so the line
// component of R is split off and solved through the 2 x 2 system N'GN;
// only the remainder goes through the (possibly stiff) factorization.
template <class Solver>
Eigen::MatrixXd solve_split(const DesignMatrices& design, const Eigen::MatrixXd& g, const Solver& solver,
                            const Eigen::MatrixXd& rhs) {
  const Eigen::MatrixXd lines = line_coefficients(design.basis.knots());
  const Eigen::MatrixXd g_lines = g * lines;
  const auto small = detail::checked_lu(lines.transpose() * g_lines, "basis fit: line system");
  const Eigen::MatrixXd alpha = small.solve(lines.transpose() * rhs);
  return lines * alpha + solver(rhs - g_lines * alpha);
}

// A = B'B + gamma C'C + n Omega in interleaved order; bandwidth 3.
detail::BandedCholesky factor_uncorrelated(const DesignMatrices& design, double gamma) {
  const Eigen::Index n = design.n();
  Eigen::MatrixXd a(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < 2 * n; ++i) {
    for (Eigen::Index j = 0; j < 2 * n; ++j) {
      a(interleaved(i, n), interleaved(j, n)) = static_cast<double>(n) * design.omega(i, j);
    }
  }
  for (Eigen::Index k = 0; k < n; ++k) {
    a(2 * k, 2 * k) += 1.0;
    a(2 * k + 1, 2 * k + 1) += gamma;
  }
  return detail::BandedCholesky(a, 3, "basis fit");
}

Eigen::MatrixXd solve_uncorrelated(const DesignMatrices& design, double gamma, const Eigen::MatrixXd& rhs) {
  const Eigen::Index n = design.n();
  const auto chol = factor_uncorrelated(design, gamma);
  Eigen::VectorXd g(2 * n);
  g << Eigen::VectorXd::Ones(n), Eigen::VectorXd::Constant(n, gamma);
  auto solver = [&](const Eigen::MatrixXd& r) {
    Eigen::MatrixXd permuted(2 * n, r.cols());
    for (Eigen::Index i = 0; i < 2 * n; ++i) permuted.row(interleaved(i, n)) = r.row(i);
    const Eigen::MatrixXd sol = chol.solve(std::move(permuted));
    Eigen::MatrixXd out(2 * n, r.cols());
    for (Eigen::Index i = 0; i < 2 * n; ++i) out.row(i) = sol.row(interleaved(i, n));
    return out;
  };
  return solve_split(design, Eigen::MatrixXd(g.asDiagonal()), solver, rhs);
}

Eigen::MatrixXd solve_correlated(const DesignMatrices& design, double gamma, const CorrelationSpec& corr,
                                 const Eigen::MatrixXd& rhs, const std::string& what) {
  const Eigen::Index n = design.n();
  corr.validate(n);
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  g.topLeftCorner(n, n) = corr.W;
  g.bottomRightCorner(n, n) = gamma * corr.Ucorr;
  const auto lu = detail::checked_lu(g + static_cast<double>(n) * design.omega, what);
  return solve_split(design, g, [&](const Eigen::MatrixXd& r) { return Eigen::MatrixXd(lu.solve(r)); }, rhs);
}

}  // namespace

Eigen::VectorXd fit_theta(const DesignMatrices& design, const Eigen::VectorXd& y, const Eigen::VectorXd& v,
                          double gamma) {
  check_data(design, y, v, gamma);
  const Eigen::Index n = design.n();
  Eigen::VectorXd rhs(2 * n);
  rhs << y, gamma * v;
  return solve_uncorrelated(design, gamma, rhs);
}

Eigen::VectorXd fit_theta(const DesignMatrices& design, const Eigen::VectorXd& y, const Eigen::VectorXd& v,
                          double gamma, const CorrelationSpec& corr) {
  check_data(design, y, v, gamma);
  const Eigen::Index n = design.n();
  Eigen::VectorXd rhs(2 * n);
  rhs << corr.W * y, gamma * (corr.Ucorr * v);
  return solve_correlated(design, gamma, corr, rhs, "correlated basis fit");
}

HatMatrices hat_matrices(const DesignMatrices& design, double gamma) {
  check_data(design, Eigen::VectorXd::Zero(design.n()), Eigen::VectorXd::Zero(design.n()), gamma);
  const Eigen::Index n = design.n();
  Eigen::MatrixXd inv = solve_uncorrelated(design, gamma, Eigen::MatrixXd::Identity(2 * n, 2 * n));
  inv = 0.5 * (inv + inv.transpose()).eval();
  return {inv.topLeftCorner(n, n), inv.topRightCorner(n, n), inv.bottomLeftCorner(n, n),
          inv.bottomRightCorner(n, n)};
}

HatMatrices hat_matrices(const DesignMatrices& design, double gamma, const CorrelationSpec& corr) {
  check_data(design, Eigen::VectorXd::Zero(design.n()), Eigen::VectorXd::Zero(design.n()), gamma);
  const Eigen::Index n = design.n();
  Eigen::MatrixXd inv =
      solve_correlated(design, gamma, corr, Eigen::MatrixXd::Identity(2 * n, 2 * n), "correlated hat matrices");
  inv = 0.5 * (inv + inv.transpose()).eval();
  return {inv.topLeftCorner(n, n) * corr.W, inv.topRightCorner(n, n) * corr.Ucorr,
          inv.bottomLeftCorner(n, n) * corr.W, inv.bottomRightCorner(n, n) * corr.Ucorr};
}

}  // namespace vspline
