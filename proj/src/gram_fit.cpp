#include "vspline/gram_fit.hpp"

#include <sstream>

#include "detail/linalg.hpp"
#include "vspline/errors.hpp"

namespace vspline {

GramSystem build_gram(const Eigen::VectorXd& knots, const KernelConfig& cfg, double lambda, double gamma) {
  const Eigen::Index n = knots.size();
  if (n < 1) throw InvalidInputError("build_gram: no knots");
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInputError("build_gram: lambda must be positive");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidInputError("build_gram: gamma must be nonnegative");
  for (Eigen::Index i = 1; i < n; ++i) {
    if (!(knots[i] > knots[i - 1])) throw InvalidInputError("build_gram: knots must be strictly increasing");
  }

  GramSystem g;
  g.knots = knots;
  g.kernel = cfg;
  g.lambda = lambda;
  g.gamma = gamma;

  g.S.resize(n, 2);
  g.S_prime.resize(n, 2);
  g.Q.resize(n, n);
  g.Q_prime.resize(n, n);
  g.P.resize(n, n);
  g.P_prime.resize(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ti = knots[i];
    g.S.row(i) << 1.0, ti;
    g.S_prime.row(i) << 0.0, 1.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double tj = knots[j];
      g.Q(i, j) = eval_r1(tj, ti, cfg);
      g.Q_prime(i, j) = eval_r1_dt(tj, ti, cfg);
      g.P(i, j) = eval_r1_ds(tj, ti, cfg);
      g.P_prime(i, j) = eval_r1_dsdt(tj, ti, cfg);
    }
  }

  const double ridge = static_cast<double>(n) * lambda;
  if (g.position_only()) {
    g.T = g.S;
    g.M = g.Q;
    g.M.diagonal().array() += ridge;
    return g;
  }

  g.T.resize(2 * n, 2);
  g.T << g.S, g.S_prime;
  g.M.resize(2 * n, 2 * n);
  g.M << g.Q, g.P, g.Q_prime, g.P_prime;
  g.M.diagonal().head(n).array() += ridge;
  g.M.diagonal().tail(n).array() += ridge / gamma;
  return g;
}

GramSystem build_gram(std::span<const TimeSeriesSample> samples, const KernelConfig& cfg, double lambda,
                      double gamma) {
  validate_samples(samples, 1);
  return build_gram(times_of(samples), cfg, lambda, gamma);
}

VSplineFit::VSplineFit(Eigen::Vector2d d, Eigen::VectorXd c, Eigen::VectorXd b, Eigen::VectorXd knots,
                       KernelConfig kernel, double lambda, double gamma)
    : d_(std::move(d)),
      c_(std::move(c)),
      b_(std::move(b)),
      knots_(std::move(knots)),
      kernel_(std::move(kernel)),
      lambda_(lambda),
      gamma_(gamma) {}

namespace {

Eigen::VectorXd stacked_data(const GramSystem& gram, const Eigen::VectorXd& y, const Eigen::VectorXd& v) {
  const Eigen::Index n = gram.n();
  if (y.size() != n || v.size() != n) {
    std::ostringstream msg;
    msg << "data length mismatch: " << n << " knots, " << y.size() << " positions, " << v.size() << " velocities";
    throw InvalidInputError(msg.str());
  }
  if (gram.position_only()) return y;
  Eigen::VectorXd z(2 * n);
  z << y, v;
  return z;
}

// Representer Gram matrix K = [[Q, P], [Q', P']] (Q alone when gamma == 0).
Eigen::MatrixXd representer_gram(const GramSystem& gram) {
  if (gram.position_only()) return gram.Q;
  const Eigen::Index n = gram.n();
  Eigen::MatrixXd k(2 * n, 2 * n);
  k << gram.Q, gram.P, gram.Q_prime, gram.P_prime;
  return k;
}

Eigen::VectorXd residual_weights(const GramSystem& gram) {
  const Eigen::Index n = gram.n();
  if (gram.position_only()) return Eigen::VectorXd::Ones(n);
  Eigen::VectorXd w(2 * n);
  w << Eigen::VectorXd::Ones(n), Eigen::VectorXd::Constant(n, gram.gamma);
  return w;
}

}  // namespace

VSplineFit solve_coefficients(const GramSystem& gram, const Eigen::VectorXd& y, const Eigen::VectorXd& v) {
  const Eigen::Index n = gram.n();
  if (n < 2) throw SingularSystemError("solve_coefficients: need at least two distinct knots");
  const Eigen::VectorXd z = stacked_data(gram, y, v);

  const auto lu = detail::checked_lu(gram.M, "solve_coefficients: M");
  const Eigen::MatrixXd minv_t = lu.solve(gram.T);
  const Eigen::VectorXd minv_z = lu.solve(z);
  const Eigen::Matrix2d tmt = gram.T.transpose() * minv_t;
  const auto small = detail::checked_lu(tmt, "solve_coefficients: T'M^-1 T");

  const Eigen::Vector2d d = small.solve(gram.T.transpose() * minv_z);
  const Eigen::VectorXd a = minv_z - minv_t * d;

  Eigen::VectorXd c = a.head(n);
  Eigen::VectorXd b = gram.position_only() ? Eigen::VectorXd::Zero(n) : Eigen::VectorXd(a.tail(n));
  return VSplineFit(d, std::move(c), std::move(b), gram.knots, gram.kernel, gram.lambda, gram.gamma);
}

VSplineFit fit_vspline(std::span<const TimeSeriesSample> samples, const KernelConfig& cfg, double lambda,
                       double gamma) {
  validate_samples(samples, 2);
  const GramSystem gram = build_gram(samples, cfg, lambda, gamma);
  return solve_coefficients(gram, positions_of(samples), velocities_of(samples));
}

double evaluate(const VSplineFit& fit, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("evaluate: t outside [0,1]");
  double f = fit.d()[0] + fit.d()[1] * t;
  const auto& knots = fit.knots();
  for (Eigen::Index j = 0; j < knots.size(); ++j) {
    f += fit.c()[j] * eval_r1(knots[j], t, fit.kernel());
    if (fit.b()[j] != 0.0) f += fit.b()[j] * eval_r1_ds(knots[j], t, fit.kernel());
  }
  return f;
}

double evaluate_deriv(const VSplineFit& fit, double t) {
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("evaluate_deriv: t outside [0,1]");
  double df = fit.d()[1];
  const auto& knots = fit.knots();
  for (Eigen::Index j = 0; j < knots.size(); ++j) {
    df += fit.c()[j] * eval_r1_dt(knots[j], t, fit.kernel());
    if (fit.b()[j] != 0.0) df += fit.b()[j] * eval_r1_dsdt(knots[j], t, fit.kernel());
  }
  return df;
}

KnotValues knot_values(const GramSystem& gram, const VSplineFit& fit) {
  return {gram.S * fit.d() + gram.Q * fit.c() + gram.P * fit.b(),
          gram.S_prime * fit.d() + gram.Q_prime * fit.c() + gram.P_prime * fit.b()};
}

double penalty_form(const GramSystem& gram, const Eigen::VectorXd& c, const Eigen::VectorXd& b) {
  return c.dot(gram.Q * c) + 2.0 * c.dot(gram.P * b) + b.dot(gram.P_prime * b);
}

double objective(const GramSystem& gram, const Eigen::Vector2d& d, const Eigen::VectorXd& c,
                 const Eigen::VectorXd& b, const Eigen::VectorXd& y, const Eigen::VectorXd& v) {
  const double n = static_cast<double>(gram.n());
  const Eigen::VectorXd rf = y - gram.S * d - gram.Q * c - gram.P * b;
  const Eigen::VectorXd rd = v - gram.S_prime * d - gram.Q_prime * c - gram.P_prime * b;
  return rf.squaredNorm() / n + gram.gamma * rd.squaredNorm() / n + gram.lambda * penalty_form(gram, c, b);
}

double stationarity_residual(const GramSystem& gram, const VSplineFit& fit, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& v) {
  const Eigen::Index n = gram.n();
  const Eigen::VectorXd z = stacked_data(gram, y, v);
  const Eigen::MatrixXd k = representer_gram(gram);
  const Eigen::VectorXd w = residual_weights(gram);

  Eigen::VectorXd a(k.rows());
  if (gram.position_only()) {
    a = fit.c();
  } else {
    a << fit.c(), fit.b();
  }
  // n*J = (Td + Ka - z)' G (Td + Ka - z) + n lambda a'Ka with G = diag(w).
  const Eigen::VectorXd r = gram.T * fit.d() + k * a - z;
  const Eigen::VectorXd gr = w.cwiseProduct(r);
  const Eigen::VectorXd gz = w.cwiseProduct(z);

  Eigen::VectorXd grad(2 + k.rows());
  grad << gram.T.transpose() * gr, k * gr + static_cast<double>(n) * gram.lambda * (k * a);
  Eigen::VectorXd rhs(2 + k.rows());
  rhs << gram.T.transpose() * gz, k * gz;
  const double scale = rhs.norm();
  return scale > 0.0 ? grad.norm() / scale : grad.norm();
}

}  // namespace vspline
