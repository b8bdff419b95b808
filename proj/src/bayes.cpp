#include "vspline/bayes.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/QR>

#include "detail/linalg.hpp"
#include "vspline/errors.hpp"

namespace vspline {

namespace {

void check_prior(const GpPrior& prior) {
  if (!(prior.beta > 0.0) || !std::isfinite(prior.beta)) throw InvalidInputError("GP prior: beta must be positive");
  if (!(prior.rho >= 0.0)) throw InvalidInputError("GP prior: rho must be nonnegative or infinite");
}

double r0_part(double s, double t, CovPair which) {
  switch (which) {
    case CovPair::ff: return eval_r0(s, t);
    case CovPair::fdf: return s;
    case CovPair::dff: return t;
    case CovPair::dfdf: return 1.0;
  }
  return 0.0;
}

double r1_part(double s, double t, CovPair which, const KernelConfig& cfg) {
  switch (which) {
    case CovPair::ff: return eval_r1(s, t, cfg);
    case CovPair::fdf: return eval_r1_dt(s, t, cfg);
    case CovPair::dff: return eval_r1_ds(s, t, cfg);
    case CovPair::dfdf: return eval_r1_dsdt(s, t, cfg);
  }
  return 0.0;
}

// Design of the null space span{1, t} for z = [y; v]: rows [1, t_i] then [0, 1].
Eigen::MatrixXd null_space_design(const Eigen::VectorXd& knots) {
  const Eigen::Index n = knots.size();
  Eigen::MatrixXd t(2 * n, 2);
  for (Eigen::Index i = 0; i < n; ++i) {
    t.row(i) << 1.0, knots[i];
    t.row(n + i) << 0.0, 1.0;
  }
  return t;
}

Eigen::VectorXd stacked(std::span<const TimeSeriesSample> samples) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  Eigen::VectorXd z(2 * n);
  z << positions_of(samples), velocities_of(samples);
  return z;
}

void check_fit_inputs(std::span<const TimeSeriesSample> samples, double lambda, double gamma) {
  validate_samples(samples, 2);
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInputError("posterior: lambda must be positive");
  if (!(gamma > 0.0) || !std::isfinite(gamma)) throw InvalidInputError("posterior: gamma must be positive");
}

}  // namespace

double prior_cov(double s, double t, CovPair which, const GpPrior& prior) {
  check_prior(prior);
  double cov = prior.beta * r1_part(s, t, which, prior.kernel);
  if (!prior.diffuse()) cov += prior.tau2() * r0_part(s, t, which);
  return cov;
}

Eigen::MatrixXd observation_covariance(std::span<const TimeSeriesSample> samples, const GpPrior& prior,
                                       double lambda, double gamma) {
  check_prior(prior);
  check_fit_inputs(samples, lambda, gamma);
  const auto n = static_cast<Eigen::Index>(samples.size());
  const double ridge = static_cast<double>(n) * lambda;
  Eigen::MatrixXd cov(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double ti = samples[static_cast<std::size_t>(i)].t;
    for (Eigen::Index j = 0; j < n; ++j) {
      const double tj = samples[static_cast<std::size_t>(j)].t;
      cov(i, j) = prior_cov(ti, tj, CovPair::ff, prior) / prior.beta;
      cov(i, n + j) = prior_cov(ti, tj, CovPair::fdf, prior) / prior.beta;
      cov(n + i, j) = prior_cov(ti, tj, CovPair::dff, prior) / prior.beta;
      cov(n + i, n + j) = prior_cov(ti, tj, CovPair::dfdf, prior) / prior.beta;
    }
  }
  cov.diagonal().head(n).array() += ridge;
  cov.diagonal().tail(n).array() += ridge / gamma;
  return cov;
}

Eigen::VectorXd PosteriorSummary::cross_cov(double t, bool deriv) const {
  const GpPrior unit{1.0, std::numeric_limits<double>::infinity(), prior_.kernel};
  const Eigen::Index n = knots_.size();
  Eigen::VectorXd k(2 * n);
  for (Eigen::Index j = 0; j < n; ++j) {
    k[j] = prior_cov(knots_[j], t, deriv ? CovPair::fdf : CovPair::ff, unit);
    k[n + j] = prior_cov(knots_[j], t, deriv ? CovPair::dfdf : CovPair::dff, unit);
  }
  return k;
}

double PosteriorSummary::mean(double t) const {
  const Eigen::Index n = knots_.size();
  const Eigen::VectorXd k = cross_cov(t, false);
  return d_[0] + d_[1] * t + c_.dot(k.head(n)) + b_.dot(k.tail(n));
}

double PosteriorSummary::mean_deriv(double t) const {
  const Eigen::Index n = knots_.size();
  const Eigen::VectorXd k = cross_cov(t, true);
  return d_[1] + c_.dot(k.head(n)) + b_.dot(k.tail(n));
}

double PosteriorSummary::variance(double t) const {
  if (!factor_) throw std::logic_error("posterior variance is only available for finite rho");
  const Eigen::VectorXd xi = cross_cov(t, false);
  const Eigen::VectorXd minv_xi = factor_->m.solve(xi);
  const Eigen::Vector2d h = Eigen::Vector2d(1.0, t) - factor_->t.transpose() * minv_xi;
  const GpPrior unit{1.0, std::numeric_limits<double>::infinity(), prior_.kernel};
  return prior_.beta * (prior_cov(t, t, CovPair::ff, unit) - xi.dot(minv_xi) + h.dot(factor_->small.solve(h)));
}

PosteriorSummary posterior_mean_finite_rho(std::span<const TimeSeriesSample> samples, const GpPrior& prior,
                                           double lambda, double gamma) {
  check_prior(prior);
  if (prior.diffuse() || !(prior.rho > 0.0)) {
    throw InvalidInputError("posterior_mean_finite_rho: rho must be finite and positive");
  }
  const GpPrior limit{prior.beta, std::numeric_limits<double>::infinity(), prior.kernel};
  const Eigen::MatrixXd m = observation_covariance(samples, limit, lambda, gamma);

  PosteriorSummary out;
  out.prior_ = prior;
  out.knots_ = times_of(samples);
  const Eigen::Index n = out.knots_.size();
  const Eigen::MatrixXd t = null_space_design(out.knots_);
  auto m_lu = detail::checked_lu(m, "posterior_mean_finite_rho: M");
  const Eigen::MatrixXd minv_t = m_lu.solve(t);
  const Eigen::VectorXd minv_z = m_lu.solve(stacked(samples));
  const Eigen::Matrix2d g = t.transpose() * minv_t + Eigen::Matrix2d::Identity() / prior.rho;
  auto g_lu = detail::checked_lu(g, "posterior_mean_finite_rho: T'M^-1 T + I/rho");
  out.d_ = g_lu.solve(t.transpose() * minv_z);
  const Eigen::VectorXd a = minv_z - minv_t * out.d_;
  out.c_ = a.head(n);
  out.b_ = a.tail(n);
  out.factor_ = std::make_shared<const PosteriorSummary::Factors>(
      PosteriorSummary::Factors{std::move(m_lu), std::move(g_lu), t});
  return out;
}

PosteriorSummary posterior_mean_diffuse(std::span<const TimeSeriesSample> samples, double beta, double lambda,
                                        double gamma, const KernelConfig& cfg) {
  const GpPrior prior{beta, std::numeric_limits<double>::infinity(), cfg};
  const Eigen::MatrixXd m = observation_covariance(samples, prior, lambda, gamma);

  PosteriorSummary out;
  out.prior_ = prior;
  out.knots_ = times_of(samples);
  const Eigen::MatrixXd t = null_space_design(out.knots_);
  const Eigen::Index n = out.knots_.size();

  const auto lu = detail::checked_lu(m, "posterior_mean_diffuse: M");
  const Eigen::MatrixXd minv_t = lu.solve(t);
  const Eigen::VectorXd minv_z = lu.solve(stacked(samples));
  const auto small = detail::checked_lu(t.transpose() * minv_t, "posterior_mean_diffuse: T'M^-1 T");
  out.d_ = small.solve(t.transpose() * minv_z);
  const Eigen::VectorXd a = minv_z - minv_t * out.d_;
  out.c_ = a.head(n);
  out.b_ = a.tail(n);
  return out;
}

LimitDiagnostics limit_identities_check(const Eigen::MatrixXd& t, const Eigen::MatrixXd& m, double rho) {
  if (m.rows() != m.cols() || t.rows() != m.rows()) {
    throw InvalidInputError("limit_identities_check: M must be square with as many rows as T");
  }
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidInputError("limit_identities_check: rho must be positive");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(t);
  if (t.cols() == 0 || qr.rank() < t.cols()) {
    throw InvalidInputError("limit_identities_check: T must have full column rank");
  }

  const auto m_lu = detail::checked_lu(m, "limit_identities_check: M");
  const Eigen::MatrixXd minv = m_lu.inverse();
  const Eigen::MatrixXd minv_t = minv * t;
  const Eigen::MatrixXd t_minv = t.transpose() * minv;
  const auto g_lu = detail::checked_lu(t.transpose() * minv_t, "limit_identities_check: T'M^-1 T");
  const Eigen::MatrixXd projector = g_lu.solve(t_minv);
  const Eigen::MatrixXd inverse_limit = minv - minv_t * projector;

  const Eigen::MatrixXd a = rho * t * t.transpose() + m;
  const auto a_lu = detail::checked_lu(a, "limit_identities_check: rho T T' + M");
  const Eigen::MatrixXd a_inv = a_lu.inverse();
  // Solve against T directly: forming rho * T' * inv(A) would amplify the
  // rounding error in inv(A) by rho.
  const auto at_lu = detail::checked_lu(a.transpose(), "limit_identities_check: (rho T T' + M)'");
  const Eigen::MatrixXd scaled = rho * at_lu.solve(t).transpose();

  return {(a_inv - inverse_limit).norm(), (scaled - projector).norm()};
}

}  // namespace vspline
