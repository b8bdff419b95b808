#pragma once

#include <limits>
#include <memory>
#include <optional>
#include <span>

#include <Eigen/Core>
#include <Eigen/LU>

#include "vspline/kernel.hpp"
#include "vspline/samples.hpp"

namespace vspline {

/// Prior f = f0 + f1 with Cov(f1) = beta * R1 and Cov(f0) = tau^2 * R0, tau^2 = rho * beta.
///
/// rho = 0 switches the polynomial part off; rho = infinity is the diffuse
/// limit, in which prior_cov reports the beta part only.  The noise variance
/// sigma^2 enters through n*lambda = sigma^2 / beta and is never stored.
struct GpPrior {
  double beta = 1.0;
  double rho = std::numeric_limits<double>::infinity();
  KernelConfig kernel = KernelConfig::uniform();

  bool diffuse() const noexcept { return rho == std::numeric_limits<double>::infinity(); }
  double tau2() const noexcept { return rho * beta; }
};

/// Which covariance: ff = Cov(f(s), f(t)), fdf = Cov(f(s), f'(t)),
/// dff = Cov(f'(s), f(t)), dfdf = Cov(f'(s), f'(t)).
enum class CovPair { ff, fdf, dff, dfdf };

double prior_cov(double s, double t, CovPair which, const GpPrior& prior);

/// Posterior mean of f (and f') in the representer form
///   E[f(t) | y, v] = d1 + d2 t + sum c_j R1(t_j, t) + sum b_j dR1/ds(t_j, t).
/// Finite-rho summaries also carry the pointwise posterior variance.
class PosteriorSummary {
 public:
  double mean(double t) const;
  double mean_deriv(double t) const;
  bool has_variance() const noexcept { return static_cast<bool>(factor_); }
  /// Var[f(t) | y, v]; throws std::logic_error for the diffuse limit.
  double variance(double t) const;

  const Eigen::Vector2d& d() const noexcept { return d_; }
  const Eigen::VectorXd& c() const noexcept { return c_; }
  const Eigen::VectorXd& b() const noexcept { return b_; }
  const GpPrior& prior() const noexcept { return prior_; }

 private:
  friend PosteriorSummary posterior_mean_finite_rho(std::span<const TimeSeriesSample>, const GpPrior&, double,
                                                    double);
  friend PosteriorSummary posterior_mean_diffuse(std::span<const TimeSeriesSample>, double, double, double,
                                                 const KernelConfig&);

  // Covariances between the observations z = [y; v] and f(t) or f'(t), in units of beta.
  Eigen::VectorXd cross_cov(double t, bool deriv) const;

  GpPrior prior_;
  Eigen::VectorXd knots_;
  Eigen::Vector2d d_;
  Eigen::VectorXd c_, b_;
  struct Factors {
    Eigen::PartialPivLU<Eigen::MatrixXd> m;      // M
    Eigen::PartialPivLU<Eigen::MatrixXd> small;  // T'M^-1 T + I / rho
    Eigen::MatrixXd t;
  };
  // Present only for finite rho.
  std::shared_ptr<const Factors> factor_;
};

/// Observation covariance over beta for z = [y; v], assembled from prior_cov:
/// rho T T' + M with M = K + n*lambda * diag(I, I / gamma).  rho = infinity gives M.
Eigen::MatrixXd observation_covariance(std::span<const TimeSeriesSample> samples, const GpPrior& prior,
                                       double lambda, double gamma);

/// Conditional-Gaussian posterior with finite rho:
///   E[f(t)|z] = (rho phi(t)' T' + [xi' psi']) (rho T T' + M)^-1 z.
/// Evaluated through d = (T'M^-1 T + I/rho)^-1 T'M^-1 z and [c; b] = M^-1 (z - T d),
/// which is the same quantity without the rho-sized condition number.
PosteriorSummary posterior_mean_finite_rho(std::span<const TimeSeriesSample> samples, const GpPrior& prior,
                                           double lambda, double gamma);

/// Diffuse limit rho -> infinity through the closed-form projections.
PosteriorSummary posterior_mean_diffuse(std::span<const TimeSeriesSample> samples, double beta, double lambda,
                                        double gamma, const KernelConfig& cfg);

struct LimitDiagnostics {
  /// ||(rho T T' + M)^-1 - [M^-1 - M^-1 T (T'M^-1 T)^-1 T'M^-1]||_F
  double inverse_gap = 0.0;
  /// ||rho T'(rho T T' + M)^-1 - (T'M^-1 T)^-1 T'M^-1||_F
  double projector_gap = 0.0;
};

/// Distance of the finite-rho matrices from their rho -> infinity limits.
/// Throws InvalidInputError when T is not of full column rank.
LimitDiagnostics limit_identities_check(const Eigen::MatrixXd& t, const Eigen::MatrixXd& m, double rho);

}  // namespace vspline
