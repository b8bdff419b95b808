#pragma once

#include <span>

#include <Eigen/Core>

#include "vspline/kernel.hpp"
#include "vspline/samples.hpp"

namespace vspline {

/// Representer-system matrices for knots t_1..t_n.
///
/// Entry conventions follow the fitted-value identities f(t_i) = (S d + Q c + P b)_i
/// and f'(t_i) = (S' d + Q' c + P' b)_i:
///   Q_ij = R1(t_j, t_i),  Q'_ij = dR1/dt(t_j, t_i),
///   P_ij = dR1/ds(t_j, t_i),  P'_ij = d2R1/dsdt(t_j, t_i).
/// T stacks [S; S'] and M = [[Q + n*lambda I, P], [Q', P' + (n*lambda/gamma) I]].
/// With gamma == 0 the velocity block is dropped: T = S and M = Q + n*lambda I.
struct GramSystem {
  Eigen::VectorXd knots;
  KernelConfig kernel = KernelConfig::uniform();
  double lambda = 0.0;
  double gamma = 0.0;

  Eigen::MatrixXd S, S_prime;
  Eigen::MatrixXd Q, Q_prime, P, P_prime;
  Eigen::MatrixXd T, M;

  Eigen::Index n() const noexcept { return knots.size(); }
  bool position_only() const noexcept { return gamma == 0.0; }
};

GramSystem build_gram(const Eigen::VectorXd& knots, const KernelConfig& cfg, double lambda, double gamma);
GramSystem build_gram(std::span<const TimeSeriesSample> samples, const KernelConfig& cfg, double lambda,
                      double gamma);

/// f(t) = d1 + d2 t + sum_j c_j R1(t_j, t) + sum_j b_j dR1/ds(t_j, t).
class VSplineFit {
 public:
  VSplineFit(Eigen::Vector2d d, Eigen::VectorXd c, Eigen::VectorXd b, Eigen::VectorXd knots, KernelConfig kernel,
             double lambda, double gamma);

  const Eigen::Vector2d& d() const noexcept { return d_; }
  const Eigen::VectorXd& c() const noexcept { return c_; }
  const Eigen::VectorXd& b() const noexcept { return b_; }
  const Eigen::VectorXd& knots() const noexcept { return knots_; }
  const KernelConfig& kernel() const noexcept { return kernel_; }
  double lambda() const noexcept { return lambda_; }
  double gamma() const noexcept { return gamma_; }

 private:
  Eigen::Vector2d d_;
  Eigen::VectorXd c_, b_, knots_;
  KernelConfig kernel_;
  double lambda_, gamma_;
};

/// Solves the representer system through the diffuse-limit projections
///   d = (T' M^-1 T)^-1 T' M^-1 z,  [c; b] = M^-1 (z - T d),  z = [y; v].
/// Throws SingularSystemError when M or T' M^-1 T has reciprocal condition below 1e-13.
VSplineFit solve_coefficients(const GramSystem& gram, const Eigen::VectorXd& y, const Eigen::VectorXd& v);

/// Convenience: build_gram + solve_coefficients on unit-domain samples.
VSplineFit fit_vspline(std::span<const TimeSeriesSample> samples, const KernelConfig& cfg, double lambda,
                       double gamma);

double evaluate(const VSplineFit& fit, double t);
double evaluate_deriv(const VSplineFit& fit, double t);

struct KnotValues {
  Eigen::VectorXd f;
  Eigen::VectorXd df;
};

/// (S d + Q c + P b, S' d + Q' c + P' b).
KnotValues knot_values(const GramSystem& gram, const VSplineFit& fit);

/// c'Qc + 2 c'Pb + b'P'b, the squared curvature norm of the fitted spline.
double penalty_form(const GramSystem& gram, const Eigen::VectorXd& c, const Eigen::VectorXd& b);

/// The objective J (already divided by n) at arbitrary coefficients.
double objective(const GramSystem& gram, const Eigen::Vector2d& d, const Eigen::VectorXd& c,
                 const Eigen::VectorXd& b, const Eigen::VectorXd& y, const Eigen::VectorXd& v);

/// Norm of the gradient of n*J with respect to (d, c, b), relative to the
/// norm of its data-dependent part.  Zero at the exact minimizer.
double stationarity_residual(const GramSystem& gram, const VSplineFit& fit, const Eigen::VectorXd& y,
                             const Eigen::VectorXd& v);

}  // namespace vspline
