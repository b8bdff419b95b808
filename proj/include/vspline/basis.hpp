#pragma once

#include <Eigen/Core>

#include "vspline/correlation.hpp"
#include "vspline/kernel.hpp"

namespace vspline {

/// C1 piecewise-cubic Hermite basis on knots t_1 < ... < t_n inside (0,1),
/// extended linearly beyond the end knots.
///
/// Coefficient layout: theta[i] is the value at knot i and theta[n + i] the
/// slope at knot i, so B = [I | 0] and C = [0 | I] at the knots.
class HermiteBasis {
 public:
  explicit HermiteBasis(Eigen::VectorXd knots);

  const Eigen::VectorXd& knots() const noexcept { return knots_; }
  Eigen::Index knot_count() const noexcept { return knots_.size(); }
  Eigen::Index size() const noexcept { return 2 * knots_.size(); }

  double evaluate(const Eigen::VectorXd& theta, double t) const;
  double evaluate_deriv(const Eigen::VectorXd& theta, double t) const;
  double evaluate_second(const Eigen::VectorXd& theta, double t) const;

  /// Single basis function N_i and its derivatives.
  double basis_value(Eigen::Index i, double t) const;
  double basis_deriv(Eigen::Index i, double t) const;
  double basis_second(Eigen::Index i, double t) const;

 private:
  template <int Order>
  double eval(const Eigen::VectorXd& theta, double t) const;

  Eigen::VectorXd knots_;
};

struct DesignMatrices {
  HermiteBasis basis;
  Eigen::MatrixXd B;          // n x 2n, B_ij = N_j(t_i)
  Eigen::MatrixXd C;          // n x 2n, C_ij = N_j'(t_i)
  Eigen::MatrixXd omega;      // 2n x 2n, int lambda(t) N_i'' N_j''
  Eigen::VectorXd lambdas;    // n + 1 interval penalties on [0,t_1], [t_1,t_2], ..., [t_n,1]

  Eigen::Index n() const noexcept { return basis.knot_count(); }
};

/// lambdas holds one penalty per interval of [0, t_1, ..., t_n, 1].  The
/// exterior intervals carry no curvature in this basis, so lambdas[0] and
/// lambdas[n] do not change omega.
DesignMatrices build_design(const Eigen::VectorXd& knots, const Eigen::VectorXd& lambdas);
DesignMatrices build_design(const Eigen::VectorXd& knots, double lambda);

/// Interval penalties matching a kernel config: constant lambda for Uniform,
/// lambda * w_i for a piecewise config whose breakpoints are [0, knots, 1].
Eigen::VectorXd interval_penalties(const KernelConfig& cfg, const Eigen::VectorXd& knots, double lambda);

/// theta = (B'WB + gamma C'UC + n Omega)^-1 (B'W y + gamma C'U v), W = U = I.
Eigen::VectorXd fit_theta(const DesignMatrices& design, const Eigen::VectorXd& y, const Eigen::VectorXd& v,
                          double gamma);
/// Correlated-error variant with W = corr.W and U = corr.Ucorr.
Eigen::VectorXd fit_theta(const DesignMatrices& design, const Eigen::VectorXd& y, const Eigen::VectorXd& v,
                          double gamma, const CorrelationSpec& corr);

/// Hat blocks with f_hat = S y + gamma T v and f_hat' = U y + gamma V v.
/// (U here is the hat block, unrelated to CorrelationSpec::Ucorr.)
struct HatMatrices {
  Eigen::MatrixXd S, T, U, V;
};

HatMatrices hat_matrices(const DesignMatrices& design, double gamma);
HatMatrices hat_matrices(const DesignMatrices& design, double gamma, const CorrelationSpec& corr);

}  // namespace vspline
