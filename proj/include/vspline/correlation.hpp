#pragma once

#include <Eigen/Core>

namespace vspline {

/// Known precision structures of correlated errors: position errors have
/// covariance sigma^2 W^-1 and velocity errors sigma^2/gamma Ucorr^-1.
///
/// The name Ucorr keeps this matrix apart from the hat block U (see HatMatrices).
struct CorrelationSpec {
  Eigen::MatrixXd W;
  Eigen::MatrixXd Ucorr;

  static CorrelationSpec identity(Eigen::Index n);

  /// Throws InvalidInputError unless both matrices are n x n, symmetric and
  /// positive definite (checked by Cholesky factorization).
  void validate(Eigen::Index n) const;
};

/// Symmetric positive semidefinite square root via eigendecomposition.
Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& a);

}  // namespace vspline
