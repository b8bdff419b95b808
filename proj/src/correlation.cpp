#include "vspline/correlation.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>

#include "vspline/errors.hpp"

namespace vspline {

CorrelationSpec CorrelationSpec::identity(Eigen::Index n) {
  return {Eigen::MatrixXd::Identity(n, n), Eigen::MatrixXd::Identity(n, n)};
}

namespace {
void check_spd(const Eigen::MatrixXd& a, Eigen::Index n, const char* name) {
  if (a.rows() != n || a.cols() != n) {
    throw InvalidInputError(std::string("correlation matrix ") + name + " has the wrong shape");
  }
  if (!a.allFinite()) throw InvalidInputError(std::string("correlation matrix ") + name + " has non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidInputError(std::string("correlation matrix ") + name + " is not symmetric");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() != Eigen::Success) {
    throw InvalidInputError(std::string("correlation matrix ") + name + " is not positive definite");
  }
}
}  // namespace

void CorrelationSpec::validate(Eigen::Index n) const {
  check_spd(W, n, "W");
  check_spd(Ucorr, n, "Ucorr");
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (a + a.transpose()));
  const Eigen::VectorXd root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  return eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

}  // namespace vspline
