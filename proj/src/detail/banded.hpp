#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <Eigen/Core>

#include "vspline/errors.hpp"

namespace vspline::detail {

/// Cholesky factorization of a symmetric positive definite band matrix.
/// Only the lower band (bandwidth kd) of the input is read.
class BandedCholesky {
 public:
  BandedCholesky(const Eigen::MatrixXd& a, Eigen::Index kd, const std::string& what)
      : n_(a.rows()), kd_(kd), band_(Eigen::MatrixXd::Zero(kd + 1, a.rows())) {
    // band_(r, j) holds L(j + r, j).
    for (Eigen::Index j = 0; j < n_; ++j) {
      for (Eigen::Index r = 0; r <= kd_ && j + r < n_; ++r) band_(r, j) = a(j + r, j);
    }
    const double scale = a.diagonal().cwiseAbs().maxCoeff();
    for (Eigen::Index j = 0; j < n_; ++j) {
      double diag = band_(0, j);
      for (Eigen::Index k = std::max<Eigen::Index>(0, j - kd_); k < j; ++k) diag -= band_(j - k, k) * band_(j - k, k);
      if (!(diag > 64.0 * std::numeric_limits<double>::epsilon() * scale)) {
        throw SingularSystemError(what + ": band matrix is not numerically positive definite");
      }
      const double ljj = std::sqrt(diag);
      band_(0, j) = ljj;
      for (Eigen::Index i = j + 1; i <= std::min(n_ - 1, j + kd_); ++i) {
        double s = band_(i - j, j);
        for (Eigen::Index k = std::max<Eigen::Index>(0, i - kd_); k < j; ++k) s -= band_(i - k, k) * band_(j - k, k);
        band_(i - j, j) = s / ljj;
      }
    }
  }

  Eigen::MatrixXd solve(Eigen::MatrixXd rhs) const {
    for (Eigen::Index col = 0; col < rhs.cols(); ++col) {
      auto x = rhs.col(col);
      for (Eigen::Index i = 0; i < n_; ++i) {
        double s = x[i];
        for (Eigen::Index k = std::max<Eigen::Index>(0, i - kd_); k < i; ++k) s -= band_(i - k, k) * x[k];
        x[i] = s / band_(0, i);
      }
      for (Eigen::Index i = n_ - 1; i >= 0; --i) {
        double s = x[i];
        for (Eigen::Index k = i + 1; k <= std::min(n_ - 1, i + kd_); ++k) s -= band_(k - i, i) * x[k];
        x[i] = s / band_(0, i);
      }
    }
    return rhs;
  }

 private:
  Eigen::Index n_;
  Eigen::Index kd_;
  Eigen::MatrixXd band_;
};

}  // namespace vspline::detail
