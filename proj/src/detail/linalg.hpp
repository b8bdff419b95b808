#pragma once

#include <sstream>
#include <string>

#include <Eigen/LU>

#include "vspline/errors.hpp"

namespace vspline::detail {

inline constexpr double kMinReciprocalCondition = 1e-13;

/// LU factorization that refuses numerically singular input.
inline Eigen::PartialPivLU<Eigen::MatrixXd> checked_lu(const Eigen::MatrixXd& a, const std::string& what) {
  if (!a.allFinite()) throw SingularSystemError(what + ": matrix has non-finite entries");
  Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  const double rcond = lu.rcond();
  if (!(rcond >= kMinReciprocalCondition)) {
    std::ostringstream msg;
    msg << what << ": numerically singular (rcond = " << rcond << ")";
    throw SingularSystemError(msg.str());
  }
  return lu;
}

}  // namespace vspline::detail
