#pragma once

#include <span>
#include <vector>

namespace vspline {

/// Inner product selector for the cubic-spline RKHS on [0,1].
///
/// Uniform gives <f,g> = f(0)g(0) + f'(0)g'(0) + int f''g''.  PiecewiseConstant
/// weights the curvature term by w_i on [b_i, b_{i+1}); the breakpoints start
/// at 0 and end at 1.  A piecewise config with all w_i = 1 describes the same
/// space as Uniform.
class KernelConfig {
 public:
  static KernelConfig uniform();
  static KernelConfig piecewise(std::vector<double> breakpoints, std::vector<double> weights);

  /// Piecewise config on the grid 0 < knots... < 1 with one weight per gap
  /// (knots.size() + 1 weights).
  static KernelConfig for_knots(std::span<const double> knots, std::vector<double> weights);

  bool is_uniform() const noexcept { return uniform_; }
  std::span<const double> breakpoints() const noexcept { return breakpoints_; }
  std::span<const double> weights() const noexcept { return weights_; }
  std::size_t interval_count() const noexcept { return weights_.size(); }

  /// Weight of the interval containing u (right-continuous; u = 1 maps to the last interval).
  double weight_at(double u) const;

 private:
  KernelConfig(std::vector<double> breakpoints, std::vector<double> weights, bool uniform);

  std::vector<double> breakpoints_;
  std::vector<double> weights_;
  bool uniform_ = true;
};

/// R0(s,t) = 1 + st, the kernel of the null space span{1, t}.
double eval_r0(double s, double t);

/// R1(s,t) = sum_i w_i^{-1} int_{b_i}^{b_{i+1}} (s-u)_+ (t-u)_+ du.
double eval_r1(double s, double t, const KernelConfig& cfg);

/// dR1/dt(s,t) = sum_i w_i^{-1} int (s-u)_+ Theta(t-u) du.  Excludes the R0 term s.
double eval_r1_dt(double s, double t, const KernelConfig& cfg);

/// dR1/ds(s,t) = sum_i w_i^{-1} int Theta(s-u) (t-u)_+ du.  Excludes the R0 term t.
double eval_r1_ds(double s, double t, const KernelConfig& cfg);

/// d2R1/dsdt(s,t) = sum_i w_i^{-1} |[b_i, b_{i+1}] cap [0, min(s,t)]|.
double eval_r1_dsdt(double s, double t, const KernelConfig& cfg);

}  // namespace vspline
