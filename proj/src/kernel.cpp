#include "vspline/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vspline/errors.hpp"

namespace vspline {

KernelConfig::KernelConfig(std::vector<double> breakpoints, std::vector<double> weights, bool uniform)
    : breakpoints_(std::move(breakpoints)), weights_(std::move(weights)), uniform_(uniform) {}

KernelConfig KernelConfig::uniform() { return KernelConfig({0.0, 1.0}, {1.0}, true); }

KernelConfig KernelConfig::piecewise(std::vector<double> breakpoints, std::vector<double> weights) {
  if (breakpoints.size() < 2 || weights.size() + 1 != breakpoints.size()) {
    throw InvalidInputError("kernel config: need k+1 breakpoints for k weights");
  }
  if (breakpoints.front() != 0.0 || breakpoints.back() != 1.0) {
    throw InvalidInputError("kernel config: breakpoints must start at 0 and end at 1");
  }
  for (std::size_t i = 1; i < breakpoints.size(); ++i) {
    if (!(breakpoints[i] > breakpoints[i - 1])) {
      throw InvalidInputError("kernel config: breakpoints must be strictly increasing");
    }
  }
  for (double w : weights) {
    if (!(w > 0.0) || !std::isfinite(w)) {
      std::ostringstream msg;
      msg << "kernel config: weights must be finite and positive, got " << w;
      throw InvalidInputError(msg.str());
    }
  }
  return KernelConfig(std::move(breakpoints), std::move(weights), false);
}

KernelConfig KernelConfig::for_knots(std::span<const double> knots, std::vector<double> weights) {
  std::vector<double> grid;
  grid.reserve(knots.size() + 2);
  grid.push_back(0.0);
  grid.insert(grid.end(), knots.begin(), knots.end());
  grid.push_back(1.0);
  return piecewise(std::move(grid), std::move(weights));
}

double KernelConfig::weight_at(double u) const {
  auto it = std::upper_bound(breakpoints_.begin(), breakpoints_.end(), u);
  auto idx = static_cast<std::ptrdiff_t>(it - breakpoints_.begin()) - 1;
  idx = std::clamp<std::ptrdiff_t>(idx, 0, static_cast<std::ptrdiff_t>(weights_.size()) - 1);
  return weights_[static_cast<std::size_t>(idx)];
}

double eval_r0(double s, double t) {
  if (!(s >= 0.0 && s <= 1.0) || !(t >= 0.0 && t <= 1.0)) {
    throw DomainError("R0: arguments must lie in [0,1]");
  }
  return 1.0 + s * t;
}

namespace {

void check_domain(double s, double t, const char* what) {
  if (!(s >= 0.0 && s <= 1.0) || !(t >= 0.0 && t <= 1.0)) {
    std::ostringstream msg;
    msg << what << ": arguments (" << s << ", " << t << ") outside [0,1]";
    throw DomainError(msg.str());
  }
}

// Visits every interval [a, c] = [b_i, min(b_{i+1}, upper)] with c > a.
template <typename Fn>
double accumulate_clipped(const KernelConfig& cfg, double upper, Fn&& piece) {
  const auto bp = cfg.breakpoints();
  const auto w = cfg.weights();
  double total = 0.0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double a = bp[i];
    if (a >= upper) break;
    const double c = std::min(bp[i + 1], upper);
    total += piece(a, c) / w[i];
  }
  return total;
}

}  // namespace

double eval_r1(double s, double t, const KernelConfig& cfg) {
  check_domain(s, t, "R1");
  // The integrand (s-u)(t-u) is quadratic on each clipped interval, so
  // Simpson's rule is exact; every term is nonnegative, which avoids the
  // cancellation of the expanded antiderivative.
  return accumulate_clipped(cfg, std::min(s, t), [s, t](double a, double c) {
    const double len = c - a;
    const double p = s - a, q = t - a;
    const double alpha = s - c, beta = t - c;
    return len / 6.0 * (p * q + (p + alpha) * (q + beta) + alpha * beta);
  });
}

double eval_r1_dt(double s, double t, const KernelConfig& cfg) {
  check_domain(s, t, "R1_dt");
  return accumulate_clipped(cfg, std::min(s, t), [s](double a, double c) {
    return 0.5 * (c - a) * ((s - a) + (s - c));
  });
}

double eval_r1_ds(double s, double t, const KernelConfig& cfg) { return eval_r1_dt(t, s, cfg); }

double eval_r1_dsdt(double s, double t, const KernelConfig& cfg) {
  check_domain(s, t, "R1_dsdt");
  return accumulate_clipped(cfg, std::min(s, t), [](double a, double c) { return c - a; });
}

}  // namespace vspline
