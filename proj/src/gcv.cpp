#include "vspline/gcv.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "vspline/errors.hpp"
#include "vspline/gram_fit.hpp"

namespace vspline {

namespace {

constexpr double kDegenerate = 1e-12;

void check_params(double lambda, double gamma) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) throw InvalidInputError("score: lambda must be positive");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw InvalidInputError("score: gamma must be nonnegative");
}

DesignMatrices design_for(std::span<const TimeSeriesSample> samples, double lambda, const KernelConfig& cfg) {
  const Eigen::VectorXd knots = times_of(samples);
  return build_design(knots, interval_penalties(cfg, knots, lambda));
}

// kappa = tr(gamma T) / tr(I - gamma V).
double trace_ratio(const HatMatrices& hat, double gamma) {
  const double n = static_cast<double>(hat.S.rows());
  const double denom = n - gamma * hat.V.trace();
  if (std::abs(denom) < kDegenerate * n) throw DegenerateScoreError("GCV: tr(I - gamma V) vanishes");
  return gamma * hat.T.trace() / denom;
}

double trace_denominator(const HatMatrices& hat, double kappa) {
  const double n = static_cast<double>(hat.S.rows());
  const double tr = n - hat.S.trace() - kappa * hat.U.trace();
  if (std::abs(tr) < kDegenerate * n) throw DegenerateScoreError("GCV: tr(I - S - kappa U) vanishes");
  return tr * tr;
}

}  // namespace

double cv_from_hat(const HatMatrices& hat, const Eigen::VectorXd& f, const Eigen::VectorXd& df,
                   const Eigen::VectorXd& y, const Eigen::VectorXd& v, double gamma) {
  const Eigen::Index n = y.size();
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double slope_den = 1.0 - gamma * hat.V(i, i);
    if (std::abs(slope_den) < kDegenerate) {
      std::ostringstream msg;
      msg << "CV: 1 - gamma V_ii vanishes at i = " << i;
      throw DegenerateScoreError(msg.str());
    }
    const double kappa = gamma * hat.T(i, i) / slope_den;
    const double den = 1.0 - hat.S(i, i) - kappa * hat.U(i, i);
    if (std::abs(den) < kDegenerate) {
      std::ostringstream msg;
      msg << "CV: leave-one-out denominator vanishes at i = " << i;
      throw DegenerateScoreError(msg.str());
    }
    const double r = (f[i] - y[i] + kappa * (df[i] - v[i])) / den;
    total += r * r;
  }
  return total / static_cast<double>(n);
}

double gcv_from_hat(const HatMatrices& hat, const Eigen::VectorXd& f, const Eigen::VectorXd& df,
                    const Eigen::VectorXd& y, const Eigen::VectorXd& v, double gamma) {
  const double kappa = trace_ratio(hat, gamma);
  const double denominator = trace_denominator(hat, kappa);
  const Eigen::VectorXd r = (f - y) + kappa * (df - v);
  return static_cast<double>(y.size()) * r.squaredNorm() / denominator;
}

GcvTerms gcv_terms(const HatMatrices& hat, const Eigen::VectorXd& f, const Eigen::VectorXd& df,
                   const Eigen::VectorXd& y, const Eigen::VectorXd& v, double gamma, const CorrelationSpec& corr) {
  corr.validate(y.size());
  const double kappa = trace_ratio(hat, gamma);
  const Eigen::VectorXd rf = f - y;
  const Eigen::VectorXd rd = df - v;
  GcvTerms terms;
  terms.position = rf.dot(corr.W * rf);
  terms.cross = 2.0 * kappa * rf.dot(symmetric_sqrt(corr.W) * (symmetric_sqrt(corr.Ucorr) * rd));
  terms.velocity = kappa * kappa * rd.dot(corr.Ucorr * rd);
  terms.denominator = trace_denominator(hat, kappa);
  return terms;
}

CvScore cv_brute_force(std::span<const TimeSeriesSample> samples, double lambda, double gamma,
                       const KernelConfig& cfg) {
  validate_samples(samples, 3);
  check_params(lambda, gamma);
  const std::size_t n = samples.size();
  // Keep n * lambda fixed so the penalty weight matches the full-data objective.
  const double reduced_lambda = static_cast<double>(n) * lambda / static_cast<double>(n - 1);
  Samples reduced(n - 1);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t k = 0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) reduced[k++] = samples[j];
    }
    const VSplineFit fit = fit_vspline(reduced, cfg, reduced_lambda, gamma);
    const double r = samples[i].y - evaluate(fit, samples[i].t);
    total += r * r;
  }
  return {total / static_cast<double>(n), lambda, gamma};
}

CvScore cv_closed_form(std::span<const TimeSeriesSample> samples, double lambda, double gamma,
                       const KernelConfig& cfg) {
  validate_samples(samples, 3);
  check_params(lambda, gamma);
  const DesignMatrices design = design_for(samples, lambda, cfg);
  const HatMatrices hat = hat_matrices(design, gamma);
  const Eigen::VectorXd y = positions_of(samples), v = velocities_of(samples);
  const Eigen::VectorXd f = hat.S * y + gamma * (hat.T * v);
  const Eigen::VectorXd df = hat.U * y + gamma * (hat.V * v);
  return {cv_from_hat(hat, f, df, y, v, gamma), lambda, gamma};
}

CvScore gcv_score(std::span<const TimeSeriesSample> samples, double lambda, double gamma, const KernelConfig& cfg) {
  validate_samples(samples, 3);
  check_params(lambda, gamma);
  const DesignMatrices design = design_for(samples, lambda, cfg);
  const HatMatrices hat = hat_matrices(design, gamma);
  const Eigen::VectorXd y = positions_of(samples), v = velocities_of(samples);
  const Eigen::VectorXd f = hat.S * y + gamma * (hat.T * v);
  const Eigen::VectorXd df = hat.U * y + gamma * (hat.V * v);
  return {gcv_from_hat(hat, f, df, y, v, gamma), lambda, gamma};
}

CvScore gcv_correlated(std::span<const TimeSeriesSample> samples, double lambda, double gamma,
                       const KernelConfig& cfg, const CorrelationSpec& corr) {
  validate_samples(samples, 3);
  check_params(lambda, gamma);
  const auto n = static_cast<Eigen::Index>(samples.size());
  corr.validate(n);
  const DesignMatrices design = design_for(samples, lambda, cfg);
  const Eigen::VectorXd y = positions_of(samples), v = velocities_of(samples);
  const Eigen::VectorXd theta = fit_theta(design, y, v, gamma, corr);
  const HatMatrices hat = hat_matrices(design, gamma, corr);
  const GcvTerms terms = gcv_terms(hat, theta.head(n), theta.tail(n), y, v, gamma, corr);
  return {terms.score(n), lambda, gamma};
}

double evaluate_criterion(std::span<const TimeSeriesSample> samples, double lambda, double gamma,
                          const KernelConfig& cfg, Criterion criterion, const CorrelationSpec* corr) {
  switch (criterion) {
    case Criterion::automatic:
      return samples.size() <= 500 ? cv_closed_form(samples, lambda, gamma, cfg).value
                                   : gcv_score(samples, lambda, gamma, cfg).value;
    case Criterion::cv: return cv_closed_form(samples, lambda, gamma, cfg).value;
    case Criterion::gcv: return gcv_score(samples, lambda, gamma, cfg).value;
    case Criterion::gcv_corr:
      if (corr == nullptr) throw InvalidInputError("gcv-corr criterion needs a correlation spec");
      return gcv_correlated(samples, lambda, gamma, cfg, *corr).value;
  }
  return std::numeric_limits<double>::quiet_NaN();
}

namespace {

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0) || !(hi >= lo) || points < 1) throw InvalidInputError("search grid: invalid range");
  std::vector<double> out(static_cast<std::size_t>(points));
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < points; ++i) {
    out[static_cast<std::size_t>(i)] = points == 1 ? lo : std::pow(10.0, a + (b - a) * i / (points - 1));
  }
  out.back() = hi;
  return out;
}

// Golden-section minimization of a unimodal-ish function on [lo, hi].
template <typename Fn>
std::pair<double, double> golden_section(Fn&& fn, double lo, double hi, int iterations) {
  const double ratio = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double x1 = b - ratio * (b - a), x2 = a + ratio * (b - a);
  double f1 = fn(x1), f2 = fn(x2);
  for (int it = 0; it < iterations; ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - ratio * (b - a);
      f1 = fn(x1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + ratio * (b - a);
      f2 = fn(x2);
    }
  }
  return f1 <= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

}  // namespace

ParamSelection optimize_params(std::span<const TimeSeriesSample> samples, const KernelConfig& cfg,
                               Criterion criterion, const CorrelationSpec* corr, const SearchGrid& grid) {
  validate_samples(samples, 3);
  if (criterion == Criterion::automatic) criterion = samples.size() <= 500 ? Criterion::cv : Criterion::gcv;
  if (criterion == Criterion::gcv_corr && corr == nullptr) {
    throw InvalidInputError("gcv-corr criterion needs a correlation spec");
  }

  const auto lambdas = log_grid(grid.lambda_min, grid.lambda_max, grid.lambda_points);
  const auto gammas = log_grid(grid.gamma_min, grid.gamma_max, grid.gamma_points);

  auto score_at = [&](double lambda, double gamma) {
    try {
      const double s = evaluate_criterion(samples, lambda, gamma, cfg, criterion, corr);
      return std::isfinite(s) ? s : std::numeric_limits<double>::infinity();
    } catch (const DegenerateScoreError&) {
      return std::numeric_limits<double>::infinity();
    } catch (const SingularSystemError&) {
      return std::numeric_limits<double>::infinity();
    }
  };

  ParamSelection out;
  out.criterion = criterion;
  out.surface.reserve(lambdas.size() * gammas.size());
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < lambdas.size(); ++i) {
    for (std::size_t j = 0; j < gammas.size(); ++j) {
      const double s = score_at(lambdas[i], gammas[j]);
      out.surface.push_back({lambdas[i], gammas[j], std::isfinite(s) ? s : std::numeric_limits<double>::quiet_NaN()});
      if (s < best) {
        best = s;
        out.lambda_index = static_cast<int>(i);
        out.gamma_index = static_cast<int>(j);
      }
    }
  }
  if (!std::isfinite(best)) throw DegenerateScoreError("every grid point gave a degenerate score");

  double log_lambda = std::log10(lambdas[static_cast<std::size_t>(out.lambda_index)]);
  double log_gamma = std::log10(gammas[static_cast<std::size_t>(out.gamma_index)]);
  const double lambda_step =
      grid.lambda_points > 1 ? (std::log10(grid.lambda_max) - std::log10(grid.lambda_min)) / (grid.lambda_points - 1) : 0.0;
  const double gamma_step =
      grid.gamma_points > 1 ? (std::log10(grid.gamma_max) - std::log10(grid.gamma_min)) / (grid.gamma_points - 1) : 0.0;

  constexpr int kGoldenIterations = 30;
  for (int sweep = 0; sweep < grid.refine_sweeps; ++sweep) {
    if (lambda_step > 0.0) {
      const double lo = std::max(std::log10(grid.lambda_min), log_lambda - lambda_step);
      const double hi = std::min(std::log10(grid.lambda_max), log_lambda + lambda_step);
      const auto [x, fx] = golden_section(
          [&](double x) { return score_at(std::pow(10.0, x), std::pow(10.0, log_gamma)); }, lo, hi, kGoldenIterations);
      if (fx < best) {
        best = fx;
        log_lambda = x;
      }
    }
    if (gamma_step > 0.0) {
      const double lo = std::max(std::log10(grid.gamma_min), log_gamma - gamma_step);
      const double hi = std::min(std::log10(grid.gamma_max), log_gamma + gamma_step);
      const auto [x, fx] = golden_section(
          [&](double x) { return score_at(std::pow(10.0, log_lambda), std::pow(10.0, x)); }, lo, hi, kGoldenIterations);
      if (fx < best) {
        best = fx;
        log_gamma = x;
      }
    }
  }

  out.best = {best, std::pow(10.0, log_lambda), std::pow(10.0, log_gamma)};
  return out;
}

}  // namespace vspline
