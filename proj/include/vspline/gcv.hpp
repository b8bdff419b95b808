#pragma once

#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "vspline/basis.hpp"
#include "vspline/correlation.hpp"
#include "vspline/kernel.hpp"
#include "vspline/samples.hpp"

namespace vspline {

/// A cross-validation style score at parameters (lambda, gamma).  For a
/// piecewise kernel, lambda plays the role of the global scale Lambda with
/// interval penalties lambda_i = Lambda * w_i.
struct CvScore {
  double value = 0.0;
  double lambda = 0.0;
  double gamma = 0.0;
};

/// Leave-one-out CV by refitting without each triple (t_i, y_i, v_i).
/// Refits go through the representer system with the penalty scale n*lambda
/// held fixed, so every refit minimizes the full-data objective minus term i.
CvScore cv_brute_force(std::span<const TimeSeriesSample> samples, double lambda, double gamma,
                       const KernelConfig& cfg);

/// Closed-form leave-one-out CV from the hat-matrix diagonals.
CvScore cv_closed_form(std::span<const TimeSeriesSample> samples, double lambda, double gamma,
                       const KernelConfig& cfg);

/// Generalized CV: hat diagonals replaced by trace averages.
CvScore gcv_score(std::span<const TimeSeriesSample> samples, double lambda, double gamma, const KernelConfig& cfg);

/// Generalized CV for correlated errors (fit, hat matrices and residual forms weighted by W and Ucorr).
CvScore gcv_correlated(std::span<const TimeSeriesSample> samples, double lambda, double gamma,
                       const KernelConfig& cfg, const CorrelationSpec& corr);

/// Score formulas on precomputed fits.  f and df are the fitted values and
/// slopes at the knots.
double cv_from_hat(const HatMatrices& hat, const Eigen::VectorXd& f, const Eigen::VectorXd& df,
                   const Eigen::VectorXd& y, const Eigen::VectorXd& v, double gamma);
double gcv_from_hat(const HatMatrices& hat, const Eigen::VectorXd& f, const Eigen::VectorXd& df,
                    const Eigen::VectorXd& y, const Eigen::VectorXd& v, double gamma);

/// Numerator pieces and denominator of the correlated GCV:
///   position = r' W r,  cross = 2 kappa r' W^1/2 Ucorr^1/2 r',  velocity = kappa^2 r'' Ucorr r'',
///   denominator = tr(I - S - kappa U)^2, kappa = tr(gamma T) / tr(I - gamma V),
/// and score = n * (position + cross + velocity) / denominator.
struct GcvTerms {
  double position = 0.0;
  double cross = 0.0;
  double velocity = 0.0;
  double denominator = 0.0;
  double score(Eigen::Index n) const { return static_cast<double>(n) * (position + cross + velocity) / denominator; }
};

GcvTerms gcv_terms(const HatMatrices& hat, const Eigen::VectorXd& f, const Eigen::VectorXd& df,
                   const Eigen::VectorXd& y, const Eigen::VectorXd& v, double gamma, const CorrelationSpec& corr);

enum class Criterion { automatic, cv, gcv, gcv_corr };

/// Log-spaced search box.  The defaults cover lambda in [1e-8, 1e2] and gamma in [1e-4, 1e4].
struct SearchGrid {
  double lambda_min = 1e-8;
  double lambda_max = 1e2;
  int lambda_points = 21;
  double gamma_min = 1e-4;
  double gamma_max = 1e4;
  int gamma_points = 17;
  int refine_sweeps = 2;
};

struct SurfacePoint {
  double lambda = 0.0;
  double gamma = 0.0;
  /// NaN where the criterion was degenerate.
  double score = 0.0;
};

struct ParamSelection {
  CvScore best;
  Criterion criterion = Criterion::cv;
  std::vector<SurfacePoint> surface;  // lambda-major, grid order
  /// Indices of the best coarse-grid point.
  int lambda_index = 0;
  int gamma_index = 0;
};

/// Evaluates a criterion at one parameter pair; throws DegenerateScoreError or
/// SingularSystemError on failure.
double evaluate_criterion(std::span<const TimeSeriesSample> samples, double lambda, double gamma,
                          const KernelConfig& cfg, Criterion criterion, const CorrelationSpec* corr);

/// Coarse log-grid scan, then golden-section refinement of log lambda and
/// log gamma in turn.  Criterion::automatic picks closed-form CV for n <= 500
/// and GCV above that.  Throws DegenerateScoreError if every grid point fails.
ParamSelection optimize_params(std::span<const TimeSeriesSample> samples, const KernelConfig& cfg,
                               Criterion criterion, const CorrelationSpec* corr = nullptr,
                               const SearchGrid& grid = {});

}  // namespace vspline
