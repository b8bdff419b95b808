#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include <json.hpp>

#include "vspline/gcv.hpp"
#include "vspline/samples.hpp"

namespace vspline::cli {

enum ExitCode : int { kOk = 0, kUsage = 2, kNumerical = 3, kDegenerate = 4 };

enum class SimKind { iwp, line, sine };

struct SimulateOptions {
  SimKind kind = SimKind::sine;
  int n = 50;
  double noise = 0.1;
  /// Defaults to noise when unset.
  std::optional<double> velocity_noise;
  std::uint64_t seed = 1;
  double t_start = 0.0;
  double t_end = 1.0;
};

/// Synthetic (t, y, v) data on an equispaced grid.  iwp draws the integrated
/// Wiener process Z(t) = int_0^t (t - u) dW(u) with exact Gaussian increments;
/// v is its derivative W(t).  Noise is added to y and v independently.
Samples simulate(const SimulateOptions& options);

struct FitOptions {
  double lambda = 0.0;
  double gamma = 0.0;
  std::string weights_path;
  std::string corr_path;
  int grid = 200;
};

/// Fits rescaled samples at fixed parameters and builds the JSON report
/// (parameters, scores, coefficients, traces, curve in raw units).
nlohmann::json fit_report(const Samples& raw, const FitOptions& options);

struct SelectOptions {
  Criterion criterion = Criterion::automatic;
  SearchGrid search;
  std::string weights_path;
  std::string corr_path;
  int grid = 200;
};

struct SelectResult {
  nlohmann::json report;
  ParamSelection selection;
};

SelectResult select_report(const Samples& raw, const SelectOptions& options);

/// Curve CSV (t,f,df) from a report's curve block.
std::string curve_csv(const nlohmann::json& report);
std::string surface_csv(const ParamSelection& selection);

/// Entry point shared by the executable and the tests.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace vspline::cli
