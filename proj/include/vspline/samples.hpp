#pragma once

#include <span>
#include <vector>

#include <Eigen/Core>

namespace vspline {

/// One observation: position y and velocity v = dy/dt at time t.
struct TimeSeriesSample {
  double t = 0.0;
  double y = 0.0;
  double v = 0.0;
};

using Samples = std::vector<TimeSeriesSample>;

/// Affine map between raw time s and unit time t = offset + rate * s.
///
/// Velocities transform with the chain rule: dy/dt = (dy/ds) / rate.
struct ScaleRecord {
  double offset = 0.0;
  double rate = 1.0;

  double to_unit(double s) const noexcept { return offset + rate * s; }
  double to_raw(double t) const noexcept { return (t - offset) / rate; }
  double velocity_to_unit(double v_raw) const noexcept { return v_raw / rate; }
  double velocity_to_raw(double v_unit) const noexcept { return v_unit * rate; }
};

struct RescaledSamples {
  Samples samples;
  ScaleRecord scale;
};

/// Throws InvalidInputError unless times are finite and strictly increasing
/// and there are at least `min_count` samples.
void validate_samples(std::span<const TimeSeriesSample> samples, std::size_t min_count = 2);

/// Maps raw times onto [margin, 1 - margin] (first sample to margin, last to 1 - margin).
RescaledSamples rescale_domain(std::span<const TimeSeriesSample> raw, double margin = 0.05);

/// Inverse of rescale_domain for a whole dataset.
Samples restore_domain(std::span<const TimeSeriesSample> unit, const ScaleRecord& scale);

Eigen::VectorXd times_of(std::span<const TimeSeriesSample> samples);
Eigen::VectorXd positions_of(std::span<const TimeSeriesSample> samples);
Eigen::VectorXd velocities_of(std::span<const TimeSeriesSample> samples);

}  // namespace vspline
