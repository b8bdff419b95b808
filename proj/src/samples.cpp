#include "vspline/samples.hpp"

#include <cmath>
#include <sstream>

#include "vspline/errors.hpp"

namespace vspline {

void validate_samples(std::span<const TimeSeriesSample> samples, std::size_t min_count) {
  if (samples.size() < min_count) {
    std::ostringstream msg;
    msg << "need at least " << min_count << " samples, got " << samples.size();
    throw InvalidInputError(msg.str());
  }
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto& s = samples[i];
    if (!std::isfinite(s.t) || !std::isfinite(s.y) || !std::isfinite(s.v)) {
      std::ostringstream msg;
      msg << "sample " << i << " has a non-finite field";
      throw InvalidInputError(msg.str());
    }
    if (i > 0 && !(s.t > samples[i - 1].t)) {
      std::ostringstream msg;
      msg << "sample times must be strictly increasing (duplicate or out of order at index " << i << ")";
      throw InvalidInputError(msg.str());
    }
  }
}

RescaledSamples rescale_domain(std::span<const TimeSeriesSample> raw, double margin) {
  validate_samples(raw);
  if (!(margin > 0.0 && margin < 0.5)) {
    throw InvalidInputError("rescale margin must lie in (0, 0.5)");
  }
  const double first = raw.front().t;
  const double last = raw.back().t;
  ScaleRecord scale;
  scale.rate = (1.0 - 2.0 * margin) / (last - first);
  scale.offset = margin - scale.rate * first;

  RescaledSamples out{Samples(raw.size()), scale};
  for (std::size_t i = 0; i < raw.size(); ++i) {
    out.samples[i] = {scale.to_unit(raw[i].t), raw[i].y, scale.velocity_to_unit(raw[i].v)};
  }
  // Pin the ends so rounding cannot push a knot onto the boundary.
  out.samples.front().t = margin;
  out.samples.back().t = 1.0 - margin;
  return out;
}

Samples restore_domain(std::span<const TimeSeriesSample> unit, const ScaleRecord& scale) {
  Samples out(unit.size());
  for (std::size_t i = 0; i < unit.size(); ++i) {
    out[i] = {scale.to_raw(unit[i].t), unit[i].y, scale.velocity_to_raw(unit[i].v)};
  }
  return out;
}

namespace {
template <typename Field>
Eigen::VectorXd column(std::span<const TimeSeriesSample> samples, Field field) {
  Eigen::VectorXd out(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) out[static_cast<Eigen::Index>(i)] = samples[i].*field;
  return out;
}
}  // namespace

Eigen::VectorXd times_of(std::span<const TimeSeriesSample> samples) { return column(samples, &TimeSeriesSample::t); }
Eigen::VectorXd positions_of(std::span<const TimeSeriesSample> samples) { return column(samples, &TimeSeriesSample::y); }
Eigen::VectorXd velocities_of(std::span<const TimeSeriesSample> samples) { return column(samples, &TimeSeriesSample::v); }

}  // namespace vspline
