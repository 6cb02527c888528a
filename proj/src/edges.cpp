#include "pnr/edges.hpp"

#include <algorithm>
#include <cmath>

#include "pnr/discriminate.hpp"
#include "pnr/errors.hpp"

namespace pnr {

void ThresholdPolicy::validate() const {
  if (mode == ThresholdMode::fraction_of_median_peak && !(value > 0.0 && value < 1.0))
    throw InvalidArgument("fractional threshold must lie in (0, 1)");
  if (!std::isfinite(value)) throw InvalidArgument("threshold must be finite");
  if (!(timing_resolution >= 0.0)) throw InvalidArgument("timing resolution must be >= 0");
}

double trace_peak(const Trace& trace) {
  if (trace.samples.empty()) throw InvalidArgument("trace has no samples");
  return *std::max_element(trace.samples.begin(), trace.samples.end());
}

double resolve_threshold(const ThresholdPolicy& policy, std::span<const double> peaks) {
  policy.validate();
  if (policy.mode == ThresholdMode::absolute_volts) return policy.value;
  if (peaks.empty()) throw InvalidArgument("fractional threshold needs at least one trace peak");
  return policy.value * quantile(peaks, 0.5);
}

double quantize_time(double t, double resolution) {
  if (resolution <= 0.0) return t;
  return std::round(t / resolution) * resolution;  // std::round: halves away from zero
}

EdgePair extract_edges(const Trace& trace, double threshold_volts, double timing_resolution) {
  const auto& v = trace.samples;
  if (v.empty()) throw InvalidArgument("trace has no samples");
  const std::size_t n = v.size();

  // First-sample-above rule: the rising edge is the first sample at or above threshold.
  const auto first = std::find_if(v.begin(), v.end(), [&](double x) { return x >= threshold_volts; });
  if (first == v.end())
    throw NoCrossing("threshold " + std::to_string(threshold_volts) + " V is never reached (peak " +
                     std::to_string(*std::max_element(v.begin(), v.end())) + " V)");
  const auto i = static_cast<std::size_t>(first - v.begin());
  double t_rise;
  if (i == 0) {
    t_rise = trace.time_at(0);
  } else {
    const double frac = (threshold_volts - v[i - 1]) / (v[i] - v[i - 1]);
    t_rise = trace.time_at(i - 1) + frac * trace.sample_period;
  }

  // Last sample at or above threshold; the crossing lies between it and its successor.
  std::size_t j = n - 1;
  while (v[j] < threshold_volts) --j;  // terminates at i at the latest
  if (j == n - 1) throw NoCrossing("trace ends above the threshold: no falling edge");
  const double frac = (v[j] - threshold_volts) / (v[j] - v[j + 1]);
  const double t_fall = trace.time_at(j) + frac * trace.sample_period;

  return {quantize_time(t_rise, timing_resolution), quantize_time(t_fall, timing_resolution), trace.id};
}

EdgePair extract_edges(const Trace& trace, const ThresholdPolicy& policy) {
  policy.validate();
  if (policy.mode != ThresholdMode::absolute_volts)
    throw InvalidArgument("fraction-of-median-peak thresholds need a trace set; use edge_points");
  return extract_edges(trace, policy.value, policy.timing_resolution);
}

EdgePointSet edge_points(const TraceSet& set, double threshold_volts, double timing_resolution) {
  EdgePointSet out;
  out.threshold_volts = threshold_volts;
  out.points.reserve(set.size());
  for (const auto& tr : set.traces) {
    try {
      const auto e = extract_edges(tr, threshold_volts, timing_resolution);
      out.points.push_back({e.t_rise, e.t_fall, e.trace_id});
    } catch (const NoCrossing&) {
      out.dropped_ids.push_back(tr.id);
    }
  }
  return out;
}

EdgePointSet edge_points(const TraceSet& set, const ThresholdPolicy& policy) {
  std::vector<double> peaks;
  if (policy.mode == ThresholdMode::fraction_of_median_peak) {
    peaks.reserve(set.size());
    for (const auto& tr : set.traces) peaks.push_back(trace_peak(tr));
  }
  return edge_points(set, resolve_threshold(policy, peaks), policy.timing_resolution);
}

}  // namespace pnr
