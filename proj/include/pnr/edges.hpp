#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pnr/pca.hpp"
#include "pnr/waveform.hpp"

namespace pnr {

/// Trigger-relative threshold-crossing times of one pulse.
struct EdgePair {
  double t_rise = 0.0;
  double t_fall = 0.0;
  std::uint64_t trace_id = 0;
};

enum class ThresholdMode { absolute_volts, fraction_of_median_peak };

struct ThresholdPolicy {
  ThresholdMode mode = ThresholdMode::fraction_of_median_peak;
  double value = 0.5;               // volts, or fraction of the median peak
  double timing_resolution = 0.0;   // seconds; 0 keeps continuous times

  void validate() const;
};

/// Maximum sample value, the per-trace peak used for the median-peak threshold.
double trace_peak(const Trace& trace);

/// Threshold in volts; `peaks` supplies the median for fraction mode.
double resolve_threshold(const ThresholdPolicy& policy, std::span<const double> peaks);

/// Rounds to the nearest multiple of `resolution`, halves away from zero. 0 passes through.
double quantize_time(double t, double resolution);

/// First upward and last downward crossing of `threshold_volts`, linearly interpolated.
/// Throws NoCrossing when the trace never reaches the threshold or ends above it.
EdgePair extract_edges(const Trace& trace, double threshold_volts, double timing_resolution = 0.0);

/// Absolute-mode policies only; fraction mode needs a set (see edge_points).
EdgePair extract_edges(const Trace& trace, const ThresholdPolicy& policy);

struct EdgePointSet {
  std::vector<WeightPoint> points;  // w1 = t_rise, w2 = t_fall
  std::vector<std::uint64_t> dropped_ids;
  double threshold_volts = 0.0;
};

/// Edges for every trace at an explicit threshold; failures are tallied, not fatal.
EdgePointSet edge_points(const TraceSet& set, double threshold_volts, double timing_resolution);

EdgePointSet edge_points(const TraceSet& set, const ThresholdPolicy& policy);

}  // namespace pnr
