#pragma once

#include <cstddef>
#include <optional>
#include <utility>
#include <vector>

#include "pnr/waveform.hpp"

namespace pnr {

/// Half-open sample index range [begin, end).
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  std::size_t size() const noexcept { return end > begin ? end - begin : 0; }
};

struct FilterPolicy {
  std::size_t window_start = 0;
  std::optional<std::size_t> window_length;  // unset: to the end of the record
  IndexRange baseline_region{0, 400};
  double zero_trace_k = 5.0;
  double peak_count_threshold_frac = 0.5;
  double hysteresis_frac = 0.25;
  double delay_min = 2e-9;  // trigger-relative seconds
  double delay_max = 8e-9;
  std::size_t smoothing_width = 15;  // odd; 1 disables smoothing

  std::size_t effective_window_length(std::size_t trace_length) const;
  void validate(std::size_t trace_length) const;
};

struct FilterReport {
  std::size_t accepted = 0;
  std::size_t rejected_zero = 0;
  std::size_t rejected_multipeak = 0;
  std::size_t rejected_delay = 0;
  double baseline_sigma = 0.0;  // RMS of per-record baseline sigmas over all inputs

  std::size_t total() const noexcept { return accepted + rejected_zero + rejected_multipeak + rejected_delay; }
  FilterReport& operator+=(const FilterReport& other);

  // Running sum of squared per-record sigmas, so partial reports can be merged.
  double sigma_sq_sum = 0.0;
};

struct Baseline {
  double mean = 0.0;
  double sigma = 0.0;  // population convention
};

Baseline estimate_baseline(const Trace& trace, IndexRange region);

enum class TraceClass { Accept, ZeroTrace, MultiPeak, WrongDelay };

const char* to_string(TraceClass c) noexcept;

/// Everything classify_trace looks at, exposed for reporting and threshold selection.
struct TraceFeatures {
  TraceClass verdict = TraceClass::Accept;
  Baseline baseline;
  double peak = 0.0;        // smoothed maximum above the baseline mean, volts
  std::size_t crossings = 0;
  std::optional<double> half_height_time;  // trigger-relative seconds
};

TraceFeatures analyze_trace(const Trace& trace, const FilterPolicy& policy);

/// ZeroTrace, then MultiPeak, then WrongDelay; first match wins.
TraceClass classify_trace(const Trace& trace, const FilterPolicy& policy);

/// Baseline-subtracted copy of samples [window_start, window_start + length).
Trace window_trace(const Trace& trace, const FilterPolicy& policy, double baseline_mean);

/// Classifies, windows and baseline-subtracts a set. Throws EmptyResult when nothing survives.
std::pair<TraceSet, FilterReport> window_and_align(const TraceSet& set, const FilterPolicy& policy);

/// Like window_and_align but never throws on an empty result; used for chunked streams.
std::pair<TraceSet, FilterReport> filter_chunk(const TraceSet& set, const FilterPolicy& policy);

}  // namespace pnr
