#include "pnr/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pnr/errors.hpp"

namespace pnr {
namespace {

// Centered moving average; edges use the available half-window.
std::vector<double> smooth(const std::vector<double>& x, std::size_t width) {
  if (width <= 1) return x;
  const std::size_t half = width / 2;
  const std::size_t n = x.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + x[i];
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t lo = i >= half ? i - half : 0;
    const std::size_t hi = std::min(n, i + half + 1);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  return out;
}

}  // namespace

const char* to_string(TraceClass c) noexcept {
  switch (c) {
    case TraceClass::Accept: return "accept";
    case TraceClass::ZeroTrace: return "zero-trace";
    case TraceClass::MultiPeak: return "multi-peak";
    case TraceClass::WrongDelay: return "wrong-delay";
  }
  return "unknown";
}

std::size_t FilterPolicy::effective_window_length(std::size_t trace_length) const {
  if (window_length) return *window_length;
  return trace_length > window_start ? trace_length - window_start : 0;
}

void FilterPolicy::validate(std::size_t trace_length) const {
  if (!(peak_count_threshold_frac > 0.0 && peak_count_threshold_frac < 1.0))
    throw InvalidArgument("peak_count_threshold_frac must lie in (0, 1)");
  if (!(hysteresis_frac > 0.0 && hysteresis_frac < peak_count_threshold_frac))
    throw InvalidArgument("hysteresis_frac must lie in (0, peak_count_threshold_frac)");
  if (!(zero_trace_k > 0.0)) throw InvalidArgument("zero_trace_k must be positive");
  if (!(delay_min <= delay_max)) throw InvalidArgument("delay window is inverted");
  const std::size_t len = effective_window_length(trace_length);
  if (len == 0 || window_start + len > trace_length)
    throw InvalidArgument("analysis window [" + std::to_string(window_start) + ", " +
                          std::to_string(window_start + len) + ") exceeds trace length " +
                          std::to_string(trace_length));
  if (baseline_region.size() == 0 || baseline_region.end > trace_length)
    throw InvalidArgument("baseline region is empty or outside the trace");
  if (smoothing_width == 0) throw InvalidArgument("smoothing_width must be >= 1");
}

FilterReport& FilterReport::operator+=(const FilterReport& other) {
  accepted += other.accepted;
  rejected_zero += other.rejected_zero;
  rejected_multipeak += other.rejected_multipeak;
  rejected_delay += other.rejected_delay;
  sigma_sq_sum += other.sigma_sq_sum;
  const std::size_t n = total();
  baseline_sigma = n ? std::sqrt(sigma_sq_sum / static_cast<double>(n)) : 0.0;
  return *this;
}

Baseline estimate_baseline(const Trace& trace, IndexRange region) {
  if (region.size() == 0 || region.end > trace.size())
    throw InvalidArgument("baseline region [" + std::to_string(region.begin) + ", " + std::to_string(region.end) +
                          ") is empty or outside a trace of " + std::to_string(trace.size()) + " samples");
  const double n = static_cast<double>(region.size());
  double sum = 0.0;
  for (std::size_t i = region.begin; i < region.end; ++i) sum += trace.samples[i];
  const double mean = sum / n;
  double ss = 0.0;
  for (std::size_t i = region.begin; i < region.end; ++i) {
    const double d = trace.samples[i] - mean;
    ss += d * d;
  }
  return {mean, std::sqrt(ss / n)};
}

TraceFeatures analyze_trace(const Trace& trace, const FilterPolicy& policy) {
  TraceFeatures f;
  f.baseline = estimate_baseline(trace, policy.baseline_region);

  auto s = smooth(trace.samples, policy.smoothing_width);
  for (double& v : s) v -= f.baseline.mean;
  const auto peak_it = std::max_element(s.begin(), s.end());
  f.peak = *peak_it;

  if (!(f.peak > policy.zero_trace_k * f.baseline.sigma)) {
    f.verdict = TraceClass::ZeroTrace;
    return f;
  }

  const double arm = policy.peak_count_threshold_frac * f.peak;
  const double rearm = policy.hysteresis_frac * f.peak;
  bool armed = s.front() < arm;
  for (double v : s) {
    if (armed && v >= arm) {
      ++f.crossings;
      armed = false;
    } else if (!armed && v < rearm) {
      armed = true;
    }
  }
  if (f.crossings > 1) {
    f.verdict = TraceClass::MultiPeak;
    return f;
  }

  const double half = 0.5 * f.peak;
  const std::size_t ipk = static_cast<std::size_t>(peak_it - s.begin());
  // Last sample below half height before the peak, then interpolate to the next one.
  std::size_t i = ipk;
  while (i > 0 && s[i - 1] >= half) --i;
  if (i == 0) {
    f.half_height_time = trace.time_at(0);
  } else {
    const double frac = (half - s[i - 1]) / (s[i] - s[i - 1]);
    f.half_height_time = trace.time_at(i - 1) + frac * trace.sample_period;
  }
  if (*f.half_height_time < policy.delay_min || *f.half_height_time > policy.delay_max) {
    f.verdict = TraceClass::WrongDelay;
    return f;
  }
  f.verdict = TraceClass::Accept;
  return f;
}

TraceClass classify_trace(const Trace& trace, const FilterPolicy& policy) {
  policy.validate(trace.size());
  return analyze_trace(trace, policy).verdict;
}

Trace window_trace(const Trace& trace, const FilterPolicy& policy, double baseline_mean) {
  const std::size_t len = policy.effective_window_length(trace.size());
  Trace out;
  out.sample_period = trace.sample_period;
  out.t0 = trace.time_at(policy.window_start);
  out.id = trace.id;
  out.samples.resize(len);
  for (std::size_t i = 0; i < len; ++i) out.samples[i] = trace.samples[policy.window_start + i] - baseline_mean;
  return out;
}

std::pair<TraceSet, FilterReport> filter_chunk(const TraceSet& set, const FilterPolicy& policy) {
  TraceSet out;
  out.mean_photon_number_label = set.mean_photon_number_label;
  out.source = set.source;
  FilterReport report;
  if (set.empty()) return {out, report};
  policy.validate(set.samples_per_trace());

  for (const auto& tr : set.traces) {
    if (tr.size() != set.samples_per_trace()) throw InvalidArgument("trace set mixes record lengths");
    const auto f = analyze_trace(tr, policy);
    report.sigma_sq_sum += f.baseline.sigma * f.baseline.sigma;
    switch (f.verdict) {
      case TraceClass::ZeroTrace: ++report.rejected_zero; break;
      case TraceClass::MultiPeak: ++report.rejected_multipeak; break;
      case TraceClass::WrongDelay: ++report.rejected_delay; break;
      case TraceClass::Accept:
        ++report.accepted;
        out.traces.push_back(window_trace(tr, policy, f.baseline.mean));
        break;
    }
  }
  report.baseline_sigma = std::sqrt(report.sigma_sq_sum / static_cast<double>(report.total()));
  return {out, report};
}

std::pair<TraceSet, FilterReport> window_and_align(const TraceSet& set, const FilterPolicy& policy) {
  if (set.empty()) throw InvalidArgument("window_and_align: empty trace set");
  auto result = filter_chunk(set, policy);
  if (result.second.accepted == 0)
    throw EmptyResult("no trace survived filtering (" + std::to_string(result.second.total()) + " rejected)");
  return result;
}

}  // namespace pnr
