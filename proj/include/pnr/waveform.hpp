#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace pnr {

/// One uniformly sampled detector record. Times are trigger-relative seconds.
struct Trace {
  std::vector<double> samples;  // volts
  double sample_period = 0.0;   // seconds
  double t0 = 0.0;              // time of samples[0]
  std::uint64_t id = 0;

  std::size_t size() const noexcept { return samples.size(); }
  double time_at(std::size_t i) const noexcept { return t0 + static_cast<double>(i) * sample_period; }

  /// Throws InvalidArgument unless samples are non-empty and finite and the period is positive.
  void validate() const;
};

enum class SetSource { measured, synthetic };

struct TraceSet {
  std::vector<Trace> traces;
  std::optional<double> mean_photon_number_label;
  SetSource source = SetSource::measured;

  std::size_t size() const noexcept { return traces.size(); }
  bool empty() const noexcept { return traces.empty(); }
  std::size_t samples_per_trace() const noexcept { return traces.empty() ? 0 : traces.front().size(); }

  /// Checks every trace and that all traces share period and length.
  void validate() const;
};

/// How per-photon amplitude/edge offsets grow with photon number.
///   linear:   offset(n) = (n - 1) * step
///   harmonic: offset(n) = step * (1 + 1/2 + ... + 1/(n-1))
/// Both move by exactly one step between n = 1 and n = 2.
enum class ShiftSchedule { linear, harmonic };

struct SyntheticConfig {
  double n_bar = 1.5;
  double amp_base = 0.370;       // V
  double amp_step = 0.05e-3;     // V
  double t_rise_base = 4.0e-9;   // s
  double t_rise_step = 120e-12;  // s
  double tau_rise = 1.0e-9;      // s
  double tau_fall = 20.0e-9;     // s
  double jitter_sigma = 11.3e-12;
  double noise_sigma = 0.3e-3;   // V
  double sample_period = 8e-12;  // s
  std::size_t n_samples = 4096;
  std::uint64_t rng_seed = 1;
  ShiftSchedule schedule = ShiftSchedule::harmonic;

  void validate() const;

  /// Offset multiplier for photon number n >= 1 (0 for n = 1).
  double shift_units(unsigned n) const;
  /// Peak-scale A(n) before flooring, and whether the amp_base/10 floor applies.
  double amplitude(unsigned n, bool* floored = nullptr) const;
  /// Nominal (jitter-free) pulse onset time t_n.
  double onset(unsigned n) const;
};

struct LabeledTrace {
  Trace trace;
  unsigned true_n = 0;
  bool amplitude_floored = false;
};

/// Noise-free pulse value at time t for a pulse of peak-scale `amplitude` starting at `onset`.
double pulse_shape(double t, double onset, double amplitude, double tau_rise, double tau_fall) noexcept;

/// Photon number drawn for record `index`; identical to the label generate_synthetic assigns.
unsigned draw_photon_number(const SyntheticConfig& cfg, std::uint64_t index);

/// Renders record `index` with a prescribed photon number. Jitter and noise come from the
/// record's own random stream, so the result only depends on (cfg, photon_number, index).
LabeledTrace synthesize_record(const SyntheticConfig& cfg, unsigned photon_number, std::uint64_t index);

/// Records first_index .. first_index + count - 1 of the synthetic stream defined by cfg.
std::vector<LabeledTrace> generate_synthetic(const SyntheticConfig& cfg, std::size_t count,
                                             std::uint64_t first_index = 0);

TraceSet to_trace_set(const std::vector<LabeledTrace>& records, std::optional<double> label);

/// e^{-n_bar} n_bar^n / n!
double poisson_pmf(unsigned n, double n_bar);

}  // namespace pnr
