#include <cmath>
#include <random>

#include "pnr/errors.hpp"
#include "pnr/waveform.hpp"

namespace pnr {
namespace {

// Independent streams per record: one for the label draw, one for the waveform.
enum class Stream : std::uint32_t { label = 0x4c41424cu, waveform = 0x57415645u };

std::mt19937_64 record_engine(std::uint64_t seed, std::uint64_t index, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32),
                    static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

bool positive_finite(double x) { return x > 0.0 && std::isfinite(x); }

}  // namespace

void SyntheticConfig::validate() const {
  if (!(n_bar >= 0.0) || !std::isfinite(n_bar)) throw InvalidArgument("n_bar must be nonnegative");
  if (!positive_finite(amp_base)) throw InvalidArgument("amp_base must be positive");
  if (!(amp_step >= 0.0)) throw InvalidArgument("amp_step must be >= 0");
  if (!(t_rise_step >= 0.0)) throw InvalidArgument("t_rise_step must be >= 0");
  if (!positive_finite(tau_rise) || !positive_finite(tau_fall))
    throw InvalidArgument("pulse time constants must be positive");
  if (!(tau_rise < tau_fall)) throw InvalidArgument("tau_rise must be smaller than tau_fall");
  if (!(jitter_sigma >= 0.0) || !(noise_sigma >= 0.0)) throw InvalidArgument("noise widths must be >= 0");
  if (!positive_finite(sample_period)) throw InvalidArgument("sample_period must be positive");
  if (n_samples == 0) throw InvalidArgument("n_samples must be positive");
  if (!std::isfinite(t_rise_base)) throw InvalidArgument("t_rise_base must be finite");
}

double SyntheticConfig::shift_units(unsigned n) const {
  if (n <= 1) return 0.0;
  if (schedule == ShiftSchedule::linear) return static_cast<double>(n - 1);
  double h = 0.0;
  for (unsigned k = 1; k < n; ++k) h += 1.0 / static_cast<double>(k);
  return h;
}

double SyntheticConfig::amplitude(unsigned n, bool* floored) const {
  const double raw = amp_base - shift_units(n) * amp_step;
  const double floor = amp_base / 10.0;
  if (floored) *floored = raw < floor;
  return raw < floor ? floor : raw;
}

double SyntheticConfig::onset(unsigned n) const { return t_rise_base - shift_units(n) * t_rise_step; }

double pulse_shape(double t, double onset, double amplitude, double tau_rise, double tau_fall) noexcept {
  const double x = t - onset;
  if (x <= 0.0) return 0.0;
  return amplitude * (-std::expm1(-x / tau_rise)) * std::exp(-x / tau_fall);
}

unsigned draw_photon_number(const SyntheticConfig& cfg, std::uint64_t index) {
  if (cfg.n_bar <= 0.0) return 0;
  auto eng = record_engine(cfg.rng_seed, index, Stream::label);
  std::poisson_distribution<unsigned> dist(cfg.n_bar);
  return dist(eng);
}

LabeledTrace synthesize_record(const SyntheticConfig& cfg, unsigned photon_number, std::uint64_t index) {
  cfg.validate();
  LabeledTrace rec;
  rec.true_n = photon_number;
  rec.trace.sample_period = cfg.sample_period;
  rec.trace.t0 = 0.0;
  rec.trace.id = index;
  rec.trace.samples.assign(cfg.n_samples, 0.0);

  auto eng = record_engine(cfg.rng_seed, index, Stream::waveform);
  std::normal_distribution<double> unit(0.0, 1.0);

  if (photon_number > 0) {
    const double amp = cfg.amplitude(photon_number, &rec.amplitude_floored);
    const double onset = cfg.onset(photon_number) + cfg.jitter_sigma * unit(eng);
    auto& s = rec.trace.samples;
    for (std::size_t i = 0; i < s.size(); ++i)
      s[i] = pulse_shape(rec.trace.time_at(i), onset, amp, cfg.tau_rise, cfg.tau_fall);
  }
  if (cfg.noise_sigma > 0.0) {
    for (double& v : rec.trace.samples) v += cfg.noise_sigma * unit(eng);
  }
  return rec;
}

std::vector<LabeledTrace> generate_synthetic(const SyntheticConfig& cfg, std::size_t count,
                                             std::uint64_t first_index) {
  if (count == 0) throw InvalidArgument("generate_synthetic: count must be >= 1");
  cfg.validate();
  std::vector<LabeledTrace> out;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::uint64_t index = first_index + k;
    out.push_back(synthesize_record(cfg, draw_photon_number(cfg, index), index));
  }
  return out;
}

TraceSet to_trace_set(const std::vector<LabeledTrace>& records, std::optional<double> label) {
  TraceSet set;
  set.source = SetSource::synthetic;
  set.mean_photon_number_label = label;
  set.traces.reserve(records.size());
  for (const auto& r : records) set.traces.push_back(r.trace);
  return set;
}

}  // namespace pnr
