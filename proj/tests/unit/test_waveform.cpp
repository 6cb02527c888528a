#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <map>

#include "pnr/errors.hpp"
#include "pnr/waveform.hpp"

using namespace pnr;

namespace {

SyntheticConfig quiet() {
  SyntheticConfig cfg;
  cfg.noise_sigma = 0.0;
  cfg.jitter_sigma = 0.0;
  return cfg;
}

// First upward crossing of `level` by the closed-form pulse, found by bisection.
double closed_form_crossing(const SyntheticConfig& cfg, unsigned n, double level) {
  const double onset = cfg.onset(n);
  const double amp = cfg.amplitude(n);
  const double t_peak = onset + cfg.tau_rise * std::log1p(cfg.tau_fall / cfg.tau_rise);
  double lo = onset, hi = t_peak;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double v = amp * (1.0 - std::exp(-(mid - onset) / cfg.tau_rise)) * std::exp(-(mid - onset) / cfg.tau_fall);
    (v < level ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

double interpolated_crossing(const Trace& tr, double level) {
  for (std::size_t i = 1; i < tr.size(); ++i)
    if (tr.samples[i - 1] < level && tr.samples[i] >= level) {
      const double f = (level - tr.samples[i - 1]) / (tr.samples[i] - tr.samples[i - 1]);
      return tr.time_at(i - 1) + f * tr.sample_period;
    }
  return NAN;
}

double peak(const Trace& tr) {
  double m = -INFINITY;
  for (double v : tr.samples) m = std::max(m, v);
  return m;
}

}  // namespace

TEST(PoissonPmf, Definition) {
  EXPECT_DOUBLE_EQ(poisson_pmf(0, 2.3), std::exp(-2.3));
  EXPECT_NEAR(poisson_pmf(1, 1.0), 0.36787944117144233, 1e-15);
}

TEST(PoissonPmf, MatchesRecurrence) {
  for (double nbar : {0.2, 1.5, 3.5, 9.0}) {
    double p = std::exp(-nbar);
    for (unsigned n = 0; n <= 30; ++n) {
      if (n > 0) p *= nbar / n;
      EXPECT_NEAR(poisson_pmf(n, nbar), p, 1e-12 * std::max(p, 1e-300)) << "n=" << n << " nbar=" << nbar;
    }
  }
  double p4 = std::exp(-3.5);
  for (int n = 1; n <= 4; ++n) p4 *= 3.5 / n;
  EXPECT_NEAR(poisson_pmf(4, 3.5), p4, 1e-12);
}

TEST(PoissonPmf, PartialSumsApproachOne) {
  double sum = 0.0, prev = 0.0;
  for (unsigned n = 0; n < 60; ++n) {
    sum += poisson_pmf(n, 3.5);
    EXPECT_LE(sum, 1.0 + 1e-15);
    EXPECT_GE(sum, prev);
    prev = sum;
  }
  EXPECT_NEAR(sum, 1.0, 1e-12);
}

TEST(PoissonPmf, RejectsNonPositiveMean) {
  EXPECT_THROW(poisson_pmf(1, 0.0), InvalidArgument);
  EXPECT_THROW(poisson_pmf(1, -1.0), InvalidArgument);
}

TEST(Synthetic, NoiselessPeakMatchesClosedForm) {
  const auto cfg = quiet();
  const auto rec = synthesize_record(cfg, 1, 0);
  double expected = -INFINITY;
  for (std::size_t i = 0; i < rec.trace.size(); ++i) {
    const double x = rec.trace.time_at(i) - cfg.t_rise_base;
    if (x > 0)
      expected = std::max(expected, cfg.amp_base * (1 - std::exp(-x / cfg.tau_rise)) * std::exp(-x / cfg.tau_fall));
  }
  EXPECT_DOUBLE_EQ(peak(rec.trace), expected);
  EXPECT_EQ(rec.true_n, 1u);
}

TEST(Synthetic, TwoPhotonCrossingEarlierByStep) {
  const auto cfg = quiet();
  const double level = 0.5 * peak(synthesize_record(cfg, 1, 0).trace);
  const double t1 = interpolated_crossing(synthesize_record(cfg, 1, 0).trace, level);
  const double t2 = interpolated_crossing(synthesize_record(cfg, 2, 0).trace, level);
  const double oracle = closed_form_crossing(cfg, 1, level) - closed_form_crossing(cfg, 2, level);
  EXPECT_NEAR(t1 - t2, cfg.t_rise_step, cfg.sample_period);
  EXPECT_NEAR(t1 - t2, oracle, cfg.sample_period);
}

TEST(Synthetic, ZeroPhotonsIsNoiseOnly) {
  auto cfg = quiet();
  const auto rec = synthesize_record(cfg, 0, 5);
  for (double v : rec.trace.samples) EXPECT_EQ(v, 0.0);
  cfg.noise_sigma = 1e-3;
  const auto noisy = synthesize_record(cfg, 0, 5);
  double ss = 0.0;
  for (double v : noisy.trace.samples) ss += v * v;
  EXPECT_NEAR(std::sqrt(ss / noisy.trace.size()), 1e-3, 1e-4);
}

TEST(Synthetic, DeterministicBytes) {
  SyntheticConfig cfg;
  cfg.rng_seed = 99;
  const auto a = generate_synthetic(cfg, 20);
  const auto b = generate_synthetic(cfg, 20);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].true_n, b[i].true_n);
    ASSERT_EQ(a[i].trace.samples.size(), b[i].trace.samples.size());
    EXPECT_EQ(0, std::memcmp(a[i].trace.samples.data(), b[i].trace.samples.data(),
                             a[i].trace.samples.size() * sizeof(double)));
  }
  cfg.rng_seed = 100;
  const auto c = generate_synthetic(cfg, 20);
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs |= a[i].trace.samples != c[i].trace.samples;
  EXPECT_TRUE(differs);
}

TEST(Synthetic, ChunkedGenerationMatchesWhole) {
  SyntheticConfig cfg;
  cfg.rng_seed = 4;
  cfg.n_samples = 256;
  const auto whole = generate_synthetic(cfg, 30);
  const auto tail = generate_synthetic(cfg, 10, 20);
  for (std::size_t i = 0; i < 10; ++i) {
    EXPECT_EQ(tail[i].trace.id, whole[20 + i].trace.id);
    EXPECT_EQ(tail[i].true_n, whole[20 + i].true_n);
    EXPECT_EQ(tail[i].trace.samples, whole[20 + i].trace.samples);
  }
}

TEST(Synthetic, CountZeroIsInvalid) {
  EXPECT_THROW(generate_synthetic(SyntheticConfig{}, 0), InvalidArgument);
}

TEST(Synthetic, ConfigValidation) {
  SyntheticConfig cfg;
  cfg.tau_rise = cfg.tau_fall;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = SyntheticConfig{};
  cfg.amp_step = -1e-3;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = SyntheticConfig{};
  cfg.t_rise_step = -1e-12;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
  cfg = SyntheticConfig{};
  cfg.sample_period = 0;
  EXPECT_THROW(cfg.validate(), InvalidArgument);
}

TEST(Synthetic, AmplitudeFloorFlagged) {
  auto cfg = quiet();
  cfg.amp_step = 0.1;
  cfg.schedule = ShiftSchedule::linear;
  const auto rec = synthesize_record(cfg, 5, 0);  // 0.37 - 0.4 < floor
  EXPECT_TRUE(rec.amplitude_floored);
  bool floored = false;
  EXPECT_DOUBLE_EQ(cfg.amplitude(5, &floored), cfg.amp_base / 10);
  EXPECT_TRUE(floored);
  EXPECT_FALSE(synthesize_record(cfg, 2, 0).amplitude_floored);
}

TEST(Synthetic, LinearAndHarmonicSchedules) {
  SyntheticConfig cfg;
  cfg.schedule = ShiftSchedule::linear;
  EXPECT_DOUBLE_EQ(cfg.shift_units(4), 3.0);
  cfg.schedule = ShiftSchedule::harmonic;
  EXPECT_DOUBLE_EQ(cfg.shift_units(4), 1.0 + 0.5 + 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(cfg.shift_units(2), 1.0);
  EXPECT_DOUBLE_EQ(cfg.shift_units(1), 0.0);
}

TEST(SyntheticProperty, NoiselessMonotonicity) {
  for (auto schedule : {ShiftSchedule::linear, ShiftSchedule::harmonic}) {
    auto cfg = quiet();
    cfg.schedule = schedule;
    const double level = 0.5 * peak(synthesize_record(cfg, 1, 0).trace);
    double prev_peak = INFINITY, prev_t = INFINITY;
    for (unsigned n = 1; n <= 8; ++n) {
      const auto tr = synthesize_record(cfg, n, 0).trace;
      const double p = peak(tr);
      const double t = interpolated_crossing(tr, level);
      EXPECT_LT(p, prev_peak) << "n=" << n;
      EXPECT_LT(t, prev_t) << "n=" << n;
      prev_peak = p;
      prev_t = t;
    }
  }
}

TEST(SyntheticProperty, PoissonLabelStatistics) {
  SyntheticConfig cfg;
  cfg.n_bar = 1.5;
  cfg.rng_seed = 2024;
  const std::size_t N = 100000;
  std::map<unsigned, std::size_t> freq;
  for (std::size_t i = 0; i < N; ++i) ++freq[draw_photon_number(cfg, i)];
  for (unsigned n = 0; n <= 7; ++n) {
    const double p = poisson_pmf(n, cfg.n_bar);
    const double se = std::sqrt(p * (1 - p) / N);
    EXPECT_NEAR(static_cast<double>(freq[n]) / N, p, 4 * se) << "n=" << n;
  }
}

TEST(SyntheticProperty, LabelsAgreeWithGenerator) {
  SyntheticConfig cfg;
  cfg.n_bar = 3.5;
  cfg.n_samples = 128;
  const auto recs = generate_synthetic(cfg, 50);
  for (const auto& r : recs) EXPECT_EQ(r.true_n, draw_photon_number(cfg, r.trace.id));
}

TEST(TraceSetTypes, Validation) {
  Trace t;
  EXPECT_THROW(t.validate(), InvalidArgument);
  t.samples = {0.0, NAN};
  t.sample_period = 1e-12;
  EXPECT_THROW(t.validate(), InvalidArgument);
  t.samples = {0.0, 1.0};
  t.validate();
  TraceSet set;
  set.traces = {t, t};
  set.traces[1].samples.push_back(2.0);
  EXPECT_THROW(set.validate(), InvalidArgument);
}
