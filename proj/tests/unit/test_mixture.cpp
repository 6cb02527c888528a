#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

#include "pnr/discriminate.hpp"
#include "pnr/waveform.hpp"

using namespace pnr;

namespace {

// Draws from sum_k q_k N(means[k], sigmas[k]) with q the truncated Poisson prior.
std::vector<double> sample_mixture(double nbar, int n_min, const std::vector<double>& means,
                                   const std::vector<double>& sigmas, std::size_t count, std::uint32_t seed) {
  std::vector<double> w;
  for (std::size_t k = 0; k < means.size(); ++k) w.push_back(poisson_pmf(static_cast<unsigned>(n_min + k), nbar));
  std::mt19937_64 g(seed);
  std::discrete_distribution<int> pick(w.begin(), w.end());
  std::normal_distribution<double> z;
  std::vector<double> out(count);
  for (auto& v : out) {
    const int k = pick(g);
    v = means[k] + sigmas[k] * z(g);
  }
  return out;
}

}  // namespace

TEST(FitMixture, RecoversTwoComponentModel) {
  const auto v = sample_mixture(1.5, 1, {-1, 1}, {0.2, 0.2}, 100000, 42);
  const auto m = fit_mixture(v, 2, 1);
  ASSERT_EQ(m.K, 2);
  EXPECT_NEAR(m.means[0], -1.0, 0.01);
  EXPECT_NEAR(m.means[1], 1.0, 0.01);
  EXPECT_NEAR(m.sigmas[0], 0.2, 0.01);
  EXPECT_NEAR(m.sigmas[1], 0.2, 0.01);
  EXPECT_NEAR(m.n_bar, 1.5, 0.1);
  EXPECT_NEAR(m.A, 100000.0, 1000.0);
  EXPECT_FALSE(m.overlap_warning);
  EXPECT_LT(m.fit_residual, 2.0);
  // Tied amplitudes are fully determined by (A, n_bar, n_min, K).
  const auto q = m.priors();
  for (int k = 0; k < 2; ++k) EXPECT_NEAR(m.amplitudes[k], m.A * q[k], 1e-9 * m.A);
}

TEST(FitMixture, DescendingOrientationFound) {
  // Photon number increasing toward smaller s. With K = 3 a truncated Poisson prior is
  // mirror-symmetric (n_bar -> 6 / n_bar reverses the weights), so K = 4 is the smallest
  // case where the orientation is identifiable.
  const auto v = sample_mixture(1.2, 1, {4.5, 3, 1.5, 0}, {0.2, 0.15, 0.15, 0.15}, 60000, 7);
  const auto m = fit_mixture(v, 4, 1);
  EXPECT_NEAR(m.means[0], 4.5, 0.02);
  EXPECT_NEAR(m.means[1], 3.0, 0.02);
  EXPECT_NEAR(m.means[3], 0.0, 0.03);
  EXPECT_NEAR(m.n_bar, 1.2, 0.1);
}

TEST(FitMixture, SingleComponentIsGaussianFit) {
  std::mt19937_64 g(9);
  std::normal_distribution<double> z(2.5, 0.7);
  std::vector<double> v(20000);
  for (auto& x : v) x = z(g);
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / v.size();
  double ss = 0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / v.size());
  const auto m = fit_mixture(v, 1, 1);
  EXPECT_NEAR(m.means[0], mean, 3 * sd / std::sqrt(v.size()));
  EXPECT_NEAR(m.sigmas[0], sd, 3 * sd / std::sqrt(2.0 * v.size()));
  EXPECT_DOUBLE_EQ(m.priors()[0], 1.0);
}

TEST(FitMixture, ScaleEquivariant) {
  const auto v = sample_mixture(2.5, 1, {0, 1, 1.8, 2.4}, {0.2, 0.2, 0.18, 0.18}, 30000, 11);
  const auto a = fit_mixture(v, 4, 1);
  for (double c : {1e-9, 0.37, 1e6}) {
    std::vector<double> w(v);
    for (auto& x : w) x *= c;
    const auto b = fit_mixture(w, 4, 1);
    EXPECT_NEAR(b.n_bar, a.n_bar, 1e-6);
    for (int k = 0; k < 4; ++k) {
      EXPECT_NEAR(b.means[k], c * a.means[k], 1e-6 * c);
      EXPECT_NEAR(b.sigmas[k], c * a.sigmas[k], 1e-6 * c);
    }
    const auto ca = confidence(a);
    const auto cb = confidence(b);
    for (const auto& [n, val] : ca.per_n) EXPECT_NEAR(cb.per_n.at(n), val, 1e-6);
  }
}

TEST(FitMixture, SeedsAndNbarHint) {
  const auto v = sample_mixture(1.5, 2, {0, 1, 1.7}, {0.15, 0.15, 0.15}, 30000, 13);
  MixtureInit init;
  init.n_bar = 1.5;
  init.means = {0.05, 0.95, 1.6};
  init.sigmas = {0.1, 0.1, 0.1};
  const auto m = fit_mixture(v, 3, 2, init);
  EXPECT_EQ(m.n_min, 2);
  EXPECT_EQ(m.photon_number(0), 2);
  EXPECT_NEAR(m.means[0], 0.0, 0.02);
  EXPECT_NEAR(m.means[2], 1.7, 0.03);
  EXPECT_NEAR(m.n_bar, 1.5, 0.15);
}

TEST(FitMixture, NonConvergenceCarriesLastIterate) {
  const auto v = sample_mixture(1.5, 1, {-1, 1}, {0.2, 0.2}, 5000, 3);
  FitOptions opt;
  opt.max_iterations = 1;
  try {
    fit_mixture(v, 2, 1, {}, opt);
    FAIL() << "expected FitFailure";
  } catch (const FitFailure& e) {
    EXPECT_EQ(e.last_iterate().K, 2);
    EXPECT_EQ(e.last_iterate().means.size(), 2u);
  }
}

TEST(FitMixture, Preconditions) {
  const std::vector<double> few(19, 1.0);
  EXPECT_THROW(fit_mixture(few, 2, 1), InvalidArgument);
  EXPECT_THROW(fit_mixture(std::vector<double>(100, 1.0), 0, 1), InvalidArgument);
  std::vector<double> bad(100, 1.0);
  bad[3] = NAN;
  EXPECT_THROW(fit_mixture(bad, 1, 1), InvalidArgument);
  MixtureInit init;
  init.means = {0.0};
  const auto v = sample_mixture(1.5, 1, {-1, 1}, {0.2, 0.2}, 1000, 3);
  EXPECT_THROW(fit_mixture(v, 2, 1, init), InvalidArgument);
}

TEST(FitMixture, OverlapFlaggedNotFatal) {
  // Components one sigma apart cannot be resolved.
  const auto v = sample_mixture(1.5, 1, {0, 0.2, 0.4}, {0.2, 0.2, 0.2}, 20000, 5);
  MixtureInit init;
  init.means = {0, 0.2, 0.4};
  init.sigmas = {0.2, 0.2, 0.2};
  try {
    const auto m = fit_mixture(v, 3, 1, init);
    EXPECT_TRUE(m.overlap_warning);
  } catch (const FitFailure& e) {
    EXPECT_TRUE(e.last_iterate().overlap_warning);
  }
}

TEST(PoissonMixtureType, RefreshAndValidate) {
  PoissonMixture m;
  m.n_bar = 2.0;
  m.n_min = 1;
  m.K = 3;
  m.A = 100;
  m.means = {0, 1, 1.4};
  m.sigmas = {0.1, 0.1, 0.2};
  m.refresh();
  EXPECT_FALSE(m.unresolved[0]);
  EXPECT_TRUE(m.unresolved[1]);  // 0.4 < 1.5 * 0.3
  EXPECT_TRUE(m.overlap_warning);
  const auto q = m.priors();
  const double z = poisson_pmf(1, 2) + poisson_pmf(2, 2) + poisson_pmf(3, 2);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(q[k], poisson_pmf(k + 1, 2) / z, 1e-14);
  EXPECT_NEAR(m.amplitudes[1], 100 * q[1], 1e-12);
  m.validate();
  m.means = {0, 1, 0.5};
  EXPECT_THROW(m.validate(), InvalidArgument);
  m.means = {0, 1, 1.5};
  m.sigmas[1] = 0;
  EXPECT_THROW(m.validate(), InvalidArgument);
}

TEST(PoissonMixtureType, MapClassification) {
  PoissonMixture m;
  m.n_bar = 1.5;
  m.K = 2;
  m.A = 1;
  m.means = {0, 1};
  m.sigmas = {0.1, 0.1};
  m.refresh();
  EXPECT_EQ(m.classify(-0.2), 1);
  EXPECT_EQ(m.classify(1.3), 2);
  // Boundary shifts toward the less likely component.
  EXPECT_EQ(m.classify(0.5), 1);
}

TEST(MatchNbar, InvertsTruncatedPoisson) {
  for (double nbar : {0.5, 1.5, 3.5}) {
    std::vector<double> masses;
    for (int n = 1; n <= 8; ++n) masses.push_back(1000 * poisson_pmf(n, nbar));
    EXPECT_NEAR(match_nbar(masses, 1), nbar, 1e-6) << nbar;
  }
}

TEST(MixtureCounts, BinCountsAndDensityAgree) {
  PoissonMixture m;
  m.n_bar = 2.0;
  m.K = 3;
  m.A = 5000;
  m.means = {0, 1, 1.8};
  m.sigmas = {0.2, 0.2, 0.25};
  m.refresh();
  std::vector<double> edges;
  for (int i = 0; i <= 400; ++i) edges.push_back(-2 + i * 0.015);
  const auto c = mixture_bin_counts(m, edges);
  EXPECT_NEAR(std::accumulate(c.begin(), c.end(), 0.0), 5000.0, 1e-6);
  // Simpson's rule per bin as the oracle.
  for (int i : {50, 133, 200, 251}) {
    const double a = edges[i], b = edges[i + 1];
    const double simpson =
        (mixture_density(m, a) + 4 * mixture_density(m, 0.5 * (a + b)) + mixture_density(m, b)) * (b - a) / 6;
    EXPECT_NEAR(c[i], simpson, 1e-4 * c[i] + 1e-12);
  }
}
