#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "pnr/discriminate.hpp"
#include "pnr/waveform.hpp"

using namespace pnr;

namespace {

PoissonMixture mixture(double nbar, int n_min, std::vector<double> means, std::vector<double> sigmas) {
  PoissonMixture m;
  m.n_bar = nbar;
  m.n_min = n_min;
  m.K = static_cast<int>(means.size());
  m.A = 1.0;
  m.means = std::move(means);
  m.sigmas = std::move(sigmas);
  m.refresh();
  return m;
}

double normal_density(double s, double mu, double sigma) {
  const double u = (s - mu) / sigma;
  return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2 * M_PI));
}

// C_n = E_{s ~ p(s|n)} [p(s|n) p(n) / p(s)]: mean and standard error from `draws` samples.
std::pair<double, double> monte_carlo(const PoissonMixture& m, int k, std::size_t draws, std::uint64_t seed) {
  const auto q = m.priors();
  std::mt19937_64 g(seed);
  std::normal_distribution<double> z(m.means[k], m.sigmas[k]);
  double sum = 0, sum2 = 0;
  for (std::size_t i = 0; i < draws; ++i) {
    const double s = z(g);
    double ps = 0;
    for (int j = 0; j < m.K; ++j) ps += q[j] * normal_density(s, m.means[j], m.sigmas[j]);
    const double f = q[k] * normal_density(s, m.means[k], m.sigmas[k]) / ps;
    sum += f;
    sum2 += f * f;
  }
  const double mean = sum / draws;
  return {mean, std::sqrt((sum2 / draws - mean * mean) / draws)};
}

}  // namespace

TEST(Confidence, IdenticalComponentsGivePrior) {
  const auto m = mixture(2.2, 1, {0, 1e-9, 2e-9}, {0.3, 0.3, 0.3});
  // Means must be strictly monotone; a 1e-9 shift on a 0.3 sigma is invisible to 1e-6.
  const auto c = confidence(m);
  const auto q = m.priors();
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(c.per_n.at(k + 1), q[k], 1e-6);
}

TEST(Confidence, FarSeparationIsCertain) {
  const auto m = mixture(2.0, 1, {0, 20}, {1, 1});
  const auto q = m.priors();
  ASSERT_NEAR(q[0], q[1], 1e-12);  // n_bar = 2 gives equal priors for n = 1, 2
  const auto c = confidence(m);
  EXPECT_GT(c.per_n.at(1), 1 - 1e-6);
  EXPECT_GT(c.per_n.at(2), 1 - 1e-6);
  EXPECT_EQ(c.n_max_reported, 2);
}

TEST(Confidence, MatchesMonteCarlo) {
  std::mt19937_64 g(77);
  std::uniform_real_distribution<double> u(0, 1);
  for (int trial = 0; trial < 4; ++trial) {
    std::vector<double> means{0}, sigmas;
    for (int k = 0; k < 3; ++k) sigmas.push_back(0.2 + 0.3 * u(g));
    for (int k = 1; k < 3; ++k) means.push_back(means.back() + 0.3 + 1.2 * u(g));
    const auto m = mixture(0.5 + 3 * u(g), 1, means, sigmas);
    const auto c = confidence(m);
    for (int k = 0; k < 3; ++k) {
      const auto [mc, se] = monte_carlo(m, k, 200000, 100 + trial * 10 + k);
      EXPECT_NEAR(c.per_n.at(k + 1), mc, 3 * se + 1e-9) << "trial " << trial << " k " << k;
    }
  }
}

TEST(Confidence, BoundsAndWeightedSum) {
  const auto m = mixture(3.5, 1, {0, 1, 1.7, 2.2, 2.6}, {0.25, 0.25, 0.25, 0.25, 0.25});
  const auto c = confidence(m);
  const auto q = m.priors();
  double weighted = 0;
  for (int k = 0; k < 5; ++k) {
    const double v = c.per_n.at(k + 1);
    EXPECT_GE(v, 0.0);
    EXPECT_LE(v, 1.0);
    weighted += q[k] * v;
  }
  EXPECT_LE(weighted, 1.0);
  EXPECT_NEAR(c.weighted_mean(m), weighted, 1e-15);
}

TEST(Confidence, LimitsInSeparation) {
  double prev = 0;
  for (double gap : {1e-6, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
    const auto m = mixture(1.5, 1, {0, gap, 2 * gap}, {1, 1, 1});
    const auto c = confidence(m);
    const double w = c.weighted_mean(m);
    EXPECT_GE(w, prev - 1e-9);
    prev = w;
    if (gap < 1e-3) {
      const auto q = m.priors();
      for (int k = 0; k < 3; ++k) EXPECT_NEAR(c.per_n.at(k + 1), q[k], 1e-5);
    }
  }
  EXPECT_GT(prev, 1 - 1e-6);
}

TEST(Confidence, DecreasesWithShrinkingGaps) {
  // Equal sigmas, gaps shrinking with n: C_n nonincreasing from the prior mode on. The last
  // component has a neighbour on one side only and is left out.
  for (double nbar : {1.5, 3.5}) {
    std::vector<double> means{0};
    for (int k = 1; k < 7; ++k) means.push_back(means.back() + 2.0 / k);
    const auto m = mixture(nbar, 1, means, std::vector<double>(7, 0.3));
    const auto c = confidence(m);
    const auto q = m.priors();
    const int mode = static_cast<int>(std::max_element(q.begin(), q.end()) - q.begin()) + 1;
    for (int n = mode; n < 6; ++n) EXPECT_GE(c.per_n.at(n), c.per_n.at(n + 1)) << "nbar " << nbar << " n " << n;
  }
}

TEST(Confidence, ResolvedPrefix) {
  const auto m = mixture(2.0, 1, {0, 2, 4, 4.5, 8}, {0.3, 0.3, 0.3, 0.3, 0.3});
  const auto c = confidence(m);
  EXPECT_EQ(c.n_max_reported, 3);  // pair (3, 4) overlaps; 5 is not reported although isolated
  EXPECT_EQ(c.per_n.size(), 5u);
}

TEST(Confidence, RejectsDegenerateSigma) {
  auto m = mixture(2.0, 1, {0, 1}, {0.3, 0.3});
  m.sigmas[1] = 0.0;
  EXPECT_THROW(confidence(m), InvalidArgument);
  m.sigmas[1] = -1.0;
  EXPECT_THROW(confidence(m), InvalidArgument);
}
