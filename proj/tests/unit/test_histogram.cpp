#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>

#include "pnr/discriminate.hpp"

using namespace pnr;

namespace {

// Type-7 quantile on a fully sorted copy.
double sorted_quantile(std::vector<double> v, double q) {
  std::sort(v.begin(), v.end());
  const double h = q * (v.size() - 1);
  const auto i = static_cast<std::size_t>(std::floor(h));
  if (i + 1 >= v.size()) return v.back();
  return v[i] + (h - i) * (v[i + 1] - v[i]);
}

std::vector<double> normal_values(std::size_t n, std::uint32_t seed) {
  std::mt19937_64 g(seed);
  std::normal_distribution<double> z;
  std::vector<double> v(n);
  for (auto& x : v) x = z(g);
  return v;
}

}  // namespace

TEST(Quantile, KnownValues) {
  const std::vector<double> v{3, 1, 4, 1, 5, 9, 2, 6};
  EXPECT_DOUBLE_EQ(quantile(v, 0.0), 1.0);
  EXPECT_DOUBLE_EQ(quantile(v, 1.0), 9.0);
  EXPECT_DOUBLE_EQ(quantile(v, 0.5), 3.5);
  EXPECT_DOUBLE_EQ(quantile(v, 0.25), 1.75);
  EXPECT_THROW(quantile(std::vector<double>{}, 0.5), InvalidArgument);
  EXPECT_THROW(quantile(v, 1.5), InvalidArgument);
}

TEST(Quantile, MatchesSortedOracle) {
  const auto v = normal_values(1001, 3);
  for (double q : {0.01, 0.1, 0.25, 0.5, 0.75, 0.9, 0.999}) EXPECT_DOUBLE_EQ(quantile(v, q), sorted_quantile(v, q));
}

TEST(FreedmanDiaconis, RuleAndClamps) {
  const auto v = normal_values(100000, 4);
  const double iqr = sorted_quantile(v, 0.75) - sorted_quantile(v, 0.25);
  const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
  const double expect = std::ceil((*hi - *lo) / (2 * iqr * std::cbrt(1.0 / v.size())));
  EXPECT_EQ(freedman_diaconis_bins(v), static_cast<std::size_t>(std::max(60.0, expect)));
  EXPECT_EQ(freedman_diaconis_bins(normal_values(50, 5)), 60u);
  EXPECT_EQ(freedman_diaconis_bins(v, 60, 80), 80u);
  EXPECT_EQ(freedman_diaconis_bins(std::vector<double>(10, 2.0)), 60u);
}

TEST(MakeHistogram, Invariants) {
  const auto v = normal_values(5000, 6);
  const auto h = make_histogram(v, 73);
  ASSERT_EQ(h.edges.size(), 74u);
  ASSERT_EQ(h.bins(), 73u);
  for (std::size_t i = 1; i < h.edges.size(); ++i) EXPECT_GT(h.edges[i], h.edges[i - 1]);
  EXPECT_DOUBLE_EQ(std::accumulate(h.counts.begin(), h.counts.end(), 0.0), 5000.0);
  EXPECT_DOUBLE_EQ(h.edges.front(), *std::min_element(v.begin(), v.end()));
  EXPECT_DOUBLE_EQ(h.edges.back(), *std::max_element(v.begin(), v.end()));
  EXPECT_GE(h.counts.back(), 1.0);
  EXPECT_GE(h.counts.front(), 1.0);
}

TEST(MakeHistogram, ConstantDataGetsPaddedRange) {
  const auto h = make_histogram(std::vector<double>(7, 3.0), 4);
  EXPECT_LT(h.edges.front(), 3.0);
  EXPECT_GT(h.edges.back(), 3.0);
  EXPECT_DOUBLE_EQ(std::accumulate(h.counts.begin(), h.counts.end(), 0.0), 7.0);
}

TEST(Histogram2D, TotalsAndShape) {
  std::mt19937_64 g(1);
  std::normal_distribution<double> z;
  std::vector<WeightPoint> pts(2345);
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i] = {z(g), 3 * z(g), i};
  const auto h = histogram2d(pts, 40, 25);
  EXPECT_EQ(h.nx(), 40u);
  EXPECT_EQ(h.ny(), 25u);
  EXPECT_EQ(h.counts.size(), 1000u);
  EXPECT_EQ(h.total(), pts.size());
  // Point-by-point oracle for a few cells.
  for (std::size_t ix : {0u, 17u, 39u})
    for (std::size_t iy : {0u, 12u, 24u}) {
      std::uint64_t c = 0;
      for (const auto& p : pts) {
        const bool inx = p.w1 >= h.x_edges[ix] && (p.w1 < h.x_edges[ix + 1] || (ix == 39 && p.w1 <= h.x_edges[40]));
        const bool iny = p.w2 >= h.y_edges[iy] && (p.w2 < h.y_edges[iy + 1] || (iy == 24 && p.w2 <= h.y_edges[25]));
        c += inx && iny;
      }
      EXPECT_EQ(h.at(ix, iy), c);
    }
  EXPECT_THROW(histogram2d(std::vector<WeightPoint>{}, 3, 3), InvalidArgument);
}

TEST(ProjectAngle, CaptionFormula) {
  const std::vector<WeightPoint> x{{1, 0, 0}};
  const std::vector<WeightPoint> y{{0, 1, 0}};
  EXPECT_DOUBLE_EQ(project_angle(x, 0.0)[0], 1.0);
  EXPECT_NEAR(project_angle(x, 138.0)[0], std::cos(138.0 * std::numbers::pi / 180.0), 1e-15);
  EXPECT_NEAR(project_angle(x, 138.0)[0], -0.74314, 1e-5);
  EXPECT_NEAR(project_angle(y, 90.0)[0], 1.0, 1e-15);
}

TEST(ProjectAngle, HalfTurnFlipsSign) {
  std::mt19937_64 g(2);
  std::normal_distribution<double> z;
  std::vector<WeightPoint> pts(100);
  for (auto& p : pts) p = {z(g), z(g), 0};
  for (double a : {0.0, 17.5, 90.0, 138.0}) {
    const auto s = project_angle(pts, a);
    const auto t = project_angle(pts, a + 180.0);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_NEAR(s[i], -t[i], 1e-12);
  }
}
