#include <algorithm>
#include <cmath>
#include <numeric>

#include "pnr/discriminate.hpp"

namespace pnr {
namespace {

std::pair<double, double> padded_range(std::span<const double> values) {
  const auto [lo_it, hi_it] = std::minmax_element(values.begin(), values.end());
  double lo = *lo_it;
  double hi = *hi_it;
  if (!(hi > lo)) {
    const double pad = lo != 0.0 ? 0.5 * std::abs(lo) : 0.5;
    lo -= pad;
    hi += pad;
  }
  return {lo, hi};
}

std::size_t bin_index(double v, double lo, double hi, std::size_t bins) {
  const double pos = (v - lo) / (hi - lo) * static_cast<double>(bins);
  if (!(pos > 0.0)) return 0;
  const auto i = static_cast<std::size_t>(pos);
  return std::min(i, bins - 1);
}

}  // namespace

std::uint64_t Hist2D::total() const noexcept { return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0}); }

double quantile(std::span<const double> values, double q) {
  if (values.empty()) throw InvalidArgument("quantile of empty data");
  if (!(q >= 0.0 && q <= 1.0)) throw InvalidArgument("quantile level must lie in [0, 1]");
  std::vector<double> v(values.begin(), values.end());
  const double h = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(h));
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(lo), v.end());
  const double a = v[lo];
  if (lo + 1 >= v.size()) return a;
  const double b = *std::min_element(v.begin() + static_cast<std::ptrdiff_t>(lo) + 1, v.end());
  return a + (h - static_cast<double>(lo)) * (b - a);
}

std::size_t freedman_diaconis_bins(std::span<const double> values, std::size_t min_bins, std::size_t max_bins) {
  if (values.empty()) throw InvalidArgument("cannot bin empty data");
  const auto [lo, hi] = padded_range(values);
  const double iqr = quantile(values, 0.75) - quantile(values, 0.25);
  if (!(iqr > 0.0)) return min_bins;
  const double h = 2.0 * iqr * std::cbrt(1.0 / static_cast<double>(values.size()));
  const double raw = std::ceil((hi - lo) / h);
  if (!(raw < static_cast<double>(max_bins))) return max_bins;
  return std::max(min_bins, static_cast<std::size_t>(raw));
}

Hist1D make_histogram(std::span<const double> values, std::size_t bins) {
  if (values.empty()) throw InvalidArgument("cannot bin empty data");
  if (bins == 0) throw InvalidArgument("histogram needs at least one bin");
  const auto [lo, hi] = padded_range(values);
  Hist1D h;
  h.edges.resize(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i)
    h.edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  h.edges.back() = hi;
  h.counts.assign(bins, 0.0);
  for (double v : values) h.counts[bin_index(v, lo, hi, bins)] += 1.0;
  return h;
}

Hist1D fit_histogram(std::span<const double> values, std::optional<std::size_t> bins) {
  return make_histogram(values, bins ? *bins : freedman_diaconis_bins(values));
}

Hist2D histogram2d(std::span<const WeightPoint> points, std::size_t nx, std::size_t ny) {
  if (points.empty()) throw InvalidArgument("cannot bin empty data");
  if (nx == 0 || ny == 0) throw InvalidArgument("histogram needs at least one bin per axis");
  std::vector<double> xs, ys;
  xs.reserve(points.size());
  ys.reserve(points.size());
  for (const auto& p : points) {
    xs.push_back(p.w1);
    ys.push_back(p.w2);
  }
  const auto [xlo, xhi] = padded_range(xs);
  const auto [ylo, yhi] = padded_range(ys);
  Hist2D h;
  h.x_edges.resize(nx + 1);
  h.y_edges.resize(ny + 1);
  for (std::size_t i = 0; i <= nx; ++i) h.x_edges[i] = xlo + (xhi - xlo) * static_cast<double>(i) / static_cast<double>(nx);
  for (std::size_t i = 0; i <= ny; ++i) h.y_edges[i] = ylo + (yhi - ylo) * static_cast<double>(i) / static_cast<double>(ny);
  h.x_edges.back() = xhi;
  h.y_edges.back() = yhi;
  h.counts.assign(nx * ny, 0);
  for (std::size_t k = 0; k < xs.size(); ++k)
    ++h.counts[bin_index(xs[k], xlo, xhi, nx) * ny + bin_index(ys[k], ylo, yhi, ny)];
  return h;
}

}  // namespace pnr
