#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "pnr/errors.hpp"
#include "pnr/pca.hpp"

namespace pnr {

// ---------------------------------------------------------------------------
// Histograms

struct Hist1D {
  std::vector<double> edges;   // size bins + 1, strictly increasing
  std::vector<double> counts;  // size bins

  std::size_t bins() const noexcept { return counts.size(); }
  double width() const noexcept { return edges.size() > 1 ? edges[1] - edges[0] : 0.0; }
  double center(std::size_t i) const noexcept { return 0.5 * (edges[i] + edges[i + 1]); }
};

struct Hist2D {
  std::vector<double> x_edges;
  std::vector<double> y_edges;
  std::vector<std::uint64_t> counts;  // row-major: counts[ix * ny + iy]

  std::size_t nx() const noexcept { return x_edges.empty() ? 0 : x_edges.size() - 1; }
  std::size_t ny() const noexcept { return y_edges.empty() ? 0 : y_edges.size() - 1; }
  std::uint64_t at(std::size_t ix, std::size_t iy) const { return counts[ix * ny() + iy]; }
  std::uint64_t total() const noexcept;
};

/// Linear-interpolation quantile (the "type 7" convention) of unsorted data.
double quantile(std::span<const double> values, double q);

/// Freedman-Diaconis bin count over [min, max], at least `min_bins`, at most `max_bins`.
std::size_t freedman_diaconis_bins(std::span<const double> values, std::size_t min_bins = 60,
                                   std::size_t max_bins = 20000);

/// Equal-width histogram spanning [min, max] of the data (the maximum lands in the last bin).
Hist1D make_histogram(std::span<const double> values, std::size_t bins);

/// Histogram binned per the fitting rule (Freedman-Diaconis, >= 60 bins) unless `bins` is given.
Hist1D fit_histogram(std::span<const double> values, std::optional<std::size_t> bins = std::nullopt);

Hist2D histogram2d(std::span<const WeightPoint> points, std::size_t nx, std::size_t ny);

// ---------------------------------------------------------------------------
// Angle projection

/// Selected projection direction, degrees in [0, 180).
struct ProjectionModel {
  double angle = 0.0;
  double score = 0.0;
};

/// s = w2 sin(angle) + w1 cos(angle) for each point.
std::vector<double> project_angle(std::span<const WeightPoint> points, double angle_deg);

// ---------------------------------------------------------------------------
// Poisson-tied Gaussian mixture

/// One-dimensional Gaussian mixture whose component weights follow a Poisson law
/// truncated to n_min .. n_min + K - 1 and renormalized.
struct PoissonMixture {
  double n_bar = 1.0;
  int n_min = 1;
  int K = 1;
  std::vector<double> means;
  std::vector<double> sigmas;
  std::vector<double> amplitudes;  // A * prior(k), in histogram counts
  double A = 0.0;

  double fit_residual = 0.0;      // reduced chi-square of the binned fit
  int iterations = 0;
  std::vector<bool> unresolved;   // size K - 1: pair (k, k + 1) overlaps
  bool overlap_warning = false;

  int photon_number(int k) const noexcept { return n_min + k; }
  /// Truncated, renormalized Poisson prior over the modeled components.
  std::vector<double> priors() const;
  /// Recomputes amplitudes from (A, n_bar, n_min, K) and the overlap flags from means/sigmas.
  void refresh();
  /// Throws InvalidArgument unless sigmas > 0, means strictly monotone, sizes consistent.
  void validate() const;
  /// Index of the component with the largest posterior weight at s.
  int map_component(double s) const;
  /// Photon number of the component with the largest posterior weight at s.
  int classify(double s) const { return photon_number(map_component(s)); }
};

/// Consecutive components closer than 1.5 (sigma_k + sigma_k+1) count as unresolved.
inline constexpr double kOverlapFactor = 1.5;

struct MixtureInit {
  std::optional<double> n_bar;
  std::vector<double> means;   // optional seeds, in value units; size K when given
  std::vector<double> sigmas;  // optional seeds; size K when given
};

struct FitOptions {
  std::optional<std::size_t> bins;  // overrides Freedman-Diaconis
  int max_iterations = 300;
  double tolerance = 1e-10;  // relative chi-square change
};

/// Raised when the damped least-squares iteration does not converge; carries the last iterate.
class FitFailure : public Error {
public:
  FitFailure(const std::string& what, PoissonMixture last) : Error(what), last_(std::move(last)) {}
  const PoissonMixture& last_iterate() const noexcept { return last_; }

private:
  PoissonMixture last_;
};

PoissonMixture fit_mixture(std::span<const double> values, int K, int n_min, const MixtureInit& init = {},
                           const FitOptions& options = {});

/// Same fit on an already binned histogram (bin edges in value units).
PoissonMixture fit_mixture_binned(const Hist1D& hist, int K, int n_min, const MixtureInit& init = {},
                                  const FitOptions& options = {});

/// Initial means from the smoothed histogram's local maxima, for n increasing with s
/// (`ascending`) or decreasing with s.
std::vector<double> seed_means(const Hist1D& hist, int K, bool ascending);

/// Multinomial maximum-likelihood n_bar for observed per-component masses (truncated Poisson).
double match_nbar(std::span<const double> masses, int n_min);

/// Expected counts of the mixture in each histogram bin.
std::vector<double> mixture_bin_counts(const PoissonMixture& mix, std::span<const double> edges);

/// Mixture density sum_k prior_k N(s; mean_k, sigma_k) scaled to counts per unit s.
double mixture_density(const PoissonMixture& mix, double s);

// ---------------------------------------------------------------------------
// Confidence

struct ConfidenceReport {
  std::map<int, double> per_n;  // C_n for every modeled photon number
  double angle = 0.0;
  double fit_residual = 0.0;
  int n_max_reported = 0;  // last n with all lower consecutive pairs resolved

  /// sum_n prior(n) C_n
  double weighted_mean(const PoissonMixture& mix) const;
};

/// C_n = integral p(s|n)^2 p(n) / p(s) ds by trapezoidal quadrature.
ConfidenceReport confidence(const PoissonMixture& mix);

// ---------------------------------------------------------------------------
// Optimal angle

struct AngleSearchOptions {
  double coarse_step = 0.5;  // degrees over [0, 180)
  double fine_halfwidth = 0.5;
  double fine_step = 0.05;
  FitOptions fit;
  std::optional<double> n_bar_hint;
  // Angles whose fit residual exceeds this multiple of the best residual on the grid
  // are not eligible; a fit stuck in a poor local minimum can otherwise score high.
  double residual_gate = 3.0;
};

struct AngleSearchResult {
  ProjectionModel projection;
  PoissonMixture mixture;
  ConfidenceReport confidence;
  std::size_t failed_fits = 0;
};

/// Score of one angle: fitted mixture and prior-weighted mean confidence.
std::optional<AngleSearchResult> evaluate_angle(std::span<const WeightPoint> points, double angle_deg, int K,
                                                int n_min, const AngleSearchOptions& options = {});

/// Grid search over [0, 180) then local refinement; ties resolve toward the smaller angle.
/// Only fits passing the residual gate compete.
AngleSearchResult find_optimal_angle(std::span<const WeightPoint> points, int K, int n_min,
                                     const AngleSearchOptions& options = {});

}  // namespace pnr
