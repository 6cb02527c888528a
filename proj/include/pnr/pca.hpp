#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "pnr/waveform.hpp"

namespace pnr {

/// Orthonormal principal-component basis of a set of equal-length traces.
/// `components` holds one unit vector per column, ordered by decreasing variance;
/// each column's largest-magnitude entry is positive.
struct PcaBasis {
  Eigen::VectorXd mean_trace;
  Eigen::MatrixXd components;
  std::vector<double> explained_variance;        // V^2, sample-covariance convention (N - 1)
  std::vector<double> explained_variance_ratio;  // share of total variance
  double total_variance = 0.0;
  std::size_t training_count = 0;

  std::size_t length() const noexcept { return static_cast<std::size_t>(mean_trace.size()); }
  std::size_t size() const noexcept { return static_cast<std::size_t>(components.cols()); }
};

/// Coordinates of one trace in a two-dimensional feature plane: principal-component
/// weights (w1, w2) on the PCA path, or (t_rise, t_fall) on the edge-timing path.
struct WeightPoint {
  double w1 = 0.0;
  double w2 = 0.0;
  std::uint64_t trace_id = 0;
};

/// Rows are observations. Throws InsufficientData / DegenerateData.
PcaBasis fit_pca(const Eigen::MatrixXd& data, int n_components);
PcaBasis fit_pca(const TraceSet& training, int n_components);

/// Weights <x - mean, c_i> for every basis component.
Eigen::VectorXd project_all(const PcaBasis& basis, std::span<const double> samples);

/// (w1, w2) of a trace; the basis needs at least two components.
WeightPoint project(const PcaBasis& basis, const Trace& trace);

/// mean + sum_i w_i c_i using the first `n` components.
Eigen::VectorXd reconstruct(const PcaBasis& basis, const Eigen::VectorXd& weights, int n);

}  // namespace pnr
