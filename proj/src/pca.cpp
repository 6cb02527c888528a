#include "pnr/pca.hpp"

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <string>

#include "pnr/errors.hpp"

namespace pnr {
namespace {

struct TopEigen {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // matching columns
};

// Largest k eigenpairs of a symmetric matrix (lower triangle referenced).
TopEigen top_eigenpairs(Eigen::MatrixXd sym, int k) {
  const lapack_int n = static_cast<lapack_int>(sym.rows());
  lapack_int found = 0;
  Eigen::VectorXd w(n);
  Eigen::MatrixXd z(n, k);
  std::vector<lapack_int> support(2 * static_cast<std::size_t>(k));
  const lapack_int info =
      LAPACKE_dsyevr(LAPACK_COL_MAJOR, 'V', 'I', 'L', n, sym.data(), n, 0.0, 0.0, n - k + 1, n, 0.0, &found,
                     w.data(), z.data(), n, support.data());
  if (info != 0 || found != k) throw DegenerateData("symmetric eigensolver failed (info " + std::to_string(info) + ")");
  TopEigen out{Eigen::VectorXd(k), Eigen::MatrixXd(n, k)};
  for (int j = 0; j < k; ++j) {
    out.values(j) = w(k - 1 - j);
    out.vectors.col(j) = z.col(k - 1 - j);
  }
  return out;
}

void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index imax = 0;
  v.cwiseAbs().maxCoeff(&imax);
  if (v(imax) < 0.0) v = -v;
}

}  // namespace

PcaBasis fit_pca(const Eigen::MatrixXd& data, int n_components) {
  const Eigen::Index n = data.rows();
  const Eigen::Index d = data.cols();
  if (n_components < 1) throw InvalidArgument("n_components must be >= 1");
  if (n < n_components + 1)
    throw InsufficientData("PCA with " + std::to_string(n_components) + " components needs at least " +
                           std::to_string(n_components + 1) + " traces, got " + std::to_string(n));
  if (d < n_components) throw InvalidArgument("n_components exceeds the trace length");
  if (!data.allFinite()) throw InvalidArgument("PCA input contains non-finite values");

  PcaBasis basis;
  basis.training_count = static_cast<std::size_t>(n);
  basis.mean_trace = data.colwise().mean().transpose();
  const Eigen::MatrixXd centered = data.rowwise() - basis.mean_trace.transpose();
  const double dof = static_cast<double>(n - 1);
  basis.total_variance = centered.squaredNorm() / dof;
  if (!(basis.total_variance > 0.0)) throw DegenerateData("training traces have zero total variance");

  if (d <= n) {
    Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(d, d);
    cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / dof);
    auto top = top_eigenpairs(std::move(cov), n_components);
    basis.components = std::move(top.vectors);
    basis.explained_variance.assign(top.values.data(), top.values.data() + n_components);
  } else {
    // Gram route: covariance eigenvectors are X^T u / |X^T u| for Gram eigenvectors u.
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(n, n);
    gram.selfadjointView<Eigen::Lower>().rankUpdate(centered, 1.0 / dof);
    auto top = top_eigenpairs(std::move(gram), n_components);
    basis.components = centered.transpose() * top.vectors;
    for (int j = 0; j < n_components; ++j) {
      const double norm = basis.components.col(j).norm();
      if (!(norm > 0.0)) throw DegenerateData("data rank is below the requested component count");
      basis.components.col(j) /= norm;
    }
    basis.explained_variance.assign(top.values.data(), top.values.data() + n_components);
  }

  const double tiny = 1e-13 * basis.total_variance;
  for (int j = 0; j < n_components; ++j) {
    if (!(basis.explained_variance[j] > tiny))
      throw DegenerateData("data rank is below the requested component count");
    fix_sign(basis.components.col(j));
    basis.explained_variance_ratio.push_back(basis.explained_variance[j] / basis.total_variance);
  }
  return basis;
}

PcaBasis fit_pca(const TraceSet& training, int n_components) {
  if (training.empty()) throw InsufficientData("PCA training set is empty");
  const std::size_t len = training.samples_per_trace();
  Eigen::MatrixXd data(static_cast<Eigen::Index>(training.size()), static_cast<Eigen::Index>(len));
  for (std::size_t r = 0; r < training.size(); ++r) {
    const auto& s = training.traces[r].samples;
    if (s.size() != len) throw InvalidArgument("PCA training traces differ in length");
    data.row(static_cast<Eigen::Index>(r)) = Eigen::Map<const Eigen::RowVectorXd>(s.data(), static_cast<Eigen::Index>(len));
  }
  return fit_pca(data, n_components);
}

Eigen::VectorXd project_all(const PcaBasis& basis, std::span<const double> samples) {
  if (samples.size() != basis.length())
    throw InvalidArgument("trace length " + std::to_string(samples.size()) + " does not match basis length " +
                          std::to_string(basis.length()));
  const Eigen::Map<const Eigen::VectorXd> x(samples.data(), static_cast<Eigen::Index>(samples.size()));
  return basis.components.transpose() * (x - basis.mean_trace);
}

WeightPoint project(const PcaBasis& basis, const Trace& trace) {
  if (basis.size() < 2) throw InvalidArgument("projection needs a basis with at least two components");
  if (trace.size() != basis.length())
    throw InvalidArgument("trace length " + std::to_string(trace.size()) + " does not match basis length " +
                          std::to_string(basis.length()));
  const Eigen::Map<const Eigen::VectorXd> x(trace.samples.data(), static_cast<Eigen::Index>(trace.size()));
  const Eigen::VectorXd centered = x - basis.mean_trace;
  return {centered.dot(basis.components.col(0)), centered.dot(basis.components.col(1)), trace.id};
}

Eigen::VectorXd reconstruct(const PcaBasis& basis, const Eigen::VectorXd& weights, int n) {
  if (n < 0 || n > static_cast<int>(basis.size()) || weights.size() < n)
    throw InvalidArgument("reconstruct: component count out of range");
  return basis.mean_trace + basis.components.leftCols(n) * weights.head(n);
}

}  // namespace pnr
