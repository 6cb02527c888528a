#include "pnr/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "pnr/errors.hpp"

namespace pnr {

SyntheticSource::SyntheticSource(SyntheticConfig cfg, std::size_t count, std::string name)
    : cfg_(cfg), count_(count), name_(std::move(name)) {
  cfg_.validate();
  if (count_ == 0) throw InvalidArgument("synthetic source needs at least one record");
  if (name_.empty()) name_ = "synthetic";
}

TraceSet SyntheticSource::read(std::size_t first, std::size_t count) const {
  if (first > count_ || count > count_ - first) throw InvalidArgument("synthetic read range exceeds record count");
  if (count == 0) {
    TraceSet empty;
    empty.source = SetSource::synthetic;
    empty.mean_photon_number_label = cfg_.n_bar;
    return empty;
  }
  return to_trace_set(generate_synthetic(cfg_, count, first), cfg_.n_bar);
}

WaveformFileSource::WaveformFileSource(const std::filesystem::path& path, double t0)
    : reader_(path), t0_(t0), name_(path.stem().string()) {}

int choose_component_count(std::optional<double> n_bar, int n_min, double tail, int cap) {
  if (!n_bar || !(*n_bar > 0.0)) return std::min(6, cap);
  // mass of n >= n_min
  double below = 0.0;
  for (int n = 0; n < n_min; ++n) below += poisson_pmf(static_cast<unsigned>(n), *n_bar);
  const double observable = 1.0 - below;
  if (!(observable > 0.0)) return 1;
  double covered = 0.0;
  for (int K = 1; K <= cap; ++K) {
    covered += poisson_pmf(static_cast<unsigned>(n_min + K - 1), *n_bar);
    if ((observable - covered) / observable < tail) return K;
  }
  return cap;
}

PathResult discriminate_points(std::vector<WeightPoint> points, int K, int n_min, const AngleSearchOptions& options,
                               std::size_t hist2d_bins) {
  PathResult out;
  out.search = find_optimal_angle(points, K, n_min, options);
  out.hist2d = histogram2d(points, hist2d_bins, hist2d_bins);
  const auto values = project_angle(points, out.search.projection.angle);
  out.projected = fit_histogram(values, options.fit.bins);
  out.points = std::move(points);
  return out;
}

namespace {

struct GroupScan {
  FilterReport filter;
  std::vector<Trace> training;
  std::vector<double> peaks;
};

GroupScan scan_group(const RecordSource& src, const PipelineOptions& opt) {
  GroupScan scan;
  for (std::size_t first = 0; first < src.size(); first += opt.chunk_size) {
    const std::size_t n = std::min(opt.chunk_size, src.size() - first);
    auto [kept, report] = filter_chunk(src.read(first, n), opt.filter);
    scan.filter += report;
    for (auto& tr : kept.traces) {
      scan.peaks.push_back(trace_peak(tr));
      if (scan.training.size() < opt.training_per_group) scan.training.push_back(std::move(tr));
    }
  }
  return scan;
}

}  // namespace

PipelineResult run_pipeline(std::span<const RecordSource* const> sources, const PipelineOptions& opt) {
  if (sources.empty()) throw InvalidArgument("run_pipeline needs at least one record source");
  if (opt.chunk_size == 0) throw InvalidArgument("chunk_size must be positive");

  // Pass 1: filter statistics, peaks for the edge threshold, PCA training subset.
  std::vector<GroupScan> scans;
  TraceSet training;
  std::vector<double> all_peaks;
  for (const RecordSource* src : sources) {
    scans.push_back(scan_group(*src, opt));
    auto& scan = scans.back();
    if (scan.filter.accepted == 0) throw EmptyResult("no trace of '" + src->name() + "' survived filtering");
    for (auto& tr : scan.training) training.traces.push_back(std::move(tr));
    scan.training.clear();
    all_peaks.insert(all_peaks.end(), scan.peaks.begin(), scan.peaks.end());
  }

  PipelineResult result;
  result.basis = fit_pca(training, opt.n_components);
  training.traces.clear();
  result.threshold_volts = resolve_threshold(opt.threshold, all_peaks);

  // Pass 2: project and extract edges for every accepted record.
  for (std::size_t g = 0; g < sources.size(); ++g) {
    const RecordSource& src = *sources[g];
    GroupResult group;
    group.name = src.name();
    group.nbar_label = src.nbar_label();
    group.filter = scans[g].filter;
    group.components = opt.components ? *opt.components : choose_component_count(group.nbar_label, opt.n_min);

    std::vector<WeightPoint> pca_points;
    std::vector<WeightPoint> edge_pts;
    std::vector<std::uint64_t> dropped;
    for (std::size_t first = 0; first < src.size(); first += opt.chunk_size) {
      const std::size_t n = std::min(opt.chunk_size, src.size() - first);
      const auto kept = filter_chunk(src.read(first, n), opt.filter).first;
      for (const auto& tr : kept.traces) pca_points.push_back(project(result.basis, tr));
      if (opt.edge_path) {
        auto e = edge_points(kept, result.threshold_volts, opt.threshold.timing_resolution);
        edge_pts.insert(edge_pts.end(), e.points.begin(), e.points.end());
        dropped.insert(dropped.end(), e.dropped_ids.begin(), e.dropped_ids.end());
      }
    }

    AngleSearchOptions angle = opt.angle;
    if (!angle.n_bar_hint) angle.n_bar_hint = group.nbar_label;
    group.pca = discriminate_points(std::move(pca_points), group.components, opt.n_min, angle, opt.hist2d_bins);
    if (opt.edge_path) {
      group.edge = discriminate_points(std::move(edge_pts), group.components, opt.n_min, angle, opt.hist2d_bins);
      group.edge->dropped_ids = std::move(dropped);
    }
    result.groups.push_back(std::move(group));
  }
  return result;
}

}  // namespace pnr
