#pragma once

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pnr/discriminate.hpp"
#include "pnr/edges.hpp"
#include "pnr/pca.hpp"
#include "pnr/preprocess.hpp"
#include "pnr/waveform.hpp"
#include "pnr/waveform_file.hpp"

namespace pnr {

/// Chunked, re-readable stream of records; one source per mean-photon-number group.
class RecordSource {
public:
  virtual ~RecordSource() = default;
  virtual std::size_t size() const = 0;
  virtual TraceSet read(std::size_t first, std::size_t count) const = 0;
  virtual std::optional<double> nbar_label() const = 0;
  virtual std::string name() const = 0;
};

class SyntheticSource final : public RecordSource {
public:
  SyntheticSource(SyntheticConfig cfg, std::size_t count, std::string name = {});

  std::size_t size() const override { return count_; }
  TraceSet read(std::size_t first, std::size_t count) const override;
  std::optional<double> nbar_label() const override { return cfg_.n_bar; }
  std::string name() const override { return name_; }

  const SyntheticConfig& config() const noexcept { return cfg_; }
  unsigned true_photon_number(std::uint64_t id) const { return draw_photon_number(cfg_, id); }

private:
  SyntheticConfig cfg_;
  std::size_t count_;
  std::string name_;
};

class WaveformFileSource final : public RecordSource {
public:
  explicit WaveformFileSource(const std::filesystem::path& path, double t0 = 0.0);

  std::size_t size() const override { return reader_.size(); }
  TraceSet read(std::size_t first, std::size_t count) const override { return reader_.read(first, count, t0_); }
  std::optional<double> nbar_label() const override { return reader_.header().label(); }
  std::string name() const override { return name_; }

private:
  WaveformReader reader_;
  double t0_;
  std::string name_;
};

struct PipelineOptions {
  FilterPolicy filter;
  std::size_t training_per_group = 1000;
  int n_components = 2;
  ThresholdPolicy threshold{ThresholdMode::fraction_of_median_peak, 0.5, 1.5e-12};
  std::optional<int> components;  // mixture K; chosen from the n_bar label when unset
  int n_min = 1;
  AngleSearchOptions angle;
  std::size_t chunk_size = 1000;
  bool edge_path = true;
  std::size_t hist2d_bins = 100;
};

/// Discrimination outcome for one feature plane.
struct PathResult {
  std::vector<WeightPoint> points;
  AngleSearchResult search;
  Hist2D hist2d;
  Hist1D projected;  // histogram the final mixture was fitted to
  std::vector<std::uint64_t> dropped_ids;
};

struct GroupResult {
  std::string name;
  std::optional<double> nbar_label;
  int components = 0;
  FilterReport filter;
  PathResult pca;
  std::optional<PathResult> edge;
};

struct PipelineResult {
  PcaBasis basis;
  double threshold_volts = 0.0;
  std::vector<GroupResult> groups;
};

/// Smallest K whose truncated Poisson tail beyond n_min + K - 1 holds less than `tail`
/// of the n >= n_min mass; 6 when no label is known.
int choose_component_count(std::optional<double> n_bar, int n_min, double tail = 1e-2, int cap = 12);

/// Optimal angle, mixture, confidence and plot data for one set of points.
PathResult discriminate_points(std::vector<WeightPoint> points, int K, int n_min, const AngleSearchOptions& options,
                               std::size_t hist2d_bins = 100);

/// Filter -> PCA (trained on the first accepted records of every group) -> projection ->
/// discrimination, plus the edge-timing path on the same accepted records.
PipelineResult run_pipeline(std::span<const RecordSource* const> sources, const PipelineOptions& options);

}  // namespace pnr
