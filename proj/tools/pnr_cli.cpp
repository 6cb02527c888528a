// pnr: photon-number resolution from detector waveforms.
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pnr/calibration.hpp"
#include "pnr/discriminate.hpp"
#include "pnr/edges.hpp"
#include "pnr/errors.hpp"
#include "pnr/pca.hpp"
#include "pnr/pipeline.hpp"
#include "pnr/preprocess.hpp"
#include "pnr/report.hpp"
#include "pnr/svg_plot.hpp"
#include "pnr/tables.hpp"
#include "pnr/waveform.hpp"
#include "pnr/waveform_file.hpp"

namespace fs = std::filesystem;
using namespace pnr;

namespace {

constexpr std::size_t kChunk = 1000;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string num(double v) { return format_number(v); }

fs::path prepare_dir(const std::string& dir) {
  fs::path p(dir);
  fs::create_directories(p);
  return p;
}

// "LEN" or "START:LEN" in samples.
void parse_window(const std::string& text, FilterPolicy& policy) {
  const auto colon = text.find(':');
  try {
    if (colon == std::string::npos) {
      policy.window_length = std::stoull(text);
    } else {
      policy.window_start = std::stoull(text.substr(0, colon));
      policy.window_length = std::stoull(text.substr(colon + 1));
    }
  } catch (const std::exception&) {
    throw UsageError("--window expects LENGTH or START:LENGTH in samples, got '" + text + "'");
  }
}

IndexRange parse_range(const std::string& text, const char* flag) {
  const auto colon = text.find(':');
  try {
    if (colon != std::string::npos) return {std::stoull(text.substr(0, colon)), std::stoull(text.substr(colon + 1))};
  } catch (const std::exception&) {
  }
  throw UsageError(std::string(flag) + " expects BEGIN:END, got '" + text + "'");
}

ThresholdPolicy make_threshold(const std::string& mode, std::optional<double> value, double resolution) {
  ThresholdPolicy t;
  if (mode == "fraction") {
    t.mode = ThresholdMode::fraction_of_median_peak;
    t.value = value.value_or(0.5);
  } else {
    t.mode = ThresholdMode::absolute_volts;
    if (!value) throw UsageError("--threshold-mode absolute needs --threshold in volts");
    t.value = *value;
  }
  t.timing_resolution = resolution;
  try {
    t.validate();
  } catch (const InvalidArgument& e) {
    throw UsageError(e.what());
  }
  return t;
}

// ---------------------------------------------------------------------------
// Plot data

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot create " + path.string());
  out << text;
}

void emit_plots(const Json& report, const fs::path& dir) {
  for (const auto& g : report.at("groups")) {
    const std::string name = g.at("name").get<std::string>();
    for (const char* key : {"pca_path", "edge_path"}) {
      if (!g.contains(key)) continue;
      const auto& path = g.at(key);
      const std::string kind = path.at("kind").get<std::string>();
      const std::string base = name + "_" + kind;

      const Hist1D proj = hist1d_from_json(path.at("projected_hist"));
      const PoissonMixture mix = mixture_from_json(path.at("mixture"));
      const auto model = mixture_bin_counts(mix, proj.edges);
      Table t;
      t.metadata = {{"angle_deg", num(path.at("projection").at("angle_deg").get<double>())}};
      t.columns = {"bin_lo", "bin_hi", "count", "model"};
      for (std::size_t i = 0; i < proj.bins(); ++i)
        t.rows.push_back({proj.edges[i], proj.edges[i + 1], proj.counts[i], model[i]});
      write_table(dir / (base + "_projected.csv"), t);

      const Hist2D h2 = hist2d_from_json(path.at("hist2d"));
      Table t2;
      t2.columns = {"x_lo", "x_hi", "y_lo", "y_hi", "count"};
      for (std::size_t ix = 0; ix < h2.nx(); ++ix)
        for (std::size_t iy = 0; iy < h2.ny(); ++iy)
          if (h2.at(ix, iy) > 0)
            t2.rows.push_back({h2.x_edges[ix], h2.x_edges[ix + 1], h2.y_edges[iy], h2.y_edges[iy + 1],
                               static_cast<double>(h2.at(ix, iy))});
      write_table(dir / (base + "_hist2d.csv"), t2);

      Table tc;
      tc.columns = {"n", "C", "resolved"};
      for (const auto& e : path.at("confidence").at("per_n"))
        tc.rows.push_back({static_cast<double>(e.at("n").get<int>()), e.at("C").get<double>(),
                           e.at("resolved").get<bool>() ? 1.0 : 0.0});
      write_table(dir / (base + "_confidence.csv"), tc);

      write_text(dir / (base + "_projected.svg"),
                 histogram_svg(proj, &mix, name + " " + kind + " projection"));
      write_text(dir / (base + "_hist2d.svg"), hist2d_svg(h2, name + " " + kind + " plane"));
    }
  }
}

// ---------------------------------------------------------------------------
// Subcommands

struct SimulateArgs {
  std::uint64_t seed = 0;
  double nbar = 1.5;
  std::size_t count = 1000;
  std::string name = "traces";
  std::string schedule = "harmonic";
  SyntheticConfig cfg;
};

int run_simulate(const SimulateArgs& a, const fs::path& dir) {
  SyntheticConfig cfg = a.cfg;
  cfg.rng_seed = a.seed;
  cfg.n_bar = a.nbar;
  cfg.schedule = a.schedule == "linear" ? ShiftSchedule::linear : ShiftSchedule::harmonic;
  cfg.validate();
  if (a.count == 0) throw UsageError("--count must be positive");

  const fs::path wave = dir / (a.name + ".pnrw");
  WaveformWriter writer(wave, cfg.sample_period, static_cast<std::uint32_t>(cfg.n_samples), cfg.n_bar);
  Table labels;
  labels.metadata = {{"nbar", num(cfg.n_bar)}, {"seed", std::to_string(cfg.rng_seed)}};
  labels.columns = {"trace_id", "true_n", "amplitude_floored"};
  std::size_t floored = 0;
  for (std::size_t first = 0; first < a.count; first += kChunk) {
    const auto recs = generate_synthetic(cfg, std::min(kChunk, a.count - first), first);
    for (const auto& r : recs) {
      writer.append(r.trace);
      labels.rows.push_back({static_cast<double>(r.trace.id), static_cast<double>(r.true_n),
                             r.amplitude_floored ? 1.0 : 0.0});
      floored += r.amplitude_floored;
    }
  }
  writer.close();
  labels.metadata["amplitude_floored_count"] = std::to_string(floored);
  write_table(dir / (a.name + "_labels.csv"), labels);
  std::cout << "wrote " << a.count << " traces to " << wave.string() << "\n";
  return 0;
}

struct FilterArgs {
  std::vector<std::string> inputs;
  std::optional<std::string> window;
  std::optional<std::string> baseline;
  FilterPolicy policy;
};

int run_filter(FilterArgs a, const fs::path& dir) {
  if (a.window) parse_window(*a.window, a.policy);
  if (a.baseline) a.policy.baseline_region = parse_range(*a.baseline, "--baseline");
  for (const auto& in : a.inputs) {
    WaveformReader reader(in);
    const auto& h = reader.header();
    try {
      a.policy.validate(h.samples_per_trace);
    } catch (const InvalidArgument& e) {
      throw UsageError(e.what());
    }
    const fs::path stem = fs::path(in).stem();
    const fs::path out = dir / (stem.string() + "_filtered.pnrw");
    WaveformWriter writer(out, h.sample_period(), static_cast<std::uint32_t>(a.policy.effective_window_length(h.samples_per_trace)),
                          h.label());
    FilterReport total;
    for (std::size_t first = 0; first < reader.size(); first += kChunk) {
      auto [kept, rep] = filter_chunk(reader.read(first, std::min(kChunk, reader.size() - first)), a.policy);
      writer.append(kept);
      total += rep;
    }
    writer.close();
    Json doc = to_json(total);
    doc["window_start_samples"] = a.policy.window_start;
    doc["window_start_seconds"] = static_cast<double>(a.policy.window_start) * h.sample_period();
    doc["window_length_samples"] = a.policy.effective_window_length(h.samples_per_trace);
    write_report(dir / (stem.string() + "_filter_report.json"), doc);
    std::cout << stem.string() << ": accepted " << total.accepted << " of " << total.total() << "\n";
    if (total.accepted == 0) throw EmptyResult("no trace of " + in + " survived filtering");
  }
  return 0;
}

struct PcaArgs {
  std::vector<std::string> inputs;
  int n_components = 2;
  std::size_t training = 1000;
};

int run_pca(const PcaArgs& a, const fs::path& dir) {
  std::vector<std::unique_ptr<WaveformReader>> readers;
  TraceSet training;
  for (const auto& in : a.inputs) {
    readers.push_back(std::make_unique<WaveformReader>(in));
    auto part = readers.back()->read(0, std::min(a.training, readers.back()->size()));
    for (auto& t : part.traces) training.traces.push_back(std::move(t));
  }
  const PcaBasis basis = fit_pca(training, a.n_components);
  training.traces.clear();
  write_report(dir / "basis.json", basis_to_json(basis, true));
  for (std::size_t i = 0; i < readers.size(); ++i) {
    const auto& r = *readers[i];
    std::vector<WeightPoint> pts;
    for (std::size_t first = 0; first < r.size(); first += kChunk)
      for (const auto& t : r.read(first, std::min(kChunk, r.size() - first)).traces) pts.push_back(project(basis, t));
    std::map<std::string, std::string> meta{{"kind", "pca"}};
    if (auto lbl = r.header().label()) meta["nbar"] = num(*lbl);
    write_table(dir / (fs::path(a.inputs[i]).stem().string() + "_weights.csv"), weight_table(pts, meta));
  }
  std::cout << "PCA basis from " << basis.training_count << " traces; explained variance ratio";
  for (double v : basis.explained_variance_ratio) std::cout << " " << num(v);
  std::cout << "\n";
  return 0;
}

struct DiscriminateArgs {
  std::string input;
  std::optional<int> components;
  int n_min = 1;
  std::optional<double> nbar;
  double angle_step = 0.5;
  std::optional<std::size_t> bins;
  std::size_t hist2d_bins = 100;
};

int run_discriminate(const DiscriminateArgs& a, const fs::path& dir) {
  const Table table = read_table(fs::path(a.input));
  auto points = points_from_table(table);
  const std::string kind = table.metadata.count("kind") ? table.metadata.at("kind") : "pca";
  std::optional<double> nbar = a.nbar ? a.nbar : metadata_number(table, "nbar");

  AngleSearchOptions opt;
  opt.coarse_step = a.angle_step;
  opt.fine_halfwidth = std::min(0.5, a.angle_step);
  opt.fine_step = std::min(0.05, a.angle_step / 10.0);
  opt.fit.bins = a.bins;
  opt.n_bar_hint = nbar;
  const int K = a.components ? *a.components : choose_component_count(nbar, a.n_min);
  const PathResult path = discriminate_points(std::move(points), K, a.n_min, opt, a.hist2d_bins);

  std::string name = fs::path(a.input).stem().string();
  for (const char* suffix : {"_weights", "_edges"})
    if (name.size() > std::strlen(suffix) && name.ends_with(suffix)) name.resize(name.size() - std::strlen(suffix));

  Json group{{"name", name}, {"nbar_label", nbar ? Json(*nbar) : Json(nullptr)}, {"components", K}};
  group[kind == "edge" ? "edge_path" : "pca_path"] = path_to_json(path, kind == "edge" ? "edge" : "pca");
  Json doc{{"format", "pnr-run-report"}, {"version", 1}, {"groups", Json::array({group})}};
  if (auto thr = metadata_number(table, "threshold_volts")) doc["edge_threshold_volts"] = *thr;
  const fs::path out = dir / (fs::path(a.input).stem().string() + "_report.json");
  write_report(out, doc);

  const auto& c = path.search.confidence;
  std::cout << kind << " path: angle " << num(path.search.projection.angle) << " deg, n_bar " << num(path.search.mixture.n_bar)
            << ", resolved through n = " << c.n_max_reported << "\n";
  for (const auto& [n, v] : c.per_n) std::cout << "  C_" << n << " = " << num(v) << "\n";
  return 0;
}

struct EdgesArgs {
  std::vector<std::string> inputs;
  std::string mode = "fraction";
  std::optional<double> threshold;
  double resolution = 1.5e-12;
  double t0 = 0.0;
  std::optional<std::string> sweep;
  std::optional<int> components;
  int n_min = 1;
  std::optional<double> nbar;
  double angle_step = 0.5;
  std::optional<std::size_t> bins;
};

int run_edges(const EdgesArgs& a, const fs::path& dir) {
  std::vector<std::unique_ptr<WaveformReader>> readers;
  std::vector<double> peaks;
  for (const auto& in : a.inputs) {
    readers.push_back(std::make_unique<WaveformReader>(in));
    const auto& r = *readers.back();
    for (std::size_t first = 0; first < r.size(); first += kChunk)
      for (const auto& t : r.read(first, std::min(kChunk, r.size() - first), a.t0).traces) peaks.push_back(trace_peak(t));
  }
  if (peaks.empty()) throw EmptyResult("no traces in the input files");

  auto collect = [&](const WaveformReader& r, double thr) {
    EdgePointSet all;
    all.threshold_volts = thr;
    for (std::size_t first = 0; first < r.size(); first += kChunk) {
      auto e = edge_points(r.read(first, std::min(kChunk, r.size() - first), a.t0), thr, a.resolution);
      all.points.insert(all.points.end(), e.points.begin(), e.points.end());
      all.dropped_ids.insert(all.dropped_ids.end(), e.dropped_ids.begin(), e.dropped_ids.end());
    }
    return all;
  };

  if (a.sweep) {
    // FROM:TO:STEP in threshold units of the chosen mode; scored by the angle search.
    double lo, hi, step;
    if (std::sscanf(a.sweep->c_str(), "%lf:%lf:%lf", &lo, &hi, &step) != 3 || !(step > 0.0) || !(hi >= lo))
      throw UsageError("--sweep expects FROM:TO:STEP with STEP > 0 and TO >= FROM");
    AngleSearchOptions opt;
    opt.coarse_step = a.angle_step;
    opt.fine_halfwidth = std::min(0.5, a.angle_step);
    opt.fine_step = std::min(0.05, a.angle_step / 10.0);
    opt.fit.bins = a.bins;
    for (std::size_t i = 0; i < readers.size(); ++i) {
      const auto& r = *readers[i];
      const std::optional<double> nbar = a.nbar ? a.nbar : r.header().label();
      opt.n_bar_hint = nbar;
      const int K = a.components ? *a.components : choose_component_count(nbar, a.n_min);
      Table t;
      t.metadata = {{"mode", a.mode}, {"components", std::to_string(K)}};
      t.columns = {"threshold", "threshold_volts", "score", "angle_deg", "n_max_reported", "dropped"};
      const auto steps = static_cast<int>(std::floor((hi - lo) / step + 1e-9));
      for (int s = 0; s <= steps; ++s) {
        const double value = lo + s * step;
        const double thr = resolve_threshold(make_threshold(a.mode, value, a.resolution), peaks);
        auto e = collect(r, thr);
        double score = 0.0, angle = 0.0, nmax = 0.0;
        try {
          const auto res = find_optimal_angle(e.points, K, a.n_min, opt);
          score = res.projection.score;
          angle = res.projection.angle;
          nmax = res.confidence.n_max_reported;
        } catch (const std::exception& ex) {
          std::cerr << "threshold " << num(value) << ": " << ex.what() << "\n";
          score = std::nan("");
        }
        t.rows.push_back({value, thr, score, angle, nmax, static_cast<double>(e.dropped_ids.size())});
      }
      write_table(dir / (fs::path(a.inputs[i]).stem().string() + "_threshold_sweep.csv"), t);
    }
    return 0;
  }

  const double thr = resolve_threshold(make_threshold(a.mode, a.threshold, a.resolution), peaks);
  for (std::size_t i = 0; i < readers.size(); ++i) {
    const auto e = collect(*readers[i], thr);
    std::vector<EdgePair> pairs;
    for (const auto& p : e.points) pairs.push_back({p.w1, p.w2, p.trace_id});
    std::map<std::string, std::string> meta{{"kind", "edge"},
                                            {"threshold_volts", num(thr)},
                                            {"timing_resolution", num(a.resolution)},
                                            {"dropped", std::to_string(e.dropped_ids.size())}};
    if (auto lbl = readers[i]->header().label()) meta["nbar"] = num(*lbl);
    write_table(dir / (fs::path(a.inputs[i]).stem().string() + "_edges.csv"), edge_table(pairs, meta));
    std::cout << fs::path(a.inputs[i]).stem().string() << ": " << pairs.size() << " edge pairs, "
              << e.dropped_ids.size() << " without crossing, threshold " << num(thr) << " V\n";
  }
  return 0;
}

int run_report_cmd(const std::vector<std::string>& inputs, const std::vector<std::string>& filter_reports,
                   const fs::path& dir) {
  // Merge per-path documents into groups keyed by name, in first-seen order.
  Json merged{{"format", "pnr-run-report"}, {"version", 1}};
  Json groups = Json::array();
  for (const auto& in : inputs) {
    const Json doc = read_report(in);
    if (doc.value("format", "") != "pnr-run-report") throw ParseError(in + ": not a run report", 0);
    if (doc.contains("pca_basis")) merged["pca_basis"] = doc["pca_basis"];
    if (doc.contains("edge_threshold_volts")) merged["edge_threshold_volts"] = doc["edge_threshold_volts"];
    for (const auto& g : doc.at("groups")) {
      Json* target = nullptr;
      for (auto& existing : groups)
        if (existing.at("name") == g.at("name")) target = &existing;
      if (!target) {
        groups.push_back(g);
        continue;
      }
      for (auto it = g.begin(); it != g.end(); ++it)
        if (!target->contains(it.key())) (*target)[it.key()] = it.value();
    }
  }
  for (const auto& fr : filter_reports) {
    std::string name = fs::path(fr).stem().string();
    const std::string suffix = "_filter_report";
    if (name.ends_with(suffix)) name.resize(name.size() - suffix.size());
    const Json doc = read_report(fr);
    bool matched = false;
    for (auto& g : groups)
      if (g.at("name") == name || g.at("name") == name + "_filtered") {
        g["filter"] = doc;
        matched = true;
      }
    if (!matched) throw UsageError("filter report " + fr + " matches no group");
  }
  merged["groups"] = groups;
  write_report(dir / "run_report.json", merged);
  emit_plots(merged, dir);
  std::cout << "wrote " << (dir / "run_report.json").string() << "\n";
  return 0;
}

struct RunArgs {
  std::vector<std::string> inputs;
  std::optional<std::string> window;
  std::optional<int> components;
  int n_min = 1;
  double angle_step = 0.5;
  std::optional<std::size_t> bins;
  std::string mode = "fraction";
  std::optional<double> threshold;
  double resolution = 1.5e-12;
  bool no_edges = false;
};

int run_run(const RunArgs& a, const fs::path& dir) {
  PipelineOptions opt;
  if (a.window) parse_window(*a.window, opt.filter);
  opt.components = a.components;
  opt.n_min = a.n_min;
  opt.angle.coarse_step = a.angle_step;
  opt.angle.fine_halfwidth = std::min(0.5, a.angle_step);
  opt.angle.fine_step = std::min(0.05, a.angle_step / 10.0);
  opt.angle.fit.bins = a.bins;
  opt.threshold = make_threshold(a.mode, a.threshold, a.resolution);
  opt.edge_path = !a.no_edges;
  std::vector<std::unique_ptr<WaveformFileSource>> owned;
  std::vector<const RecordSource*> sources;
  for (const auto& in : a.inputs) {
    owned.push_back(std::make_unique<WaveformFileSource>(in));
    sources.push_back(owned.back().get());
  }
  const auto result = run_pipeline(sources, opt);
  const Json doc = run_report(result);
  write_report(dir / "run_report.json", doc);
  emit_plots(doc, dir);
  for (const auto& g : result.groups) {
    std::cout << g.name << ": pca angle " << num(g.pca.search.projection.angle) << " deg, resolved through n = "
              << g.pca.search.confidence.n_max_reported;
    if (g.edge)
      std::cout << "; edge angle " << num(g.edge->search.projection.angle) << " deg, resolved through n = "
                << g.edge->search.confidence.n_max_reported;
    std::cout << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Photon-number resolution from detector waveforms"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string output_dir = ".";
  app.add_option("--output-dir", output_dir, "Directory for all outputs")->capture_default_str();

  // simulate
  SimulateArgs sim;
  auto* c_sim = app.add_subcommand("simulate", "Generate synthetic detector traces with known photon numbers");
  c_sim->add_option("--seed", sim.seed, "Random seed")->required();
  c_sim->add_option("--nbar", sim.nbar, "Mean photon number")->capture_default_str();
  c_sim->add_option("--count", sim.count, "Number of records")->capture_default_str();
  c_sim->add_option("--name", sim.name, "Output file stem")->capture_default_str();
  c_sim->add_option("--schedule", sim.schedule, "Per-photon shift schedule")
      ->check(CLI::IsMember({"harmonic", "linear"}))
      ->capture_default_str();
  c_sim->add_option("--amp-base", sim.cfg.amp_base, "Single-photon amplitude (V)")->capture_default_str();
  c_sim->add_option("--amp-step", sim.cfg.amp_step, "Amplitude decrement per photon (V)")->capture_default_str();
  c_sim->add_option("--t-rise-base", sim.cfg.t_rise_base, "Single-photon onset (s)")->capture_default_str();
  c_sim->add_option("--t-rise-step", sim.cfg.t_rise_step, "Onset advance per photon (s)")->capture_default_str();
  c_sim->add_option("--tau-rise", sim.cfg.tau_rise, "Rise time constant (s)")->capture_default_str();
  c_sim->add_option("--tau-fall", sim.cfg.tau_fall, "Fall time constant (s)")->capture_default_str();
  c_sim->add_option("--jitter", sim.cfg.jitter_sigma, "Timing jitter sigma (s)")->capture_default_str();
  c_sim->add_option("--noise", sim.cfg.noise_sigma, "Voltage noise sigma (V)")->capture_default_str();
  c_sim->add_option("--sample-period", sim.cfg.sample_period, "Sample period (s)")->capture_default_str();
  c_sim->add_option("--samples", sim.cfg.n_samples, "Samples per trace")->capture_default_str();

  // filter
  FilterArgs flt;
  auto* c_flt = app.add_subcommand("filter", "Reject zero, multi-peak and wrong-delay traces; window the rest");
  c_flt->add_option("inputs", flt.inputs, "Waveform files")->required()->check(CLI::ExistingFile);
  c_flt->add_option("--window", flt.window, "LENGTH or START:LENGTH in samples");
  c_flt->add_option("--baseline", flt.baseline, "Baseline sample range BEGIN:END");
  c_flt->add_option("--zero-k", flt.policy.zero_trace_k, "Zero-trace threshold in noise sigmas")->capture_default_str();
  c_flt->add_option("--delay-min", flt.policy.delay_min, "Earliest accepted half-height time (s)")->capture_default_str();
  c_flt->add_option("--delay-max", flt.policy.delay_max, "Latest accepted half-height time (s)")->capture_default_str();

  // pca
  PcaArgs pca;
  auto* c_pca = app.add_subcommand("pca", "Fit a PCA basis and write per-trace weights");
  c_pca->add_option("inputs", pca.inputs, "Filtered waveform files")->required()->check(CLI::ExistingFile);
  c_pca->add_option("--n-components", pca.n_components, "Principal components to keep")->capture_default_str();
  c_pca->add_option("--training", pca.training, "Training traces taken from the start of each file")
      ->capture_default_str();

  // discriminate
  DiscriminateArgs dis;
  auto* c_dis = app.add_subcommand("discriminate", "Optimal projection, Poisson mixture fit and confidence");
  c_dis->add_option("input", dis.input, "Weight or edge table")->required()->check(CLI::ExistingFile);
  c_dis->add_option("--components", dis.components, "Mixture components (default: from n_bar)");
  c_dis->add_option("--nmin", dis.n_min, "Smallest modeled photon number")->capture_default_str();
  c_dis->add_option("--nbar", dis.nbar, "Mean photon number (default: table label)");
  c_dis->add_option("--angle-step", dis.angle_step, "Coarse angle grid step (deg)")->capture_default_str();
  c_dis->add_option("--bins", dis.bins, "Histogram bins for the fit (default: Freedman-Diaconis)");

  // edges
  EdgesArgs edg;
  auto* c_edg = app.add_subcommand("edges", "Extract rising/falling threshold crossings");
  c_edg->add_option("inputs", edg.inputs, "Filtered waveform files")->required()->check(CLI::ExistingFile);
  c_edg->add_option("--threshold-mode", edg.mode, "fraction (of median peak) or absolute (volts)")
      ->check(CLI::IsMember({"fraction", "absolute"}))
      ->capture_default_str();
  auto* o_thr = c_edg->add_option("--threshold", edg.threshold, "Threshold value (default 0.5 in fraction mode)");
  c_edg->add_option("--resolution", edg.resolution, "Timing resolution (s), 0 for continuous")->capture_default_str();
  c_edg->add_option("--t0", edg.t0, "Trigger-relative time of the first sample (s)")->capture_default_str();
  auto* o_sweep = c_edg->add_option("--sweep", edg.sweep, "Threshold sweep FROM:TO:STEP; writes score vs threshold");
  o_sweep->excludes(o_thr);
  c_edg->add_option("--components", edg.components, "Mixture components for sweep scoring");
  c_edg->add_option("--nmin", edg.n_min, "Smallest modeled photon number")->capture_default_str();
  c_edg->add_option("--nbar", edg.nbar, "Mean photon number for sweep scoring (default: file label)");
  c_edg->add_option("--angle-step", edg.angle_step, "Coarse angle grid step for sweep scoring (deg)")
      ->capture_default_str();
  c_edg->add_option("--bins", edg.bins, "Histogram bins for sweep fits");

  // report
  std::vector<std::string> rep_inputs, rep_filters;
  auto* c_rep = app.add_subcommand("report", "Merge path reports into a run report with plot data");
  c_rep->add_option("inputs", rep_inputs, "Reports written by discriminate")->required()->check(CLI::ExistingFile);
  c_rep->add_option("--filter-report", rep_filters, "Filter reports to attach")->check(CLI::ExistingFile);

  // run
  RunArgs run;
  auto* c_run = app.add_subcommand("run", "Whole pipeline on raw waveform files, streaming");
  c_run->add_option("inputs", run.inputs, "Waveform files, one per mean photon number")->required()->check(CLI::ExistingFile);
  c_run->add_option("--window", run.window, "LENGTH or START:LENGTH in samples");
  c_run->add_option("--components", run.components, "Mixture components (default: from each file's n_bar)");
  c_run->add_option("--nmin", run.n_min, "Smallest modeled photon number")->capture_default_str();
  c_run->add_option("--angle-step", run.angle_step, "Coarse angle grid step (deg)")->capture_default_str();
  c_run->add_option("--bins", run.bins, "Histogram bins for the fit");
  c_run->add_option("--threshold-mode", run.mode, "fraction or absolute")
      ->check(CLI::IsMember({"fraction", "absolute"}))
      ->capture_default_str();
  c_run->add_option("--threshold", run.threshold, "Edge threshold value");
  c_run->add_option("--resolution", run.resolution, "Edge timing resolution (s)")->capture_default_str();
  c_run->add_flag("--no-edges", run.no_edges, "Skip the edge-timing path");

  // calibrate
  double cr = 0.0, rr = 0.0;
  auto* c_cal = app.add_subcommand("calibrate", "Mean photon number from count and repetition rates");
  c_cal->add_option("--cr", cr, "Detector count rate (1/s)")->required();
  c_cal->add_option("--rr", rr, "Pulse repetition rate (1/s)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    for (const auto* step : {&dis.angle_step, &edg.angle_step, &run.angle_step})
      if (!(*step > 0.0) || *step > 180.0) throw UsageError("--angle-step must be in (0, 180]");
    if (dis.bins && *dis.bins < 2) throw UsageError("--bins must be at least 2");
    if (dis.components && *dis.components < 1) throw UsageError("--components must be at least 1");

    if (c_cal->parsed()) {
      std::printf("%.15g\n", calibrate_nbar(cr, rr));
      return 0;
    }
    const fs::path dir = prepare_dir(output_dir);
    if (c_sim->parsed()) return run_simulate(sim, dir);
    if (c_flt->parsed()) return run_filter(flt, dir);
    if (c_pca->parsed()) return run_pca(pca, dir);
    if (c_dis->parsed()) return run_discriminate(dis, dir);
    if (c_edg->parsed()) return run_edges(edg, dir);
    if (c_rep->parsed()) return run_report_cmd(rep_inputs, rep_filters, dir);
    if (c_run->parsed()) return run_run(run, dir);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
