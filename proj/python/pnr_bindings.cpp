#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <memory>

#include "pnr/calibration.hpp"
#include "pnr/discriminate.hpp"
#include "pnr/edges.hpp"
#include "pnr/errors.hpp"
#include "pnr/pca.hpp"
#include "pnr/pipeline.hpp"
#include "pnr/preprocess.hpp"
#include "pnr/report.hpp"
#include "pnr/tables.hpp"
#include "pnr/waveform.hpp"
#include "pnr/waveform_file.hpp"

namespace py = pybind11;
using namespace pnr;

namespace {

using Rows = py::array_t<double, py::array::c_style | py::array::forcecast>;

TraceSet to_set(const Rows& samples, double sample_period, double t0) {
  if (samples.ndim() != 2) throw InvalidArgument("samples must be a 2-D array (traces x samples)");
  const auto r = samples.unchecked<2>();
  TraceSet set;
  for (py::ssize_t i = 0; i < r.shape(0); ++i) {
    Trace t;
    t.sample_period = sample_period;
    t.t0 = t0;
    t.id = static_cast<std::uint64_t>(i);
    t.samples.assign(r.data(i, 0), r.data(i, 0) + r.shape(1));
    set.traces.push_back(std::move(t));
  }
  return set;
}

py::array_t<double> to_array(const TraceSet& set) {
  const auto n = static_cast<py::ssize_t>(set.size());
  const auto len = static_cast<py::ssize_t>(set.samples_per_trace());
  py::array_t<double> out({n, len});
  auto w = out.mutable_unchecked<2>();
  for (py::ssize_t i = 0; i < n; ++i)
    for (py::ssize_t k = 0; k < len; ++k) w(i, k) = set.traces[static_cast<std::size_t>(i)].samples[static_cast<std::size_t>(k)];
  return out;
}

std::vector<WeightPoint> to_points(const std::vector<double>& w1, const std::vector<double>& w2) {
  if (w1.size() != w2.size()) throw InvalidArgument("w1 and w2 must have equal length");
  std::vector<WeightPoint> pts(w1.size());
  for (std::size_t i = 0; i < w1.size(); ++i) pts[i] = {w1[i], w2[i], i};
  return pts;
}

// Compound results cross the boundary as JSON text; the Python package decodes them.
std::string search_json(const AngleSearchResult& r) {
  Json j{{"projection", to_json(r.projection)},
         {"mixture", to_json(r.mixture)},
         {"confidence", to_json(r.confidence)},
         {"failed_fits", r.failed_fits}};
  return j.dump();
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Photon-number discrimination of detector pulse records";

  auto base = py::register_exception<Error>(m, "PnrError", PyExc_RuntimeError);
  py::register_exception<EmptyResult>(m, "EmptyResult", base.ptr());
  py::register_exception<InsufficientData>(m, "InsufficientData", base.ptr());
  py::register_exception<DegenerateData>(m, "DegenerateData", base.ptr());
  py::register_exception<NoCrossing>(m, "NoCrossing", base.ptr());
  py::register_exception<SaturationError>(m, "SaturationError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<FitFailure>(m, "FitFailure", base.ptr());

  m.def("calibrate_nbar", &calibrate_nbar, py::arg("count_rate"), py::arg("repetition_rate"));
  m.def("expected_count_rate", &expected_count_rate, py::arg("n_bar"), py::arg("repetition_rate"));
  m.def("poisson_pmf", &poisson_pmf, py::arg("n"), py::arg("n_bar"));

  py::enum_<ShiftSchedule>(m, "ShiftSchedule")
      .value("linear", ShiftSchedule::linear)
      .value("harmonic", ShiftSchedule::harmonic);

  py::class_<SyntheticConfig>(m, "SyntheticConfig")
      .def(py::init<>())
      .def_readwrite("n_bar", &SyntheticConfig::n_bar)
      .def_readwrite("amp_base", &SyntheticConfig::amp_base)
      .def_readwrite("amp_step", &SyntheticConfig::amp_step)
      .def_readwrite("t_rise_base", &SyntheticConfig::t_rise_base)
      .def_readwrite("t_rise_step", &SyntheticConfig::t_rise_step)
      .def_readwrite("tau_rise", &SyntheticConfig::tau_rise)
      .def_readwrite("tau_fall", &SyntheticConfig::tau_fall)
      .def_readwrite("jitter_sigma", &SyntheticConfig::jitter_sigma)
      .def_readwrite("noise_sigma", &SyntheticConfig::noise_sigma)
      .def_readwrite("sample_period", &SyntheticConfig::sample_period)
      .def_readwrite("n_samples", &SyntheticConfig::n_samples)
      .def_readwrite("rng_seed", &SyntheticConfig::rng_seed)
      .def_readwrite("schedule", &SyntheticConfig::schedule)
      .def("validate", &SyntheticConfig::validate);

  m.def(
      "generate_synthetic",
      [](const SyntheticConfig& cfg, std::size_t count, std::uint64_t first_index) {
        const auto recs = generate_synthetic(cfg, count, first_index);
        std::vector<unsigned> labels;
        for (const auto& r : recs) labels.push_back(r.true_n);
        return py::make_tuple(to_array(to_trace_set(recs, cfg.n_bar)), py::array(py::cast(labels)));
      },
      py::arg("config"), py::arg("count"), py::arg("first_index") = 0,
      "Synthetic records as (samples[count, n_samples], true photon numbers).");

  py::class_<FilterPolicy>(m, "FilterPolicy")
      .def(py::init<>())
      .def_readwrite("window_start", &FilterPolicy::window_start)
      .def_readwrite("window_length", &FilterPolicy::window_length)
      .def_property(
          "baseline_region",
          [](const FilterPolicy& p) { return py::make_tuple(p.baseline_region.begin, p.baseline_region.end); },
          [](FilterPolicy& p, std::pair<std::size_t, std::size_t> r) { p.baseline_region = {r.first, r.second}; })
      .def_readwrite("zero_trace_k", &FilterPolicy::zero_trace_k)
      .def_readwrite("delay_min", &FilterPolicy::delay_min)
      .def_readwrite("delay_max", &FilterPolicy::delay_max)
      .def_readwrite("smoothing_width", &FilterPolicy::smoothing_width);

  m.def(
      "classify",
      [](const Rows& samples, double sample_period, const FilterPolicy& policy, double t0) {
        const auto set = to_set(samples, sample_period, t0);
        std::vector<std::string> out;
        for (const auto& t : set.traces) out.emplace_back(to_string(classify_trace(t, policy)));
        return out;
      },
      py::arg("samples"), py::arg("sample_period"), py::arg("policy") = FilterPolicy{}, py::arg("t0") = 0.0);

  m.def(
      "filter_traces",
      [](const Rows& samples, double sample_period, const FilterPolicy& policy, double t0) {
        const auto [kept, report] = window_and_align(to_set(samples, sample_period, t0), policy);
        std::vector<std::uint64_t> ids;
        for (const auto& t : kept.traces) ids.push_back(t.id);
        return py::make_tuple(to_array(kept), py::array(py::cast(ids)), to_json(report).dump());
      },
      py::arg("samples"), py::arg("sample_period"), py::arg("policy") = FilterPolicy{}, py::arg("t0") = 0.0);

  m.def(
      "fit_pca",
      [](const Eigen::MatrixXd& data, int n_components) {
        const auto b = fit_pca(data, n_components);
        py::dict d;
        d["mean"] = b.mean_trace;
        d["components"] = b.components;
        d["explained_variance"] = b.explained_variance;
        d["explained_variance_ratio"] = b.explained_variance_ratio;
        d["total_variance"] = b.total_variance;
        return d;
      },
      py::arg("data"), py::arg("n_components"));

  m.def(
      "fit_mixture",
      [](const std::vector<double>& values, int K, int n_min, std::optional<std::size_t> bins) {
        FitOptions opt;
        opt.bins = bins;
        const auto mix = fit_mixture(values, K, n_min, {}, opt);
        Json j{{"mixture", to_json(mix)}, {"confidence", to_json(confidence(mix))}};
        return j.dump();
      },
      py::arg("values"), py::arg("K"), py::arg("n_min") = 1, py::arg("bins") = py::none());

  m.def(
      "confidence",
      [](double n_bar, int n_min, const std::vector<double>& means, const std::vector<double>& sigmas) {
        PoissonMixture mix;
        mix.n_bar = n_bar;
        mix.n_min = n_min;
        mix.K = static_cast<int>(means.size());
        mix.A = 1.0;
        mix.means = means;
        mix.sigmas = sigmas;
        mix.validate();
        mix.refresh();
        return confidence(mix).per_n;
      },
      py::arg("n_bar"), py::arg("n_min"), py::arg("means"), py::arg("sigmas"),
      "C_n for a Poisson-tied mixture given its component means and sigmas.");

  m.def(
      "find_optimal_angle",
      [](const std::vector<double>& w1, const std::vector<double>& w2, int K, int n_min, double coarse_step) {
        AngleSearchOptions opt;
        opt.coarse_step = coarse_step;
        return search_json(find_optimal_angle(to_points(w1, w2), K, n_min, opt));
      },
      py::arg("w1"), py::arg("w2"), py::arg("K"), py::arg("n_min") = 1, py::arg("coarse_step") = 0.5);

  m.def(
      "extract_edges",
      [](const std::vector<double>& samples, double sample_period, double threshold, double resolution, double t0) {
        Trace t;
        t.samples = samples;
        t.sample_period = sample_period;
        t.t0 = t0;
        const auto e = extract_edges(t, threshold, resolution);
        return py::make_tuple(e.t_rise, e.t_fall);
      },
      py::arg("samples"), py::arg("sample_period"), py::arg("threshold"), py::arg("resolution") = 0.0,
      py::arg("t0") = 0.0);

  m.def("quantize_time", &quantize_time, py::arg("t"), py::arg("resolution"));
  m.def("choose_component_count", &choose_component_count, py::arg("n_bar"), py::arg("n_min") = 1,
        py::arg("tail") = 1e-2, py::arg("cap") = 12);

  m.def(
      "run_synthetic",
      [](const std::vector<SyntheticConfig>& configs, std::size_t count, std::size_t training_per_group,
         double coarse_step, bool edge_path) {
        std::vector<std::unique_ptr<SyntheticSource>> sources;
        std::vector<const RecordSource*> ptrs;
        for (const auto& cfg : configs) {
          sources.push_back(std::make_unique<SyntheticSource>(cfg, count, "nbar_" + format_number(cfg.n_bar)));
          ptrs.push_back(sources.back().get());
        }
        PipelineOptions opt;
        opt.training_per_group = training_per_group;
        opt.angle.coarse_step = coarse_step;
        opt.edge_path = edge_path;
        py::gil_scoped_release release;
        return dump_report(run_report(run_pipeline(ptrs, opt)));
      },
      py::arg("configs"), py::arg("count"), py::arg("training_per_group") = 1000, py::arg("coarse_step") = 0.5,
      py::arg("edge_path") = true, "Whole pipeline on synthetic groups; returns the run report as JSON text.");

  m.def(
      "read_waveform_file",
      [](const std::string& path) {
        const auto set = read_waveform_file(path);
        return py::make_tuple(to_array(set), set.empty() ? 0.0 : set.traces.front().sample_period,
                              set.mean_photon_number_label);
      },
      py::arg("path"));

  m.def(
      "write_waveform_file",
      [](const std::string& path, const Rows& samples, double sample_period, std::optional<double> nbar_label) {
        auto set = to_set(samples, sample_period, 0.0);
        set.mean_photon_number_label = nbar_label;
        write_waveform_file(path, set);
      },
      py::arg("path"), py::arg("samples"), py::arg("sample_period"), py::arg("nbar_label") = py::none());
}
