#include "pnr/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "pnr/errors.hpp"

namespace pnr {

Json to_json(const FilterReport& r) {
  return Json{{"accepted", r.accepted},
              {"rejected_zero", r.rejected_zero},
              {"rejected_multipeak", r.rejected_multipeak},
              {"rejected_delay", r.rejected_delay},
              {"baseline_sigma", r.baseline_sigma}};
}

Json to_json(const ProjectionModel& p) { return Json{{"angle_deg", p.angle}, {"score", p.score}}; }

Json to_json(const PoissonMixture& m) {
  Json unresolved = Json::array();
  for (bool b : m.unresolved) unresolved.push_back(b);
  return Json{{"n_bar", m.n_bar},         {"n_min", m.n_min},
              {"K", m.K},                 {"A", m.A},
              {"means", m.means},         {"sigmas", m.sigmas},
              {"amplitudes", m.amplitudes}, {"fit_residual", m.fit_residual},
              {"iterations", m.iterations}, {"unresolved_pairs", unresolved},
              {"overlap_warning", m.overlap_warning}};
}

Json to_json(const ConfidenceReport& c) {
  Json per_n = Json::array();
  for (const auto& [n, v] : c.per_n) per_n.push_back(Json{{"n", n}, {"C", v}, {"resolved", n <= c.n_max_reported}});
  return Json{{"angle_deg", c.angle}, {"fit_residual", c.fit_residual}, {"n_max_reported", c.n_max_reported},
              {"per_n", per_n}};
}

Json to_json(const Hist1D& h) { return Json{{"edges", h.edges}, {"counts", h.counts}}; }

Json to_json(const Hist2D& h) {
  return Json{{"x_edges", h.x_edges}, {"y_edges", h.y_edges}, {"nx", h.nx()}, {"ny", h.ny()}, {"counts", h.counts}};
}

Json basis_to_json(const PcaBasis& b, bool full) {
  Json j{{"length", b.length()},
         {"n_components", b.size()},
         {"training_count", b.training_count},
         {"total_variance", b.total_variance},
         {"explained_variance", b.explained_variance},
         {"explained_variance_ratio", b.explained_variance_ratio}};
  if (full) {
    j["mean_trace"] = std::vector<double>(b.mean_trace.data(), b.mean_trace.data() + b.mean_trace.size());
    Json comps = Json::array();
    for (Eigen::Index c = 0; c < b.components.cols(); ++c) {
      const Eigen::VectorXd col = b.components.col(c);
      comps.push_back(std::vector<double>(col.data(), col.data() + col.size()));
    }
    j["components"] = comps;
  }
  return j;
}

PcaBasis basis_from_json(const Json& j) {
  PcaBasis b;
  try {
    const auto mean = j.at("mean_trace").get<std::vector<double>>();
    const auto comps = j.at("components").get<std::vector<std::vector<double>>>();
    b.mean_trace = Eigen::Map<const Eigen::VectorXd>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    b.components.resize(static_cast<Eigen::Index>(mean.size()), static_cast<Eigen::Index>(comps.size()));
    for (std::size_t c = 0; c < comps.size(); ++c) {
      if (comps[c].size() != mean.size()) throw InvalidArgument("basis component length mismatch");
      b.components.col(static_cast<Eigen::Index>(c)) =
          Eigen::Map<const Eigen::VectorXd>(comps[c].data(), static_cast<Eigen::Index>(mean.size()));
    }
    b.explained_variance = j.at("explained_variance").get<std::vector<double>>();
    b.explained_variance_ratio = j.at("explained_variance_ratio").get<std::vector<double>>();
    b.total_variance = j.at("total_variance").get<double>();
    b.training_count = j.at("training_count").get<std::size_t>();
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed PCA basis document: ") + e.what());
  }
  return b;
}

PoissonMixture mixture_from_json(const Json& j) {
  PoissonMixture m;
  try {
    m.n_bar = j.at("n_bar").get<double>();
    m.n_min = j.at("n_min").get<int>();
    m.K = j.at("K").get<int>();
    m.A = j.at("A").get<double>();
    m.means = j.at("means").get<std::vector<double>>();
    m.sigmas = j.at("sigmas").get<std::vector<double>>();
    m.fit_residual = j.at("fit_residual").get<double>();
    m.iterations = j.value("iterations", 0);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("malformed mixture document: ") + e.what());
  }
  m.validate();
  m.refresh();
  return m;
}

Hist1D hist1d_from_json(const Json& j) {
  Hist1D h;
  h.edges = j.at("edges").get<std::vector<double>>();
  h.counts = j.at("counts").get<std::vector<double>>();
  if (h.edges.size() != h.counts.size() + 1) throw InvalidArgument("histogram edges/counts mismatch");
  return h;
}

Hist2D hist2d_from_json(const Json& j) {
  Hist2D h;
  h.x_edges = j.at("x_edges").get<std::vector<double>>();
  h.y_edges = j.at("y_edges").get<std::vector<double>>();
  h.counts = j.at("counts").get<std::vector<std::uint64_t>>();
  if (h.counts.size() != h.nx() * h.ny()) throw InvalidArgument("2-D histogram shape mismatch");
  return h;
}

Json path_to_json(const PathResult& path, const std::string& kind) {
  Json j{{"kind", kind},
         {"points", path.points.size()},
         {"dropped", path.dropped_ids.size()},
         {"projection", to_json(path.search.projection)},
         {"mixture", to_json(path.search.mixture)},
         {"confidence", to_json(path.search.confidence)},
         {"failed_angle_fits", path.search.failed_fits},
         {"hist2d", to_json(path.hist2d)},
         {"projected_hist", to_json(path.projected)}};
  j["projected_hist"]["model_counts"] = mixture_bin_counts(path.search.mixture, path.projected.edges);
  return j;
}

Json run_report(const PipelineResult& result) {
  Json groups = Json::array();
  for (const auto& g : result.groups) {
    Json gj{{"name", g.name},
            {"nbar_label", g.nbar_label ? Json(*g.nbar_label) : Json(nullptr)},
            {"components", g.components},
            {"filter", to_json(g.filter)},
            {"pca_path", path_to_json(g.pca, "pca")}};
    if (g.edge) gj["edge_path"] = path_to_json(*g.edge, "edge");
    groups.push_back(std::move(gj));
  }
  Json j{{"format", "pnr-run-report"},
         {"version", 1},
         {"pca_basis", basis_to_json(result.basis, false)},
         {"edge_threshold_volts", result.threshold_volts},
         {"groups", groups}};
  ensure_finite(j);
  return j;
}

void ensure_finite(const Json& j) {
  if (j.is_number_float() && !std::isfinite(j.get<double>())) throw InvalidArgument("report contains a non-finite number");
  if (j.is_structured())
    for (const auto& v : j) ensure_finite(v);
}

std::string dump_report(const Json& j) { return j.dump(1) + "\n"; }

void write_report(const std::filesystem::path& path, const Json& j) {
  ensure_finite(j);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot create " + path.string());
  out << dump_report(j);
  if (!out) throw Error("failed writing " + path.string());
}

Json read_report(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  try {
    return Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), e.byte);
  }
}

}  // namespace pnr
