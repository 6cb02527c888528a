#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "pnr/discriminate.hpp"
#include "pnr/pca.hpp"
#include "pnr/pipeline.hpp"
#include "pnr/preprocess.hpp"

namespace pnr {

using Json = nlohmann::ordered_json;

Json to_json(const FilterReport& r);
Json to_json(const ProjectionModel& p);
Json to_json(const PoissonMixture& m);
Json to_json(const ConfidenceReport& c);
Json to_json(const Hist1D& h);
Json to_json(const Hist2D& h);

/// Explained variance and sizes only; `full` adds the mean trace and component vectors.
Json basis_to_json(const PcaBasis& basis, bool full);
PcaBasis basis_from_json(const Json& j);

PoissonMixture mixture_from_json(const Json& j);
Hist1D hist1d_from_json(const Json& j);
Hist2D hist2d_from_json(const Json& j);

/// One discrimination path: projection, mixture, confidence and histogram plot data.
Json path_to_json(const PathResult& path, const std::string& kind);

/// Self-contained run report for a pipeline run.
Json run_report(const PipelineResult& result);

/// Throws InvalidArgument if any number in the document is NaN or infinite.
void ensure_finite(const Json& j);

/// Pretty-printed, newline-terminated; identical documents give identical bytes.
std::string dump_report(const Json& j);
void write_report(const std::filesystem::path& path, const Json& j);
Json read_report(const std::filesystem::path& path);

}  // namespace pnr
