#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pnr/edges.hpp"
#include "pnr/pca.hpp"

namespace pnr {

/// ASCII comma-separated table. Header lines start with '#'; the last header line names
/// the columns. Header lines of the form "# key=value" carry metadata.
struct Table {
  std::map<std::string, std::string> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;

  std::size_t column(const std::string& name) const;  // throws InvalidArgument when absent
};

/// 15 significant digits.
std::string format_number(double value);

void write_table(std::ostream& out, const Table& table);
void write_table(const std::filesystem::path& path, const Table& table);
Table read_table(std::istream& in, const std::string& source_name = "<stream>");
Table read_table(const std::filesystem::path& path);

Table weight_table(const std::vector<WeightPoint>& points, const std::map<std::string, std::string>& metadata = {});
Table edge_table(const std::vector<EdgePair>& edges, const std::map<std::string, std::string>& metadata = {});

/// Reads (trace_id, w1, w2) or (trace_id, t_rise, t_fall) tables as weight points.
std::vector<WeightPoint> points_from_table(const Table& table);

std::optional<double> metadata_number(const Table& table, const std::string& key);

}  // namespace pnr
