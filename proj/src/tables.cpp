#include "pnr/tables.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pnr/errors.hpp"

namespace pnr {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

}  // namespace

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i)
    if (columns[i] == name) return i;
  throw InvalidArgument("table has no column '" + name + "'");
}

std::string format_number(double value) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.15g", value);
  return buf;
}

void write_table(std::ostream& out, const Table& table) {
  for (const auto& [k, v] : table.metadata) out << "# " << k << '=' << v << '\n';
  out << "# ";
  for (std::size_t i = 0; i < table.columns.size(); ++i) out << (i ? "," : "") << table.columns[i];
  out << '\n';
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) out << (i ? "," : "") << format_number(row[i]);
    out << '\n';
  }
}

void write_table(const std::filesystem::path& path, const Table& table) {
  std::ofstream out(path);
  if (!out) throw Error("cannot create " + path.string());
  write_table(out, table);
  if (!out) throw Error("failed writing " + path.string());
}

Table read_table(std::istream& in, const std::string& source_name) {
  Table t;
  std::string line;
  std::string last_header;
  std::uint64_t offset = 0;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::uint64_t line_offset = offset;
    offset += line.size() + 1;
    const auto body = trim(line);
    if (body.empty()) continue;
    if (body[0] == '#') {
      const auto h = trim(body.substr(1));
      const auto eq = h.find('=');
      if (eq != std::string::npos && h.find(',') == std::string::npos) {
        t.metadata[trim(h.substr(0, eq))] = trim(h.substr(eq + 1));
      } else {
        last_header = h;
      }
      continue;
    }
    if (t.columns.empty()) {
      if (last_header.empty()) throw ParseError(source_name + ": data before the column header", line_offset);
      t.columns = split(last_header);
    }
    const auto cells = split(body);
    if (cells.size() != t.columns.size())
      throw ParseError(source_name + ": line " + std::to_string(line_no) + " has " + std::to_string(cells.size()) +
                           " fields, expected " + std::to_string(t.columns.size()),
                       line_offset);
    std::vector<double> row;
    row.reserve(cells.size());
    for (const auto& c : cells) {
      char* end = nullptr;
      const double v = std::strtod(c.c_str(), &end);
      if (c.empty() || end != c.c_str() + c.size() || !std::isfinite(v))
        throw ParseError(source_name + ": line " + std::to_string(line_no) + ": bad number '" + c + "'", line_offset);
      row.push_back(v);
    }
    t.rows.push_back(std::move(row));
  }
  if (t.columns.empty() && !last_header.empty()) t.columns = split(last_header);
  return t;
}

Table read_table(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  return read_table(in, path.string());
}

Table weight_table(const std::vector<WeightPoint>& points, const std::map<std::string, std::string>& metadata) {
  Table t;
  t.metadata = metadata;
  t.columns = {"trace_id", "w1", "w2"};
  t.rows.reserve(points.size());
  for (const auto& p : points) t.rows.push_back({static_cast<double>(p.trace_id), p.w1, p.w2});
  return t;
}

Table edge_table(const std::vector<EdgePair>& edges, const std::map<std::string, std::string>& metadata) {
  Table t;
  t.metadata = metadata;
  t.columns = {"trace_id", "t_rise", "t_fall"};
  t.rows.reserve(edges.size());
  for (const auto& e : edges) t.rows.push_back({static_cast<double>(e.trace_id), e.t_rise, e.t_fall});
  return t;
}

std::vector<WeightPoint> points_from_table(const Table& table) {
  if (table.columns.size() != 3) throw InvalidArgument("point tables need exactly three columns");
  std::vector<WeightPoint> out;
  out.reserve(table.rows.size());
  for (const auto& r : table.rows) {
    if (r[0] < 0.0) throw InvalidArgument("negative trace id in point table");
    out.push_back({r[1], r[2], static_cast<std::uint64_t>(r[0])});
  }
  return out;
}

std::optional<double> metadata_number(const Table& table, const std::string& key) {
  const auto it = table.metadata.find(key);
  if (it == table.metadata.end()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(it->second.c_str(), &end);
  if (end == it->second.c_str() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace pnr
