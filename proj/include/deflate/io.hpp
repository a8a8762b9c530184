#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "deflate/continuation.hpp"
#include "deflate/errors.hpp"
#include "deflate/grid.hpp"

namespace deflate {

using Json = nlohmann::ordered_json;

inline Json to_json(const Grid& g) {
  Json j;
  j["kind"] = g.kind() == Grid::Kind::Interval ? "interval" : "rectangle";
  Json lo = Json::array(), hi = Json::array(), n = Json::array();
  for (int a = 0; a < g.dim(); ++a) {
    lo.push_back(g.lo(a));
    hi.push_back(g.hi(a));
    n.push_back(g.n(a));
  }
  j["lo"] = lo;
  j["hi"] = hi;
  j["n"] = n;
  return j;
}

inline Grid grid_from_json(const Json& j) {
  try {
    const std::string kind = j.at("kind").get<std::string>();
    const auto& lo = j.at("lo");
    const auto& hi = j.at("hi");
    const auto& n = j.at("n");
    if (kind == "interval")
      return Grid::interval(lo.at(0).get<double>(), hi.at(0).get<double>(), n.at(0).get<std::size_t>());
    if (kind == "rectangle")
      return Grid::rectangle(lo.at(0).get<double>(), hi.at(0).get<double>(), lo.at(1).get<double>(),
                             hi.at(1).get<double>(), n.at(0).get<std::size_t>(), n.at(1).get<std::size_t>());
    throw UsageError("unknown grid kind '" + kind + "'");
  } catch (const Json::exception& e) {
    throw UsageError(std::string("malformed grid: ") + e.what());
  }
}

/// Field document: grid, boundary values, node values and free metadata.
inline Json to_json(const Field& f, const Json& metadata = Json::object()) {
  Json j;
  j["grid"] = to_json(f.grid);
  j["boundary"] = {{"left", f.boundary.left},
                   {"right", f.boundary.right},
                   {"bottom", f.boundary.bottom},
                   {"top", f.boundary.top}};
  j["values"] = f.values;
  j["metadata"] = metadata;
  return j;
}

inline Field field_from_json(const Json& j) {
  try {
    DirichletData bc;
    if (j.contains("boundary")) {
      const auto& b = j.at("boundary");
      bc.left = b.value("left", 0.0);
      bc.right = b.value("right", 0.0);
      bc.bottom = b.value("bottom", 0.0);
      bc.top = b.value("top", 0.0);
    }
    return Field(grid_from_json(j.at("grid")), j.at("values").get<Vector>(), bc);
  } catch (const Json::exception& e) {
    throw UsageError(std::string("malformed field: ") + e.what());
  }
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  if (!out) throw Error("write failed: " + path.string());
}

inline void write_json(const std::filesystem::path& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

inline Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw UsageError(path.string() + ": " + e.what());
  }
}

inline void write_field(const std::filesystem::path& path, const Field& f, const Json& metadata = Json::object()) {
  write_json(path, to_json(f, metadata));
}

inline Field read_field(const std::filesystem::path& path) { return field_from_json(read_json(path)); }

inline std::string format_g17(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

/// `parameter,branch_id,functional,solution_file`, one row per record;
/// file_of(record index) names the stored solution.
template <class FileOf>
std::string diagram_csv(const BifurcationDiagram& d, FileOf file_of) {
  std::ostringstream out;
  out << "parameter,branch_id,functional,solution_file\n";
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const auto& r = d.records[i];
    out << format_g17(r.parameter) << ',' << r.branch_id << ',' << format_g17(r.functional) << ','
        << file_of(i) << '\n';
  }
  return out.str();
}

}  // namespace deflate
