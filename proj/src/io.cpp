#include "drl/io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "drl/error.hpp"

namespace drl::io {

namespace fs = std::filesystem;

namespace {

double exponent_from_json(const json& q) {
  if (q.is_string()) {
    const auto s = q.get<std::string>();
    if (s == "inf" || s == "infinity") return kInf;
    throw ConfigError("space exponent must be a number or \"inf\", got \"" + s + "\"");
  }
  if (!q.is_number()) throw ConfigError("space exponent must be a number or \"inf\"");
  return q.get<double>();
}

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

bool parse_number(const std::string& cell, double& out) {
  if (cell == "inf" || cell == "+inf") {
    out = kInf;
    return true;
  }
  if (cell == "-inf") {
    out = -kInf;
    return true;
  }
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  if (begin != end && *begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end && begin != end;
}

}  // namespace

SpaceSpec space_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw ConfigError("space must be an object with a \"kind\" field");
  const auto kind = j.at("kind").get<std::string>();
  try {
    if (kind == "seq") {
      if (!j.contains("q") || !j.contains("dim")) throw ConfigError("sequence space needs \"q\" and \"dim\"");
      const auto dim = j.at("dim").get<long long>();
      if (dim < 1) throw ConfigError("space dimension must be positive");
      return SpaceSpec::sequence(exponent_from_json(j.at("q")), static_cast<std::size_t>(dim));
    }
    if (kind == "op") {
      if (!j.contains("domain") || !j.contains("codomain")) {
        throw ConfigError("operator space needs \"domain\" and \"codomain\"");
      }
      return SpaceSpec::operators(space_from_json(j.at("domain")), space_from_json(j.at("codomain")));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed space: ") + e.what());
  } catch (const RangeError& e) {
    throw ConfigError(e.what());
  } catch (const DimensionError& e) {
    throw ConfigError(e.what());
  }
  throw ConfigError("unknown space kind \"" + kind + "\"");
}

json space_to_json(const SpaceSpec& space) {
  if (space.is_sequence()) {
    json q = std::isinf(space.exponent()) ? json("inf") : json(space.exponent());
    return json{{"kind", "seq"}, {"q", q}, {"dim", space.dim()}};
  }
  return json{{"kind", "op"}, {"domain", space_to_json(space.domain())}, {"codomain", space_to_json(space.codomain())}};
}

std::string format_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  if (std::isnan(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  CsvTable table;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    const auto cells = split(t);
    std::vector<double> row(cells.size());
    bool numeric = true;
    for (std::size_t c = 0; c < cells.size(); ++c) numeric = numeric && parse_number(cells[c], row[c]);
    if (!numeric) {
      if (table.rows.empty() && table.labels.empty()) {
        table.labels = cells;
        continue;
      }
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": non-numeric row");
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

std::vector<Vector> read_vectors(const fs::path& path, const SpaceSpec& space) {
  const auto table = read_csv(path);
  for (const auto& row : table.rows) {
    if (row.size() != space.dim()) {
      throw ConfigError(path.string() + ": vector with " + std::to_string(row.size()) + " coordinates in " +
                        space.describe());
    }
  }
  return table.rows;
}

DyadicFunction read_dyadic(const fs::path& path, const SpaceSpec& space) {
  const auto table = read_csv(path);
  if (table.rows.empty() || table.rows.front().size() != 2) {
    throw ConfigError(path.string() + ": expected a `level,dim` row");
  }
  const double level_d = table.rows[0][0];
  const double dim_d = table.rows[0][1];
  if (level_d != std::floor(level_d) || level_d < 0 || level_d > 24) throw ConfigError(path.string() + ": bad level");
  if (dim_d != static_cast<double>(space.dim())) {
    throw ConfigError(path.string() + ": dim does not match " + space.describe());
  }
  const int level = static_cast<int>(level_d);
  const std::size_t atoms = std::size_t{1} << level;
  if (table.rows.size() != atoms + 1) {
    throw ConfigError(path.string() + ": expected " + std::to_string(atoms) + " value rows");
  }
  std::vector<double> values;
  values.reserve(atoms * space.dim());
  for (std::size_t i = 1; i <= atoms; ++i) {
    if (table.rows[i].size() != space.dim()) throw ConfigError(path.string() + ": row width does not match dim");
    values.insert(values.end(), table.rows[i].begin(), table.rows[i].end());
  }
  return DyadicFunction(level, space, std::move(values));
}

std::string dyadic_to_csv(const DyadicFunction& f) {
  std::string out = "level,dim\n" + std::to_string(f.level()) + "," + std::to_string(f.dim()) + "\n";
  for (std::size_t i = 0; i < f.atoms(); ++i) {
    const auto v = f.at(i);
    for (std::size_t c = 0; c < v.size(); ++c) {
      if (c) out += ',';
      out += format_double(v[c]);
    }
    out += '\n';
  }
  return out;
}

void write_dyadic(const fs::path& path, const DyadicFunction& f) { write_text(path, dyadic_to_csv(f)); }

CarlesonFamily read_carleson(const fs::path& manifest) {
  const auto j = read_json(manifest);
  try {
    const int level = j.at("level").get<int>();
    const auto space = space_from_json(j.at("space"));
    const auto indices = j.at("indices").get<std::vector<int>>();
    const auto files = j.at("files").get<std::vector<std::string>>();
    if (indices.size() != files.size()) throw ConfigError("manifest needs one file per index");
    auto family = CarlesonFamily::zeros(level, space);
    for (std::size_t k = 0; k < indices.size(); ++k) {
      if (indices[k] < 0 || indices[k] > level) throw ConfigError("manifest index outside [0, level]");
      auto f = read_dyadic(manifest.parent_path() / files[k], space);
      if (f.level() != level) throw ConfigError(files[k] + ": level does not match the manifest");
      family[static_cast<std::size_t>(indices[k])] = std::move(f);
    }
    return family;
  } catch (const json::exception& e) {
    throw ConfigError(manifest.string() + ": " + e.what());
  }
}

void write_carleson(const fs::path& manifest, const CarlesonFamily& family) {
  json j{{"level", family.level()}, {"space", space_to_json(family.space())}};
  std::vector<std::size_t> indices = family.support();
  std::vector<std::string> files;
  const auto stem = manifest.stem().string();
  for (std::size_t idx : indices) {
    files.push_back(stem + "_theta" + std::to_string(idx) + ".csv");
    write_dyadic(manifest.parent_path() / files.back(), family[idx]);
  }
  j["indices"] = indices;
  j["files"] = files;
  write_text(manifest, j.dump(2) + "\n");
}

std::vector<Operator> family_from_json(const json& j) {
  try {
    const auto domain = space_from_json(j.at("domain"));
    const auto codomain = space_from_json(j.at("codomain"));
    if (!domain.is_sequence() || !codomain.is_sequence()) throw ConfigError("operators act between sequence spaces");
    std::vector<Operator> out;
    for (const auto& m : j.at("operators")) {
      const auto rows = m.get<std::vector<std::vector<double>>>();
      if (rows.size() != codomain.dim()) throw ConfigError("operator matrix needs one row per codomain coordinate");
      Eigen::MatrixXd mat(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(domain.dim()));
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (rows[r].size() != domain.dim()) throw ConfigError("operator matrix row width does not match the domain");
        for (std::size_t c = 0; c < rows[r].size(); ++c) {
          mat(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
        }
      }
      out.emplace_back(std::move(mat), domain, codomain);
    }
    if (out.empty()) throw ConfigError("operator family is empty");
    return out;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed operator family: ") + e.what());
  }
}

json family_to_json(std::span<const Operator> family) {
  if (family.empty()) return json::object();
  json ops = json::array();
  for (const auto& t : family) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < t.matrix().rows(); ++r) {
      json row = json::array();
      for (Eigen::Index c = 0; c < t.matrix().cols(); ++c) row.push_back(t.matrix()(r, c));
      rows.push_back(row);
    }
    ops.push_back(rows);
  }
  return json{{"domain", space_to_json(family[0].domain())},
              {"codomain", space_to_json(family[0].codomain())},
              {"operators", ops}};
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::ios_base::failure("cannot write " + path.string());
  out << text;
  if (!out) throw std::ios_base::failure("write failed for " + path.string());
}

}  // namespace drl::io
