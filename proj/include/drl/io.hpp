#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "drl/carleson.hpp"
#include "drl/dyadic.hpp"
#include "drl/spaces.hpp"

namespace drl::io {

using nlohmann::json;

/// {"kind":"seq","q":2.0,"dim":8} or {"kind":"op","domain":...,"codomain":...};
/// q may be the string "inf".
SpaceSpec space_from_json(const json& j);
json space_to_json(const SpaceSpec& space);

/// Shortest text that reads back to the same double ("%.17g"; inf as "inf").
std::string format_double(double x);

/// Parses the file into rows of doubles. Blank lines and lines starting with
/// '#' are skipped; a first row that does not parse as numbers is a label row
/// and is returned separately.
struct CsvTable {
  std::vector<std::string> labels;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

/// One vector per row.
std::vector<Vector> read_vectors(const std::filesystem::path& path, const SpaceSpec& space);

/// Dyadic function file: a row `level,dim` (optionally preceded by the label
/// row "level,dim") followed by 2^level rows of coordinates.
DyadicFunction read_dyadic(const std::filesystem::path& path, const SpaceSpec& space);
std::string dyadic_to_csv(const DyadicFunction& f);
void write_dyadic(const std::filesystem::path& path, const DyadicFunction& f);

/// Carleson family: a JSON manifest {level, indices, space, files} with one
/// dyadic function file per listed index; file names are relative to the
/// manifest.
CarlesonFamily read_carleson(const std::filesystem::path& manifest);
void write_carleson(const std::filesystem::path& manifest, const CarlesonFamily& family);

/// Operator family: {"domain":..., "codomain":..., "operators":[matrix, ...]}
/// with each matrix given as a list of rows.
std::vector<Operator> family_from_json(const json& j);
json family_to_json(std::span<const Operator> family);

json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace drl::io
