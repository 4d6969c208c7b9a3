#include "partgroup/manifest.hpp"

#include <fstream>
#include <set>

#include <json.hpp>

#include "partgroup/error.hpp"

namespace partgroup {

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw_io("cannot open manifest: " + file.string());
  const std::filesystem::path base = file.parent_path();

  std::vector<ManifestEntry> entries;
  std::set<std::string> ids;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw_format("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!doc.is_object()) {
      throw_format("manifest line " + std::to_string(lineno) + ": not an object");
    }
    const auto need = [&](const char* key) -> std::string {
      if (!doc.contains(key) || !doc[key].is_string()) {
        throw_format("manifest line " + std::to_string(lineno) +
                     ": missing string field '" + key + "'");
      }
      return doc[key].get<std::string>();
    };
    const auto optional_path =
        [&](const char* key) -> std::optional<std::filesystem::path> {
      if (!doc.contains(key) || doc[key].is_null()) return std::nullopt;
      if (!doc[key].is_string()) {
        throw_format("manifest line " + std::to_string(lineno) + ": field '" +
                     key + "' must be a string");
      }
      return base / doc[key].get<std::string>();
    };

    ManifestEntry entry;
    entry.id = need("id");
    if (!ids.insert(entry.id).second) {
      throw_validation("duplicate manifest id: " + entry.id);
    }
    entry.seg = base / need("seg");
    entry.edge = base / need("edge");
    entry.gt_seg = optional_path("gt_seg");
    entry.gt_inst = optional_path("gt_inst");
    entry.gt_edge = optional_path("gt_edge");
    entries.push_back(std::move(entry));
  }
  return entries;
}

}  // namespace partgroup
