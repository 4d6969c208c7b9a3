#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace partgroup {

// One line of a JSON Lines manifest. Paths are stored resolved against the
// manifest file's directory.
struct ManifestEntry {
  std::string id;
  std::filesystem::path seg;   // label raster or score stack
  std::filesystem::path edge;  // float raster of edge activations
  std::optional<std::filesystem::path> gt_seg;
  std::optional<std::filesystem::path> gt_inst;
  std::optional<std::filesystem::path> gt_edge;
};

std::vector<ManifestEntry> load_manifest(const std::filesystem::path& file);

}  // namespace partgroup
