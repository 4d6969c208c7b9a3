#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "partgroup/raster.hpp"

namespace partgroup {

// Fixed color per label index; index 0 is black, others are spread across the
// hue circle so small taxonomies get clearly distinct colors.
std::array<std::uint8_t, 3> label_color(std::uint8_t label);

// Deterministic hue for an instance id; id 0 is black.
std::array<std::uint8_t, 3> instance_color(std::uint32_t id);

// All render functions emit binary PPM (P6, maxval 255).
std::vector<std::uint8_t> render_labels(const LabelGrid& grid);
std::vector<std::uint8_t> render_instances(const InstanceGrid& grid);
std::vector<std::uint8_t> render_edges(const BinaryEdgeGrid& grid);
std::vector<std::uint8_t> render_prob(const ProbGrid& grid);

}  // namespace partgroup
