#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "partgroup/raster.hpp"

namespace partgroup {

/// Raster kinds as they appear on disk.
///
/// File formats, bit-exact:
///  - label:    binary PGM "P5", maxval 255, one byte per pixel, row-major.
///              Sample value 255 is a reserved sentinel and rejected.
///  - instance: binary PGM "P5", maxval 65535, two bytes per pixel
///              big-endian, row-major.
///  - edge:     binary PGM "P5", maxval 255, samples strictly 0 or 255.
///  - prob:     "FGR1": magic, then height and width as 32-bit little-endian
///              unsigned, then height*width IEEE-754 32-bit little-endian
///              floats, row-major.
///  - stack:    "FGS1": as FGR1 plus a 32-bit little-endian channel count
///              after width, then K planes.
enum class RasterKind { label, prob, instance, edge, stack };

std::vector<std::uint8_t> encode_raster(const LabelGrid& grid);
std::vector<std::uint8_t> encode_raster(const ProbGrid& grid);
std::vector<std::uint8_t> encode_raster(const InstanceGrid& grid);
std::vector<std::uint8_t> encode_raster(const BinaryEdgeGrid& grid);
std::vector<std::uint8_t> encode_raster(const ScoreStack& stack);

LabelGrid decode_label(std::span<const std::uint8_t> bytes);
ProbGrid decode_prob(std::span<const std::uint8_t> bytes);
InstanceGrid decode_instance(std::span<const std::uint8_t> bytes);
BinaryEdgeGrid decode_edge(std::span<const std::uint8_t> bytes);
ScoreStack decode_stack(std::span<const std::uint8_t> bytes);

/// Guess the on-disk kind from the magic and header. "P5" with maxval 255 is
/// reported as label; the caller decides between label and edge.
RasterKind sniff_kind(std::span<const std::uint8_t> bytes);

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path);

/// Writes via a temp file in the same directory, then renames into place.
void write_bytes_atomic(const std::filesystem::path& path,
                        std::span<const std::uint8_t> bytes);

}  // namespace partgroup
