#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <variant>
#include <vector>

#include "partgroup/raster.hpp"

namespace partgroup {

/// Edge activations strictly above this value break scan lines.
inline constexpr double kDefaultEdgeThreshold = 0.2;

/// Gaussian sigma used to estimate edge orientation for thinning.
inline constexpr double kNmsSigma = 2.0;

/// Label-index pairs exchanged when a prediction is mirrored horizontally
/// (e.g. Right-arm <-> Left-arm).
struct FlipLabelPolicy {
  std::vector<std::pair<std::uint8_t, std::uint8_t>> swap_pairs;

  /// Derives the policy from "Right-X"/"Left-X" label name pairs.
  static FlipLabelPolicy for_taxonomy(const Taxonomy& taxonomy);

  void validate(std::size_t k) const;
};

/// One prediction to be fused: produced at `scale` times the base resolution,
/// optionally from a horizontally mirrored input.
struct FusionInput {
  std::variant<ProbGrid, ScoreStack> grid;
  double scale = 1.0;
  bool flipped = false;
};

/// Non-maximal suppression along the local edge normal. A pixel keeps its
/// value only when it is no smaller than the two bilinearly interpolated
/// samples at unit distance along the normal; everything else becomes 0.
/// The normal is the gradient direction of a Gaussian-smoothed (sigma 2)
/// copy of the input; pixels with no usable gradient are kept.
ProbGrid nms_thin(const ProbGrid& edges);

/// Edge point iff activation is strictly greater than the threshold.
BinaryEdgeGrid binarize_edges(const ProbGrid& thinned, double threshold);

ProbGrid flip_horizontal(const ProbGrid& grid);
ScoreStack flip_horizontal(const ScoreStack& stack, const FlipLabelPolicy& policy);

/// Bilinear resampling with pixel centers at half-integer coordinates
/// (align-corners false). Sample positions are clamped to the source rect.
ProbGrid resize_bilinear(const ProbGrid& grid, std::uint32_t out_h, std::uint32_t out_w);
ScoreStack resize_bilinear(const ScoreStack& stack, std::uint32_t out_h, std::uint32_t out_w);

/// Un-flips each input, resamples it to the base resolution, and averages.
/// All inputs must be the same kind (all ProbGrid, or all ScoreStack with
/// equal channel counts).
std::variant<ProbGrid, ScoreStack> fuse_score_maps(std::span<const FusionInput> inputs,
                                                   std::uint32_t base_height,
                                                   std::uint32_t base_width,
                                                   const FlipLabelPolicy& policy);

/// Element-wise mean of two same-shape stacks.
ScoreStack average_predictions(const ScoreStack& a, const ScoreStack& b);

}  // namespace partgroup
