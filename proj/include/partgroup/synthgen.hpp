#pragma once

#include <cstdint>
#include <vector>

#include "partgroup/partition.hpp"
#include "partgroup/raster.hpp"

namespace partgroup {

// Deterministic 64-bit generator (splitmix64), so scenes are reproducible
// across platforms regardless of the standard library's engines.
struct SplitMix64 {
  std::uint64_t state = 0;

  explicit SplitMix64(std::uint64_t seed) : state(seed) {}

  std::uint64_t next() {
    state += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }
  std::uint32_t below(std::uint32_t n) { return std::uint32_t(next() % n); }
  std::uint32_t range(std::uint32_t lo, std::uint32_t hi) {
    return lo + below(hi - lo + 1);
  }
  // Always consumes one draw, so code paths stay aligned across probabilities.
  bool chance(double p) { return double(next() >> 11) * 0x1.0p-53 < p; }
};

enum class EdgeSides : std::uint8_t { two_sided, one_sided };

// Marks inter-instance boundaries: a foreground pixel is an edge point when a
// 4-neighbour carries a different positive id. Two-sided marks both pixels of
// such a pair; one-sided only the pixel with the larger id.
BinaryEdgeGrid derive_edges(const InstanceGrid& instances,
                            EdgeSides sides = EdgeSides::two_sided);

ProbGrid lift_edges(const BinaryEdgeGrid& edges);

struct SceneConfig {
  std::uint32_t height = 128;
  std::uint32_t width = 128;
  std::uint32_t min_instances = 2;
  std::uint32_t max_instances = 4;
  std::uint32_t min_parts = 2;   // part labels assigned per instance
  std::uint32_t max_parts = 5;
  std::uint32_t min_area = 31;   // strict "over 30 pixels" acceptance rule
  std::uint32_t label_count = 20;
  double edge_dropout = 0.0;
  double spurious_edge = 0.0;
  double label_flip = 0.0;
  std::uint64_t seed = 0;
  bool allow_overlap = true;
  std::uint32_t max_attempts = 64;

  void validate() const;
};

struct Scene {
  LabelGrid gt_parts;
  InstanceGrid gt_instances;
  BinaryEdgeGrid gt_edges;
  LabelGrid degraded_parts;
  ProbGrid degraded_edge_prob;
};

// Builds person-like figures (banded columns with rectangle or ellipse heads)
// back to front; occluded figures peek out above the occluder. Every emitted
// scene round-trips: oracle_partition on its ground truth recovers the
// instances exactly. Throws a generation error when retries are exhausted.
Scene gen_scene(const SceneConfig& config);

// Pixel-level reference for line grouping: flood fill where stepping right or
// down from p is blocked iff p is an edge point, and stepping left or up from
// p into q is blocked iff q is an edge point. Ids follow row-major seeds.
InstanceGrid oracle_raw_regions(const LabelGrid& parts, const BinaryEdgeGrid& edges);

// Reference for the whole pipeline: oracle_raw_regions followed by a literal
// reading of the merge rules, recomputing every contact from a repainted grid
// on each step. Quadratic and independent of the partition module internals.
InstanceGrid oracle_partition(const LabelGrid& parts, const BinaryEdgeGrid& edges,
                              const PartitionConfig& config = {});

// True when the two grids are equal under some bijective id relabelling.
bool same_partition(const InstanceGrid& a, const InstanceGrid& b);

}  // namespace partgroup
