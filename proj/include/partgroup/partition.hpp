#pragma once

#include <cstdint>
#include <map>
#include <vector>

#include "partgroup/edge_ops.hpp"
#include "partgroup/raster.hpp"

namespace partgroup {

enum class LineOrientation : std::uint8_t { horizontal, vertical };

// A maximal run of foreground pixels along one row or column. Runs stop at
// grid borders, background pixels and edge points; an edge point ends the run
// that reaches it and is that run's last pixel. Part labels do not break runs.
struct LineSegment {
  std::uint32_t id = 0;  // unique across both orientations, creation order
  LineOrientation orientation = LineOrientation::horizontal;
  std::uint32_t index = 0;  // row for horizontal lines, column for vertical
  std::uint32_t start = 0;  // first pixel along the scan direction
  std::uint32_t end = 0;    // last pixel, inclusive

  std::uint32_t length() const { return end - start + 1; }
};

struct LineSet {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<LineSegment> horizontal;
  std::vector<LineSegment> vertical;
  std::vector<std::uint32_t> h_line_ids;  // per pixel, 0 where background
  std::vector<std::uint32_t> v_line_ids;
};

struct Region {
  std::uint32_t id = 0;
  std::uint32_t area = 0;
  std::map<std::uint8_t, std::uint32_t> part_histogram;      // background excluded
  std::map<std::uint32_t, std::uint64_t> neighbour_contact;  // 4-adjacent pixel pairs
  bool accepted = false;

  std::size_t distinct_labels() const { return part_histogram.size(); }
};

struct PartitionConfig {
  double edge_threshold = kDefaultEdgeThreshold;
  std::uint32_t min_area = 30;        // strict: area must exceed this
  std::uint32_t min_part_labels = 2;  // inclusive lower bound
  bool thin_edges = true;
  bool drop_orphans = false;  // discard regions never absorbed by any instance
};

struct ParsingResult {
  InstanceGrid instances;
  LabelGrid parts;
  std::vector<Region> regions;  // summaries of the final instances
};

// Decodes every row and column of the label grid into line segments.
LineSet decode_lines(const LabelGrid& parts, const BinaryEdgeGrid& edges);

// Groups lines into regions: pixels sharing a horizontal or vertical line are
// connected. Region ids are assigned 1, 2, ... in row-major first-pixel order.
InstanceGrid group_lines(const LineSet& lines);

std::vector<Region> build_regions(const InstanceGrid& raw, const LabelGrid& parts);

// Absorbs rejected regions (too small or too few part labels) into accepted
// ones, preferring the neighbour with the longest shared boundary, until no
// rejected region can reach an accepted one. Mutates the accepted flags.
// Returns the final instance grid with ids renumbered 1, 2, ... row-major.
InstanceGrid merge_regions(std::vector<Region>& regions, const InstanceGrid& raw,
                           const LabelGrid& parts, const PartitionConfig& config);

// Full pipeline: thin -> binarize -> decode -> group -> build -> merge.
ParsingResult partition(const LabelGrid& parts, const ProbGrid& edge_scores,
                        const PartitionConfig& config = {});

// Variant taking an already binarized edge grid.
ParsingResult partition(const LabelGrid& parts, const BinaryEdgeGrid& edges,
                        const PartitionConfig& config = {});

}  // namespace partgroup
