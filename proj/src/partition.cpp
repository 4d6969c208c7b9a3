#include "partgroup/partition.hpp"

#include <algorithm>
#include <numeric>

namespace partgroup {

namespace {

void check_same_shape(std::uint32_t ah, std::uint32_t aw, std::uint32_t bh,
                      std::uint32_t bw) {
  if (ah != bh || aw != bw) throw_validation("grids differ in shape");
}

struct UnionFind {
  std::vector<std::uint32_t> parent;

  explicit UnionFind(std::size_t n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0u);
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent[x] != x) {
      parent[x] = parent[parent[x]];
      x = parent[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) { parent[find(a)] = find(b); }
};

}  // namespace

LineSet decode_lines(const LabelGrid& parts, const BinaryEdgeGrid& edges) {
  check_same_shape(parts.height, parts.width, edges.height, edges.width);
  const std::uint32_t h = parts.height, w = parts.width;
  LineSet lines;
  lines.height = h;
  lines.width = w;
  lines.h_line_ids.assign(std::size_t(h) * w, 0);
  lines.v_line_ids.assign(std::size_t(h) * w, 0);
  std::uint32_t next_id = 1;

  for (std::uint32_t r = 0; r < h; ++r) {
    std::uint32_t c = 0;
    while (c < w) {
      if (parts.at(r, c) == 0) {
        ++c;
        continue;
      }
      const std::uint32_t start = c;
      while (true) {
        const bool stop = edges.at(r, c) != 0;
        ++c;
        if (stop || c == w || parts.at(r, c) == 0) break;
      }
      lines.horizontal.push_back(
          {next_id, LineOrientation::horizontal, r, start, c - 1});
      for (std::uint32_t x = start; x < c; ++x) {
        lines.h_line_ids[std::size_t(r) * w + x] = next_id;
      }
      ++next_id;
    }
  }
  for (std::uint32_t col = 0; col < w; ++col) {
    std::uint32_t r = 0;
    while (r < h) {
      if (parts.at(r, col) == 0) {
        ++r;
        continue;
      }
      const std::uint32_t start = r;
      while (true) {
        const bool stop = edges.at(r, col) != 0;
        ++r;
        if (stop || r == h || parts.at(r, col) == 0) break;
      }
      lines.vertical.push_back(
          {next_id, LineOrientation::vertical, col, start, r - 1});
      for (std::uint32_t y = start; y < r; ++y) {
        lines.v_line_ids[std::size_t(y) * w + col] = next_id;
      }
      ++next_id;
    }
  }
  return lines;
}

InstanceGrid group_lines(const LineSet& lines) {
  detail::check_dims(lines.height, lines.width);
  const std::size_t pixels = std::size_t(lines.height) * lines.width;
  if (lines.h_line_ids.size() != pixels || lines.v_line_ids.size() != pixels) {
    throw_validation("line id maps do not match grid shape");
  }
  const std::size_t count = lines.horizontal.size() + lines.vertical.size();

  UnionFind uf(count);
  for (std::size_t p = 0; p < pixels; ++p) {
    const std::uint32_t hid = lines.h_line_ids[p];
    const std::uint32_t vid = lines.v_line_ids[p];
    if ((hid == 0) != (vid == 0)) {
      throw_validation("pixel covered by only one line orientation");
    }
    if (hid == 0) continue;
    if (hid > count || vid > count) throw_validation("line id out of range");
    uf.unite(hid - 1, vid - 1);
  }

  InstanceGrid raw(lines.height, lines.width, 0);
  std::vector<std::uint32_t> region_of(count, 0);
  std::uint32_t next = 1;
  for (std::size_t p = 0; p < pixels; ++p) {
    const std::uint32_t hid = lines.h_line_ids[p];
    if (hid == 0) continue;
    const std::uint32_t root = uf.find(hid - 1);
    if (region_of[root] == 0) region_of[root] = next++;
    raw.data[p] = region_of[root];
  }
  return raw;
}

std::vector<Region> build_regions(const InstanceGrid& raw, const LabelGrid& parts) {
  check_same_shape(raw.height, raw.width, parts.height, parts.width);
  const std::uint32_t n = raw.max_id();
  std::vector<Region> regions(n);
  for (std::uint32_t i = 0; i < n; ++i) regions[i].id = i + 1;

  const std::uint32_t h = raw.height, w = raw.width;
  for (std::uint32_t r = 0; r < h; ++r) {
    for (std::uint32_t c = 0; c < w; ++c) {
      const std::uint32_t id = raw.at(r, c);
      if (id == 0) {
        if (parts.at(r, c) != 0) throw_validation("foreground pixel without region");
        continue;
      }
      if (parts.at(r, c) == 0) throw_validation("region pixel on background");
      Region& reg = regions[id - 1];
      ++reg.area;
      ++reg.part_histogram[parts.at(r, c)];
      if (c + 1 < w) {
        const std::uint32_t right = raw.at(r, c + 1);
        if (right != 0 && right != id) {
          ++reg.neighbour_contact[right];
          ++regions[right - 1].neighbour_contact[id];
        }
      }
      if (r + 1 < h) {
        const std::uint32_t down = raw.at(r + 1, c);
        if (down != 0 && down != id) {
          ++reg.neighbour_contact[down];
          ++regions[down - 1].neighbour_contact[id];
        }
      }
    }
  }
  return regions;
}

InstanceGrid merge_regions(std::vector<Region>& regions, const InstanceGrid& raw,
                           const LabelGrid& parts, const PartitionConfig& config) {
  check_same_shape(raw.height, raw.width, parts.height, parts.width);
  const std::uint32_t n = raw.max_id();
  if (regions.size() != n) throw_validation("region list does not match grid ids");

  for (Region& reg : regions) {
    reg.accepted = reg.distinct_labels() >= config.min_part_labels &&
                   reg.area > config.min_area;
  }

  // Working copies: contact[id] maps co-boundary lengths to other live
  // entities (accepted group roots or still-unmerged rejected regions).
  std::vector<std::map<std::uint32_t, std::uint64_t>> contact(n + 1);
  for (const Region& reg : regions) contact[reg.id] = reg.neighbour_contact;

  std::vector<std::uint32_t> target(n + 1, 0);  // region id -> accepted group root
  std::vector<std::uint64_t> group_area(n + 1, 0);
  for (const Region& reg : regions) {
    if (reg.accepted) {
      target[reg.id] = reg.id;
      group_area[reg.id] = reg.area;
    }
  }

  // One absorption per pass: the smallest-id unmerged rejected region that
  // touches an accepted group goes to the group with the longest shared
  // boundary (ties: larger group area, then smaller group id). Transferring
  // the absorbed region's contacts lets later passes reach further regions.
  while (true) {
    std::uint32_t pick = 0, dest = 0;
    for (std::uint32_t id = 1; id <= n && pick == 0; ++id) {
      if (target[id] != 0) continue;
      std::uint64_t best_contact = 0;
      std::uint64_t best_area = 0;
      std::uint32_t best_group = 0;
      for (const auto& [other, pairs] : contact[id]) {
        if (other == id || target[other] != other) continue;
        if (pairs > best_contact ||
            (pairs == best_contact && group_area[other] > best_area) ||
            (pairs == best_contact && group_area[other] == best_area &&
             (best_group == 0 || other < best_group))) {
          best_contact = pairs;
          best_area = group_area[other];
          best_group = other;
        }
      }
      if (best_group != 0) {
        pick = id;
        dest = best_group;
      }
    }
    if (pick == 0) break;

    target[pick] = dest;
    group_area[dest] += regions[pick - 1].area;
    for (const auto& [other, pairs] : contact[pick]) {
      if (other == dest) continue;
      contact[dest][other] += pairs;
      contact[other][dest] += pairs;
      contact[other].erase(pick);
    }
    contact[dest].erase(pick);
    contact[pick].clear();
  }

  // Whatever is left cannot reach an accepted region through foreground.
  std::vector<std::uint32_t> resolved(n + 1, 0);
  for (std::uint32_t id = 1; id <= n; ++id) {
    if (target[id] != 0) {
      resolved[id] = target[id];
    } else {
      resolved[id] = config.drop_orphans ? 0 : id;
    }
  }

  InstanceGrid out(raw.height, raw.width, 0);
  std::vector<std::uint32_t> renumber(n + 1, 0);
  std::uint32_t next = 1;
  for (std::size_t p = 0; p < raw.data.size(); ++p) {
    const std::uint32_t id = resolved[raw.data[p]];
    if (id == 0) continue;
    if (renumber[id] == 0) renumber[id] = next++;
    out.data[p] = renumber[id];
  }
  return out;
}

ParsingResult partition(const LabelGrid& parts, const ProbGrid& edge_scores,
                        const PartitionConfig& config) {
  check_same_shape(parts.height, parts.width, edge_scores.height, edge_scores.width);
  const ProbGrid thinned = config.thin_edges ? nms_thin(edge_scores) : edge_scores;
  return partition(parts, binarize_edges(thinned, config.edge_threshold), config);
}

ParsingResult partition(const LabelGrid& parts, const BinaryEdgeGrid& edges,
                        const PartitionConfig& config) {
  LineSet lines = decode_lines(parts, edges);
  InstanceGrid raw = group_lines(lines);
  std::vector<Region> raw_regions = build_regions(raw, parts);
  InstanceGrid merged = merge_regions(raw_regions, raw, parts, config);

  std::vector<Region> summaries = build_regions(merged, parts);
  for (Region& reg : summaries) {
    reg.accepted = reg.distinct_labels() >= config.min_part_labels &&
                   reg.area > config.min_area;
  }
  return ParsingResult{std::move(merged), parts, std::move(summaries)};
}

}  // namespace partgroup
