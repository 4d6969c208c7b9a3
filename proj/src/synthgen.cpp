#include "partgroup/synthgen.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <utility>
#include <vector>

namespace partgroup {

BinaryEdgeGrid derive_edges(const InstanceGrid& instances, EdgeSides sides) {
  const std::uint32_t h = instances.height, w = instances.width;
  BinaryEdgeGrid edges(h, w);
  for (std::uint32_t r = 0; r < h; ++r) {
    for (std::uint32_t c = 0; c < w; ++c) {
      const std::uint32_t id = instances.at(r, c);
      if (id == 0) continue;
      const auto differs = [&](std::uint32_t nr, std::uint32_t nc) {
        const std::uint32_t q = instances.at(nr, nc);
        if (q == 0 || q == id) return false;
        return sides == EdgeSides::two_sided || q < id;
      };
      const bool edge = (r > 0 && differs(r - 1, c)) ||
                        (r + 1 < h && differs(r + 1, c)) ||
                        (c > 0 && differs(r, c - 1)) ||
                        (c + 1 < w && differs(r, c + 1));
      if (edge) edges.set(r, c, true);
    }
  }
  return edges;
}

ProbGrid lift_edges(const BinaryEdgeGrid& edges) {
  ProbGrid out(edges.height, edges.width, 0.0f);
  for (std::size_t i = 0; i < edges.data.size(); ++i) {
    out.data[i] = edges.data[i] ? 1.0f : 0.0f;
  }
  return out;
}

void SceneConfig::validate() const {
  detail::check_dims(height, width);
  if (height < 48 || width < 16) {
    throw_validation("scene dimensions too small for figure layout");
  }
  if (min_instances < 1 || max_instances < min_instances) {
    throw_validation("bad instance count range");
  }
  if (min_parts < 2 || max_parts < min_parts) {
    throw_validation("parts per instance must allow at least two labels");
  }
  if (label_count < 3 || label_count > 255) {
    throw_validation("label count must lie in [3, 255]");
  }
  if (max_parts > label_count - 1) {
    throw_validation("more parts requested than distinct labels available");
  }
  if (min_area < 31) throw_validation("min instance area must exceed 30 pixels");
  for (double p : {edge_dropout, spurious_edge, label_flip}) {
    if (!(p >= 0.0 && p <= 1.0)) throw_validation("noise probability outside [0, 1]");
  }
  if (max_attempts < 1) throw_validation("max_attempts must be positive");
}

namespace {

struct Band {
  std::uint32_t y0, y1, x0, x1;  // inclusive bounds
  std::uint8_t label;
  bool ellipse = false;
};

struct Figure {
  std::vector<Band> bands;
};

bool inside_ellipse(std::uint32_t y, std::uint32_t x, const Band& b) {
  const std::int64_t a = std::int64_t(b.y1) - b.y0 + 1;   // full vertical axis
  const std::int64_t bb = std::int64_t(b.x1) - b.x0 + 1;  // full horizontal axis
  const std::int64_t dy = 2 * std::int64_t(y) - b.y0 - b.y1;
  const std::int64_t dx = 2 * std::int64_t(x) - b.x0 - b.x1;
  return dy * dy * bb * bb + dx * dx * a * a <= a * a * bb * bb;
}

void paint(const Figure& figure, std::uint32_t id, LabelGrid& parts,
           InstanceGrid& inst) {
  for (const Band& band : figure.bands) {
    for (std::uint32_t y = band.y0; y <= band.y1; ++y) {
      for (std::uint32_t x = band.x0; x <= band.x1; ++x) {
        if (band.ellipse && !inside_ellipse(y, x, band)) continue;
        parts.at(y, x) = band.label;
        inst.at(y, x) = id;
      }
    }
  }
}

std::vector<std::uint8_t> draw_labels(std::uint32_t count, std::uint32_t label_count,
                                      SplitMix64& rng) {
  std::vector<std::uint8_t> pool(label_count - 1);
  std::iota(pool.begin(), pool.end(), std::uint8_t(1));
  for (std::uint32_t j = 0; j < count; ++j) {
    const std::uint32_t pick = j + rng.below(std::uint32_t(pool.size()) - j);
    std::swap(pool[j], pool[pick]);
  }
  pool.resize(count);
  return pool;
}

// Splits `total` rows into `bands` stacked bands of roughly equal height.
std::vector<std::uint32_t> split_rows(std::uint32_t total, std::uint32_t bands) {
  std::vector<std::uint32_t> heights(bands, total / bands);
  for (std::uint32_t j = 0; j < total % bands; ++j) ++heights[j];
  return heights;
}

struct BuildResult {
  LabelGrid parts;
  InstanceGrid instances;
};

std::optional<BuildResult> try_build(const SceneConfig& cfg, SplitMix64& rng) {
  const std::uint32_t h = cfg.height, w = cfg.width;
  const std::uint32_t n_total = rng.range(cfg.min_instances, cfg.max_instances);
  std::uint32_t n_peek = 0;
  if (cfg.allow_overlap && n_total >= 2) n_peek = rng.range(0, n_total / 2);
  const std::uint32_t n_main = n_total - n_peek;

  const std::uint32_t min_tw = 9, slot_gap = 2;
  if (2 + n_main * min_tw + (n_main - 1) * slot_gap > w) return std::nullopt;

  std::uint32_t budget = w - 2 - n_main * min_tw - (n_main - 1) * slot_gap;
  std::vector<std::uint32_t> tw(n_main);
  for (std::uint32_t i = 0; i < n_main; ++i) {
    const std::uint32_t extra = rng.below(std::min(budget, 7u) + 1);
    tw[i] = min_tw + extra;
    budget -= extra;
  }
  std::vector<std::uint32_t> tx(n_main);
  std::uint32_t cursor = 1;
  for (std::uint32_t i = 0; i < n_main; ++i) {
    const std::uint32_t shift = rng.below(std::min(budget, 12u) + 1);
    budget -= shift;
    cursor += shift;
    tx[i] = cursor;
    cursor += tw[i] + slot_gap;
  }

  // Which figures get another figure peeking out above them.
  std::vector<std::uint32_t> order(n_main);
  std::iota(order.begin(), order.end(), 0u);
  for (std::uint32_t j = 0; j < n_peek; ++j) {
    const std::uint32_t pick = j + rng.below(n_main - j);
    std::swap(order[j], order[pick]);
  }
  std::vector<bool> hosts(n_main, false);
  for (std::uint32_t j = 0; j < n_peek; ++j) hosts[order[j]] = true;

  struct MainGeom {
    std::uint32_t hx, hw, head_top;
  };
  std::vector<Figure> mains(n_main);
  std::vector<MainGeom> geom(n_main);
  for (std::uint32_t i = 0; i < n_main; ++i) {
    const std::uint32_t y_bottom = h - 2 - rng.below(4);
    const std::uint32_t body_min = std::max(26u, (2 * h) / 5);
    const std::uint32_t body_max = std::min(h - 26, (3 * h) / 4);
    if (body_min > body_max) return std::nullopt;
    const std::uint32_t body_h = rng.range(body_min, body_max);
    const std::uint32_t torso_top = y_bottom - body_h + 1;
    const std::uint32_t head_h = rng.range(5, 8);
    if (torso_top < head_h + 1) return std::nullopt;
    const std::uint32_t head_top = torso_top - head_h;

    const std::uint32_t hw = hosts[i] ? rng.range(7, std::min(10u, tw[i] - 2))
                                      : rng.range(3, std::min(8u, tw[i] - 2));
    const std::uint32_t hx = tx[i] + (tw[i] - hw) / 2;
    const bool ellipse_head = hosts[i] ? false : rng.chance(0.5);

    std::uint32_t np = rng.range(cfg.min_parts, cfg.max_parts);
    np = std::min(np, 1 + body_h / 3);
    if (np < cfg.min_parts) return std::nullopt;
    const std::vector<std::uint8_t> labels = draw_labels(np, cfg.label_count, rng);

    Figure& fig = mains[i];
    fig.bands.push_back(
        {head_top, torso_top - 1, hx, hx + hw - 1, labels[0], ellipse_head});
    const std::vector<std::uint32_t> heights = split_rows(body_h, np - 1);
    std::uint32_t y = torso_top;
    for (std::uint32_t j = 0; j + 1 < np; ++j) {
      fig.bands.push_back(
          {y, y + heights[j] - 1, tx[i], tx[i] + tw[i] - 1, labels[j + 1], false});
      y += heights[j];
    }
    geom[i] = {hx, hw, head_top};
  }

  std::vector<Figure> peekers(n_peek);
  for (std::uint32_t j = 0; j < n_peek; ++j) {
    const MainGeom& host = geom[order[j]];
    const std::uint32_t bw = rng.range(3, std::min(6u, host.hw - 4));
    const std::uint32_t bx = host.hx + 1 + rng.below(host.hw - 1 - bw);
    std::uint32_t vis_min = std::max(6u, (cfg.min_area + bw - 1) / bw);
    const std::uint32_t vis_max = std::min(16u, host.head_top - 1);
    if (vis_min > vis_max) return std::nullopt;
    const std::uint32_t vis = rng.range(vis_min, vis_max);
    const std::uint32_t by_top = host.head_top - vis;

    std::uint32_t npb = rng.range(2, 3);
    npb = std::min(npb, vis / 3);
    if (npb < 2) return std::nullopt;
    const std::vector<std::uint8_t> labels = draw_labels(npb, cfg.label_count, rng);

    Figure& fig = peekers[j];
    const std::vector<std::uint32_t> heights = split_rows(vis, npb);
    std::uint32_t y = by_top;
    for (std::uint32_t b = 0; b < npb; ++b) {
      fig.bands.push_back({y, y + heights[b] - 1, bx, bx + bw - 1, labels[b], false});
      y += heights[b];
    }
    // Hidden tail: continues behind the host's head and gets painted over.
    fig.bands.push_back(
        {host.head_top, host.head_top + 3, bx, bx + bw - 1, labels[npb - 1], false});
  }

  LabelGrid parts(h, w, 0);
  InstanceGrid inst(h, w, 0);
  std::uint32_t id = 1;
  for (const Figure& fig : peekers) paint(fig, id++, parts, inst);
  for (const Figure& fig : mains) paint(fig, id++, parts, inst);

  // Every instance must survive occlusion with enough area and label variety.
  std::vector<std::uint32_t> area(n_total + 1, 0);
  std::vector<std::set<std::uint8_t>> seen(n_total + 1);
  for (std::size_t p = 0; p < inst.data.size(); ++p) {
    if (inst.data[p] == 0) continue;
    ++area[inst.data[p]];
    seen[inst.data[p]].insert(parts.data[p]);
  }
  for (std::uint32_t i = 1; i <= n_total; ++i) {
    if (area[i] < cfg.min_area || seen[i].size() < std::max(2u, cfg.min_parts)) {
      return std::nullopt;
    }
  }
  return BuildResult{std::move(parts), std::move(inst)};
}

}  // namespace

Scene gen_scene(const SceneConfig& config) {
  config.validate();
  SplitMix64 master(config.seed);
  for (std::uint32_t attempt = 0; attempt < config.max_attempts; ++attempt) {
    SplitMix64 rng(master.next());
    std::optional<BuildResult> built = try_build(config, rng);
    if (!built) continue;

    BinaryEdgeGrid edges = derive_edges(built->instances);
    if (!same_partition(oracle_partition(built->parts, edges), built->instances)) {
      continue;
    }

    LabelGrid degraded_parts = built->parts;
    for (std::size_t p = 0; p < degraded_parts.data.size(); ++p) {
      if (degraded_parts.data[p] == 0) continue;
      if (rng.chance(config.label_flip)) {
        const std::uint8_t old = degraded_parts.data[p];
        std::uint8_t pick = std::uint8_t(rng.range(1, config.label_count - 2));
        if (pick >= old) ++pick;
        degraded_parts.data[p] = pick;
      }
    }
    ProbGrid degraded_edges = lift_edges(edges);
    for (std::size_t p = 0; p < degraded_edges.data.size(); ++p) {
      if (edges.data[p]) {
        if (rng.chance(config.edge_dropout)) degraded_edges.data[p] = 0.0f;
      } else {
        if (rng.chance(config.spurious_edge)) degraded_edges.data[p] = 1.0f;
      }
    }
    return Scene{std::move(built->parts), std::move(built->instances),
                 std::move(edges), std::move(degraded_parts),
                 std::move(degraded_edges)};
  }
  throw_generation("could not generate a valid scene within the attempt budget");
}

InstanceGrid oracle_raw_regions(const LabelGrid& parts, const BinaryEdgeGrid& edges) {
  if (parts.height != edges.height || parts.width != edges.width) {
    throw_validation("grids differ in shape");
  }
  const std::uint32_t h = parts.height, w = parts.width;
  InstanceGrid out(h, w, 0);
  std::uint32_t next = 1;
  std::vector<std::pair<std::uint32_t, std::uint32_t>> stack;

  for (std::uint32_t sr = 0; sr < h; ++sr) {
    for (std::uint32_t sc = 0; sc < w; ++sc) {
      if (parts.at(sr, sc) == 0 || out.at(sr, sc) != 0) continue;
      const std::uint32_t id = next++;
      out.at(sr, sc) = id;
      stack.push_back({sr, sc});
      while (!stack.empty()) {
        const auto [r, c] = stack.back();
        stack.pop_back();
        const bool blocked_here = edges.at(r, c) != 0;
        const auto visit = [&](std::uint32_t nr, std::uint32_t nc) {
          if (parts.at(nr, nc) == 0 || out.at(nr, nc) != 0) return;
          out.at(nr, nc) = id;
          stack.push_back({nr, nc});
        };
        if (!blocked_here && c + 1 < w) visit(r, c + 1);
        if (!blocked_here && r + 1 < h) visit(r + 1, c);
        if (c > 0 && !edges.at(r, c - 1)) visit(r, c - 1);
        if (r > 0 && !edges.at(r - 1, c)) visit(r - 1, c);
      }
    }
  }
  return out;
}

InstanceGrid oracle_partition(const LabelGrid& parts, const BinaryEdgeGrid& edges,
                              const PartitionConfig& config) {
  InstanceGrid work = oracle_raw_regions(parts, edges);
  const std::uint32_t h = work.height, w = work.width;
  const std::uint32_t n = work.max_id();

  std::vector<std::uint64_t> area(n + 1, 0);
  std::vector<std::set<std::uint8_t>> labels(n + 1);
  for (std::size_t p = 0; p < work.data.size(); ++p) {
    const std::uint32_t id = work.data[p];
    if (id == 0) continue;
    ++area[id];
    labels[id].insert(parts.data[p]);
  }
  std::vector<bool> accepted(n + 1, false);
  for (std::uint32_t id = 1; id <= n; ++id) {
    accepted[id] = labels[id].size() >= config.min_part_labels &&
                   area[id] > config.min_area;
  }

  std::vector<bool> absorbed(n + 1, false);
  while (true) {
    // Recompute everything from the repainted grid: areas and contacts.
    std::vector<std::uint64_t> cur_area(n + 1, 0);
    std::vector<std::map<std::uint32_t, std::uint64_t>> contact(n + 1);
    for (std::uint32_t r = 0; r < h; ++r) {
      for (std::uint32_t c = 0; c < w; ++c) {
        const std::uint32_t id = work.at(r, c);
        if (id == 0) continue;
        ++cur_area[id];
        if (c + 1 < w) {
          const std::uint32_t right = work.at(r, c + 1);
          if (right != 0 && right != id) {
            ++contact[id][right];
            ++contact[right][id];
          }
        }
        if (r + 1 < h) {
          const std::uint32_t down = work.at(r + 1, c);
          if (down != 0 && down != id) {
            ++contact[id][down];
            ++contact[down][id];
          }
        }
      }
    }

    std::uint32_t pick = 0, dest = 0;
    for (std::uint32_t id = 1; id <= n && pick == 0; ++id) {
      if (accepted[id] || absorbed[id]) continue;
      std::uint64_t best_contact = 0, best_area = 0;
      std::uint32_t best_group = 0;
      for (const auto& [other, pairs] : contact[id]) {
        if (!accepted[other]) continue;
        if (pairs > best_contact ||
            (pairs == best_contact && cur_area[other] > best_area) ||
            (pairs == best_contact && cur_area[other] == best_area &&
             (best_group == 0 || other < best_group))) {
          best_contact = pairs;
          best_area = cur_area[other];
          best_group = other;
        }
      }
      if (best_group != 0) {
        pick = id;
        dest = best_group;
      }
    }
    if (pick == 0) break;
    for (std::uint32_t& v : work.data) {
      if (v == pick) v = dest;
    }
    absorbed[pick] = true;
  }

  if (config.drop_orphans) {
    for (std::uint32_t& v : work.data) {
      if (v != 0 && !accepted[v] && !absorbed[v]) v = 0;
    }
  }

  InstanceGrid out(h, w, 0);
  std::vector<std::uint32_t> renumber(n + 1, 0);
  std::uint32_t next = 1;
  for (std::size_t p = 0; p < work.data.size(); ++p) {
    const std::uint32_t id = work.data[p];
    if (id == 0) continue;
    if (renumber[id] == 0) renumber[id] = next++;
    out.data[p] = renumber[id];
  }
  return out;
}

bool same_partition(const InstanceGrid& a, const InstanceGrid& b) {
  if (a.height != b.height || a.width != b.width) return false;
  std::map<std::uint32_t, std::uint32_t> fwd, bwd;
  for (std::size_t p = 0; p < a.data.size(); ++p) {
    const std::uint32_t x = a.data[p], y = b.data[p];
    if ((x == 0) != (y == 0)) return false;
    if (x == 0) continue;
    const auto f = fwd.emplace(x, y);
    if (!f.second && f.first->second != y) return false;
    const auto g = bwd.emplace(y, x);
    if (!g.second && g.first->second != x) return false;
  }
  return true;
}

}  // namespace partgroup
