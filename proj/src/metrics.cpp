#include "partgroup/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <unordered_map>

namespace partgroup {

namespace {

void check_same_shape(std::uint32_t ah, std::uint32_t aw, std::uint32_t bh,
                      std::uint32_t bw) {
  if (ah != bh || aw != bw) throw_validation("grids differ in shape");
}

}  // namespace

ConfusionMatrix::ConfusionMatrix(std::uint32_t classes) : k(classes) {
  if (k == 0) throw_validation("confusion matrix needs at least one class");
  counts.assign(std::size_t(k) * k, 0);
}

std::uint64_t& ConfusionMatrix::at(std::uint32_t gt, std::uint32_t pred) {
  return counts[std::size_t(gt) * k + pred];
}

std::uint64_t ConfusionMatrix::at(std::uint32_t gt, std::uint32_t pred) const {
  return counts[std::size_t(gt) * k + pred];
}

std::uint64_t ConfusionMatrix::total() const {
  std::uint64_t sum = 0;
  for (std::uint64_t v : counts) sum += v;
  return sum;
}

void accumulate_confusion(const LabelGrid& pred, const LabelGrid& gt,
                          ConfusionMatrix& acc) {
  check_same_shape(pred.height, pred.width, gt.height, gt.width);
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const std::uint8_t p = pred.data[i];
    const std::uint8_t g = gt.data[i];
    if (p >= acc.k || g >= acc.k) throw_validation("label outside class range");
    ++acc.at(g, p);
  }
}

IouSummary iou_from_confusion(const ConfusionMatrix& acc) {
  if (acc.total() == 0) throw_validation("confusion matrix is empty");
  IouSummary summary;
  summary.per_class.assign(acc.k, 0.0);
  summary.valid.assign(acc.k, false);
  double sum = 0.0;
  std::uint32_t valid_count = 0;
  for (std::uint32_t c = 0; c < acc.k; ++c) {
    std::uint64_t row = 0, col = 0;
    for (std::uint32_t j = 0; j < acc.k; ++j) {
      row += acc.at(c, j);
      col += acc.at(j, c);
    }
    const std::uint64_t inter = acc.at(c, c);
    const std::uint64_t uni = row + col - inter;
    if (uni == 0) continue;
    summary.per_class[c] = double(inter) / double(uni);
    summary.valid[c] = true;
    sum += summary.per_class[c];
    ++valid_count;
  }
  summary.mean = valid_count ? sum / valid_count : 0.0;
  return summary;
}

std::vector<double> EdgeEvalConfig::default_thresholds() {
  std::vector<double> t(99);
  for (int i = 1; i <= 99; ++i) t[i - 1] = i / 100.0;
  return t;
}

void EdgeEvalConfig::validate() const {
  if (!(match_radius_fraction > 0.0)) {
    throw_validation("match radius fraction must be positive");
  }
  if (thresholds.empty()) throw_validation("edge threshold list is empty");
  double prev = 0.0;
  for (double t : thresholds) {
    if (!(t > prev && t < 1.0)) {
      throw_validation("edge thresholds must be strictly increasing within (0, 1)");
    }
    prev = t;
  }
}

namespace {

struct EdgePoint {
  std::uint32_t r = 0;
  std::uint32_t c = 0;
};

// Greedy nearest-first one-to-one matching between two pixel sets; ties are
// broken by enumeration order (row-major on each side).
std::uint64_t greedy_match_count(const std::vector<EdgePoint>& pred,
                                 const std::vector<EdgePoint>& gt, double radius) {
  if (pred.empty() || gt.empty()) return 0;
  const std::int64_t reach = std::int64_t(std::floor(radius));
  const double r2 = radius * radius;

  // gt points grouped per row; row-major enumeration keeps columns sorted.
  std::map<std::uint32_t, std::vector<std::pair<std::uint32_t, std::uint32_t>>> by_row;
  for (std::uint32_t i = 0; i < gt.size(); ++i) {
    by_row[gt[i].r].emplace_back(gt[i].c, i);
  }

  struct Pair {
    std::uint64_t d2;
    std::uint32_t pred_idx;
    std::uint32_t gt_idx;
  };
  std::vector<Pair> pairs;
  for (std::uint32_t i = 0; i < pred.size(); ++i) {
    const std::int64_t pr = pred[i].r, pc = pred[i].c;
    for (std::int64_t row = pr - reach; row <= pr + reach; ++row) {
      if (row < 0) continue;
      const auto it = by_row.find(std::uint32_t(row));
      if (it == by_row.end()) continue;
      const auto& cols = it->second;
      const std::int64_t lo = pc - reach;
      auto start = std::lower_bound(
          cols.begin(), cols.end(), lo,
          [](const auto& entry, std::int64_t v) { return std::int64_t(entry.first) < v; });
      for (auto p = start; p != cols.end() && std::int64_t(p->first) <= pc + reach; ++p) {
        const std::int64_t dr = row - pr;
        const std::int64_t dc = std::int64_t(p->first) - pc;
        const std::uint64_t d2 = std::uint64_t(dr * dr + dc * dc);
        if (double(d2) <= r2) pairs.push_back({d2, i, p->second});
      }
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    if (a.d2 != b.d2) return a.d2 < b.d2;
    if (a.pred_idx != b.pred_idx) return a.pred_idx < b.pred_idx;
    return a.gt_idx < b.gt_idx;
  });

  std::vector<bool> pred_used(pred.size(), false), gt_used(gt.size(), false);
  std::uint64_t matched = 0;
  for (const Pair& p : pairs) {
    if (pred_used[p.pred_idx] || gt_used[p.gt_idx]) continue;
    pred_used[p.pred_idx] = true;
    gt_used[p.gt_idx] = true;
    ++matched;
  }
  return matched;
}

}  // namespace

double f_measure(const EdgePrCounts& counts) {
  const double p =
      counts.total_pred ? double(counts.matched_pred) / double(counts.total_pred) : 0.0;
  const double r =
      counts.total_gt ? double(counts.matched_gt) / double(counts.total_gt) : 0.0;
  return (p + r > 0.0) ? 2.0 * p * r / (p + r) : 0.0;
}

std::vector<EdgePrCounts> edge_pr(const ProbGrid& pred_thinned,
                                  const BinaryEdgeGrid& gt,
                                  const EdgeEvalConfig& config) {
  check_same_shape(pred_thinned.height, pred_thinned.width, gt.height, gt.width);
  config.validate();
  const double diagonal =
      std::hypot(double(pred_thinned.height), double(pred_thinned.width));
  const double radius = config.match_radius_fraction * diagonal;

  std::vector<EdgePoint> gt_points;
  for (std::uint32_t r = 0; r < gt.height; ++r) {
    for (std::uint32_t c = 0; c < gt.width; ++c) {
      if (gt.at(r, c)) gt_points.push_back({r, c});
    }
  }

  struct Candidate {
    float value;
    std::uint32_t r, c;
  };
  std::vector<Candidate> candidates;
  for (std::uint32_t r = 0; r < pred_thinned.height; ++r) {
    for (std::uint32_t c = 0; c < pred_thinned.width; ++c) {
      const float v = pred_thinned.at(r, c);
      if (v > 0.0f) candidates.push_back({v, r, c});
    }
  }

  std::vector<EdgePrCounts> result(config.thresholds.size());
  std::size_t prev_size = std::size_t(-1);
  std::uint64_t prev_matched = 0;
  for (std::size_t t = 0; t < config.thresholds.size(); ++t) {
    // f32 precision, matching binarize_edges: activations are stored as f32.
    const float threshold = float(config.thresholds[t]);
    std::vector<EdgePoint> pred_points;
    for (const Candidate& cand : candidates) {
      if (cand.value > threshold) pred_points.push_back({cand.r, cand.c});
    }
    // Thresholds only shrink the set, so an unchanged size means the same set.
    std::uint64_t matched;
    if (pred_points.size() == prev_size) {
      matched = prev_matched;
    } else {
      matched = greedy_match_count(pred_points, gt_points, radius);
      prev_size = pred_points.size();
      prev_matched = matched;
    }
    result[t] = {matched, pred_points.size(), matched, gt_points.size()};
  }
  return result;
}

OdsOis ods_ois(const std::vector<std::vector<EdgePrCounts>>& per_image) {
  if (per_image.empty()) throw_validation("edge evaluation needs at least one image");
  const std::size_t nt = per_image.front().size();
  if (nt == 0) throw_validation("edge evaluation needs at least one threshold");
  for (const auto& image : per_image) {
    if (image.size() != nt) {
      throw_validation("images evaluated with different threshold grids");
    }
  }

  OdsOis out;
  for (std::size_t t = 0; t < nt; ++t) {
    EdgePrCounts sum;
    for (const auto& image : per_image) {
      sum.matched_pred += image[t].matched_pred;
      sum.total_pred += image[t].total_pred;
      sum.matched_gt += image[t].matched_gt;
      sum.total_gt += image[t].total_gt;
    }
    out.ods = std::max(out.ods, f_measure(sum));
  }
  double ois_sum = 0.0;
  for (const auto& image : per_image) {
    double best = 0.0;
    for (const EdgePrCounts& counts : image) best = std::max(best, f_measure(counts));
    ois_sum += best;
  }
  out.ois = ois_sum / double(per_image.size());
  return out;
}

std::vector<ScoredInstance> score_instances(const ParsingResult& result,
                                            const ScoreStack* part_scores,
                                            const std::string& image_id) {
  const InstanceGrid& inst = result.instances;
  if (part_scores) {
    check_same_shape(inst.height, inst.width, part_scores->height, part_scores->width);
  }
  const std::uint32_t n = inst.max_id();
  std::vector<std::uint64_t> area(n + 1, 0);
  std::vector<double> score_sum(n + 1, 0.0);

  for (std::uint32_t r = 0; r < inst.height; ++r) {
    for (std::uint32_t c = 0; c < inst.width; ++c) {
      const std::uint32_t id = inst.at(r, c);
      if (id == 0) continue;
      ++area[id];
      if (part_scores) {
        double best = double(part_scores->at(0, r, c));
        for (std::uint32_t ch = 1; ch < part_scores->channels; ++ch) {
          best = std::max(best, double(part_scores->at(ch, r, c)));
        }
        score_sum[id] += best;
      }
    }
  }

  const double image_area = double(inst.height) * double(inst.width);
  std::vector<ScoredInstance> scored;
  for (std::uint32_t id = 1; id <= n; ++id) {
    if (area[id] == 0) continue;
    ScoredInstance s;
    s.image_id = image_id;
    s.instance_id = id;
    s.area = std::uint32_t(area[id]);
    s.score = part_scores ? score_sum[id] / double(area[id])
                          : double(area[id]) / image_area;
    scored.push_back(std::move(s));
  }
  std::sort(scored.begin(), scored.end(), [](const ScoredInstance& a,
                                             const ScoredInstance& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.area != b.area) return a.area > b.area;
    return a.instance_id < b.instance_id;
  });
  return scored;
}

std::vector<double> default_ap_thresholds() {
  std::vector<double> t(9);
  for (int i = 1; i <= 9; ++i) t[i - 1] = i / 10.0;
  return t;
}

ApResult ap_r(std::span<const ApImage> images, std::span<const ScoredInstance> preds,
              std::span<const double> thresholds) {
  if (thresholds.empty()) throw_validation("ap_r needs a non-empty threshold list");
  for (double t : thresholds) {
    if (!(t > 0.0 && t < 1.0)) throw_validation("ap thresholds must lie in (0, 1)");
  }

  struct ImageStats {
    std::vector<std::uint64_t> pred_area;  // indexed by id
    std::vector<std::uint64_t> gt_area;
    std::map<std::uint64_t, std::uint64_t> inter;  // pred_id * stride + gt_id
  };
  std::unordered_map<std::string, std::size_t> index;
  std::vector<ImageStats> stats(images.size());
  std::uint64_t total_gt = 0;

  for (std::size_t i = 0; i < images.size(); ++i) {
    const ApImage& image = images[i];
    if (!index.emplace(image.id, i).second) {
      throw_validation("duplicate image id in ap_r input");
    }
    check_same_shape(image.pred.height, image.pred.width, image.gt.height,
                     image.gt.width);
    ImageStats& st = stats[i];
    st.pred_area.assign(image.pred.max_id() + 1, 0);
    st.gt_area.assign(image.gt.max_id() + 1, 0);
    const std::uint64_t stride = std::uint64_t(image.gt.max_id()) + 1;
    for (std::size_t p = 0; p < image.pred.data.size(); ++p) {
      const std::uint32_t pid = image.pred.data[p];
      const std::uint32_t gid = image.gt.data[p];
      if (pid) ++st.pred_area[pid];
      if (gid) ++st.gt_area[gid];
      if (pid && gid) ++st.inter[std::uint64_t(pid) * stride + gid];
    }
    for (std::uint32_t g = 1; g < st.gt_area.size(); ++g) {
      if (st.gt_area[g] > 0) ++total_gt;
    }
  }
  if (total_gt == 0) throw_validation("ap_r needs at least one ground-truth instance");

  std::vector<ScoredInstance> order(preds.begin(), preds.end());
  std::sort(order.begin(), order.end(), [](const ScoredInstance& a,
                                           const ScoredInstance& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.area != b.area) return a.area > b.area;
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    return a.instance_id < b.instance_id;
  });
  for (const ScoredInstance& s : order) {
    const auto it = index.find(s.image_id);
    if (it == index.end()) throw_validation("prediction references unknown image");
    const ImageStats& st = stats[it->second];
    if (s.instance_id == 0 || s.instance_id >= st.pred_area.size() ||
        st.pred_area[s.instance_id] == 0) {
      throw_validation("prediction references unknown instance id");
    }
  }

  ApResult result;
  result.thresholds.assign(thresholds.begin(), thresholds.end());
  result.images = images.size();
  result.gt_instances = total_gt;
  result.pred_instances = order.size();

  for (double o : thresholds) {
    std::vector<std::vector<bool>> gt_used(images.size());
    for (std::size_t i = 0; i < images.size(); ++i) {
      gt_used[i].assign(stats[i].gt_area.size(), false);
    }

    std::vector<bool> is_tp(order.size(), false);
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      const ScoredInstance& s = order[rank];
      const std::size_t img = index.at(s.image_id);
      const ImageStats& st = stats[img];
      const std::uint64_t stride = st.gt_area.size();
      const std::uint64_t pid = s.instance_id;

      // Best-IoU unmatched ground truth; exact rational comparison, with the
      // smaller gt id winning ties via the ordered intersection map.
      std::uint64_t best_inter = 0, best_union = 1;
      std::uint32_t best_gt = 0;
      const auto lo = st.inter.lower_bound(pid * stride);
      const auto hi = st.inter.lower_bound((pid + 1) * stride);
      for (auto it = lo; it != hi; ++it) {
        const std::uint32_t gid = std::uint32_t(it->first % stride);
        if (gt_used[img][gid]) continue;
        const std::uint64_t inter = it->second;
        const std::uint64_t uni = st.pred_area[pid] + st.gt_area[gid] - inter;
        if (best_gt == 0 || inter * best_union > best_inter * uni) {
          best_inter = inter;
          best_union = uni;
          best_gt = gid;
        }
      }
      if (best_gt != 0 && double(best_inter) >= o * double(best_union)) {
        is_tp[rank] = true;
        gt_used[img][best_gt] = true;
      }
    }

    std::vector<double> precision(order.size());
    std::uint64_t tp = 0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (is_tp[rank]) ++tp;
      precision[rank] = double(tp) / double(rank + 1);
    }
    for (std::size_t rank = order.size(); rank-- > 1;) {
      precision[rank - 1] = std::max(precision[rank - 1], precision[rank]);
    }
    double ap = 0.0;
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
      if (is_tp[rank]) ap += precision[rank];
    }
    result.ap.push_back(ap / double(total_gt));
  }

  double volume = 0.0;
  for (double v : result.ap) volume += v;
  result.ap_vol = volume / double(result.ap.size());
  return result;
}

}  // namespace partgroup
