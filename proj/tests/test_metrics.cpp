#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <tuple>
#include <vector>

#include "partgroup/metrics.hpp"
#include "partgroup/synthgen.hpp"

using namespace partgroup;

namespace {

LabelGrid random_labels(SplitMix64& rng, std::uint32_t h, std::uint32_t w,
                        std::uint32_t k) {
  LabelGrid grid(h, w);
  for (auto& v : grid.data) v = std::uint8_t(rng.below(k));
  return grid;
}

// Reference greedy matcher: all in-radius pairs sorted by squared distance,
// then pred scan order, then gt scan order; one-to-one sweep.
std::pair<std::uint64_t, std::uint64_t> greedy_oracle(
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& preds,
    const std::vector<std::pair<std::uint32_t, std::uint32_t>>& gts,
    double radius) {
  struct Pair {
    std::uint64_t d2;
    std::size_t pred, gt;
  };
  std::vector<Pair> pairs;
  for (std::size_t p = 0; p < preds.size(); ++p) {
    for (std::size_t g = 0; g < gts.size(); ++g) {
      const std::int64_t dr = std::int64_t(preds[p].first) - gts[g].first;
      const std::int64_t dc = std::int64_t(preds[p].second) - gts[g].second;
      const std::uint64_t d2 = std::uint64_t(dr * dr + dc * dc);
      if (double(d2) <= radius * radius) pairs.push_back({d2, p, g});
    }
  }
  std::sort(pairs.begin(), pairs.end(), [](const Pair& a, const Pair& b) {
    return std::tie(a.d2, a.pred, a.gt) < std::tie(b.d2, b.pred, b.gt);
  });
  std::vector<bool> pred_used(preds.size()), gt_used(gts.size());
  std::uint64_t matched = 0;
  for (const Pair& pair : pairs) {
    if (pred_used[pair.pred] || gt_used[pair.gt]) continue;
    pred_used[pair.pred] = gt_used[pair.gt] = true;
    ++matched;
  }
  return {matched, matched};
}

// Reference AP: same ranking and matching rules, written as directly as
// possible with double arithmetic throughout.
double ap_oracle(const std::vector<ApImage>& images,
                 std::vector<ScoredInstance> preds, double threshold) {
  std::sort(preds.begin(), preds.end(), [](const ScoredInstance& a,
                                           const ScoredInstance& b) {
    if (a.score != b.score) return a.score > b.score;
    if (a.area != b.area) return a.area > b.area;
    if (a.image_id != b.image_id) return a.image_id < b.image_id;
    return a.instance_id < b.instance_id;
  });

  std::map<std::string, const ApImage*> by_id;
  std::uint64_t total_gt = 0;
  std::map<std::string, std::vector<bool>> gt_used;
  for (const ApImage& image : images) {
    by_id[image.id] = &image;
    const std::uint32_t n = image.gt.max_id();
    total_gt += n;
    gt_used[image.id] = std::vector<bool>(n + 1, false);
  }
  if (total_gt == 0) return 0.0;

  std::vector<int> tp;
  for (const ScoredInstance& pred : preds) {
    const ApImage& image = *by_id.at(pred.image_id);
    const std::uint32_t gt_count = image.gt.max_id();
    std::vector<std::uint64_t> inter(gt_count + 1, 0), gt_area(gt_count + 1, 0);
    std::uint64_t pred_area = 0;
    for (std::size_t i = 0; i < image.pred.data.size(); ++i) {
      const bool in_pred = image.pred.data[i] == pred.instance_id;
      const std::uint32_t g = image.gt.data[i];
      if (g != 0) ++gt_area[g];
      if (in_pred) {
        ++pred_area;
        if (g != 0) ++inter[g];
      }
    }
    double best_iou = -1.0;
    std::uint32_t best_gt = 0;
    for (std::uint32_t g = 1; g <= gt_count; ++g) {
      if (gt_used.at(pred.image_id)[g]) continue;
      const double uni = double(pred_area + gt_area[g] - inter[g]);
      const double iou = uni > 0 ? double(inter[g]) / uni : 0.0;
      if (iou > best_iou) {
        best_iou = iou;
        best_gt = g;
      }
    }
    if (best_gt != 0 && best_iou >= threshold) {
      gt_used.at(pred.image_id)[best_gt] = true;
      tp.push_back(1);
    } else {
      tp.push_back(0);
    }
  }

  std::vector<double> precision(tp.size()), recall(tp.size());
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    hits += tp[i];
    precision[i] = double(hits) / double(i + 1);
    recall[i] = double(hits) / double(total_gt);
  }
  for (std::size_t i = precision.size(); i-- > 1;) {
    precision[i - 1] = std::max(precision[i - 1], precision[i]);
  }
  double ap = 0.0;
  double prev_recall = 0.0;
  for (std::size_t i = 0; i < tp.size(); ++i) {
    if (tp[i]) {
      ap += (recall[i] - prev_recall) * precision[i];
      prev_recall = recall[i];
    }
  }
  return ap;
}

InstanceGrid grid_from(std::uint32_t h, std::uint32_t w,
                       std::vector<std::uint32_t> v) {
  return InstanceGrid(h, w, std::move(v));
}

}  // namespace

TEST_CASE("perfect predictions fill the diagonal") {
  SplitMix64 rng(0x10Cu);
  const LabelGrid grid = random_labels(rng, 4, 4, 5);
  ConfusionMatrix acc(5);
  accumulate_confusion(grid, grid, acc);
  CHECK(acc.total() == 16);
  for (std::uint32_t i = 0; i < 5; ++i) {
    for (std::uint32_t j = 0; j < 5; ++j) {
      if (i != j) CHECK(acc.at(i, j) == 0);
    }
  }
  const IouSummary iou = iou_from_confusion(acc);
  CHECK(iou.mean == 1.0);
}

TEST_CASE("a uniform misprediction lands in one off-diagonal cell") {
  ConfusionMatrix acc(3);
  accumulate_confusion(LabelGrid(4, 4, std::uint8_t(1)),
                       LabelGrid(4, 4, std::uint8_t(2)), acc);
  CHECK(acc.at(2, 1) == 16);
  CHECK(acc.total() == 16);
}

TEST_CASE("one-pixel overlap of two 2-pixel sets gives IoU one third") {
  const LabelGrid gt(1, 3, std::vector<std::uint8_t>{1, 1, 0});
  const LabelGrid pred(1, 3, std::vector<std::uint8_t>{0, 1, 1});
  ConfusionMatrix acc(2);
  accumulate_confusion(pred, gt, acc);
  const IouSummary iou = iou_from_confusion(acc);
  CHECK(iou.per_class[1] == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
  CHECK(iou.per_class[0] == 0.0);
  CHECK(iou.mean == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
}

TEST_CASE("confusion accumulation matches per-pixel counting") {
  SplitMix64 rng(0xCAFEu);
  for (int trial = 0; trial < 20; ++trial) {
    const LabelGrid pred = random_labels(rng, 9, 7, 4);
    const LabelGrid gt = random_labels(rng, 9, 7, 4);
    ConfusionMatrix acc(4);
    accumulate_confusion(pred, gt, acc);
    std::vector<std::uint64_t> want(16, 0);
    for (std::size_t i = 0; i < pred.pixels(); ++i) {
      ++want[std::size_t(gt.data[i]) * 4 + pred.data[i]];
    }
    CHECK(acc.counts == want);
  }
}

TEST_CASE("iou matches the scalar formula on random matrices") {
  SplitMix64 rng(0xF00Du);
  for (int trial = 0; trial < 30; ++trial) {
    ConfusionMatrix acc(5);
    for (auto& v : acc.counts) v = rng.below(40);
    const IouSummary iou = iou_from_confusion(acc);
    double sum = 0.0;
    int valid = 0;
    for (std::uint32_t c = 0; c < 5; ++c) {
      std::uint64_t row = 0, col = 0;
      for (std::uint32_t j = 0; j < 5; ++j) {
        row += acc.at(c, j);
        col += acc.at(j, c);
      }
      const std::uint64_t uni = row + col - acc.at(c, c);
      if (uni == 0) {
        CHECK_FALSE(iou.valid[c]);
        continue;
      }
      const double want = double(acc.at(c, c)) / double(uni);
      CHECK(iou.per_class[c] == doctest::Approx(want).epsilon(1e-12));
      sum += want;
      ++valid;
    }
    if (valid > 0) {
      CHECK(iou.mean == doctest::Approx(sum / valid).epsilon(1e-12));
    }
  }
}

TEST_CASE("confusion rejects labels at or above K and bad dimensions") {
  ConfusionMatrix acc(2);
  CHECK_THROWS_AS(accumulate_confusion(LabelGrid(1, 1, std::uint8_t(2)),
                                       LabelGrid(1, 1, std::uint8_t(0)), acc),
                  Error);
  CHECK_THROWS_AS(accumulate_confusion(LabelGrid(1, 2, std::uint8_t(0)),
                                       LabelGrid(2, 1, std::uint8_t(0)), acc),
                  Error);
}

TEST_CASE("exact edge prediction scores perfectly at every threshold") {
  BinaryEdgeGrid gt(8, 8);
  gt.set(2, 3, true);
  gt.set(4, 4, true);
  gt.set(6, 1, true);
  const ProbGrid pred = lift_edges(gt);
  const EdgeEvalConfig cfg;
  const std::vector<EdgePrCounts> counts = edge_pr(pred, gt, cfg);
  REQUIRE(counts.size() == cfg.thresholds.size());
  for (const EdgePrCounts& c : counts) {
    CHECK(c.total_pred == 3);
    CHECK(c.matched_pred == 3);
    CHECK(c.matched_gt == 3);
    CHECK(c.total_gt == 3);
  }
}

TEST_CASE("a one-pixel displacement still matches inside the radius") {
  BinaryEdgeGrid gt(10, 10);
  gt.set(5, 4, true);
  ProbGrid pred(10, 10, 0.0f);
  pred.at(5, 5) = 1.0f;
  EdgeEvalConfig cfg;
  cfg.match_radius_fraction = 0.12;  // 1.7 pixels on the 10x10 diagonal
  const std::vector<EdgePrCounts> counts = edge_pr(pred, gt, cfg);
  for (const EdgePrCounts& c : counts) {
    CHECK(c.matched_pred == 1);
    CHECK(c.matched_gt == 1);
  }

  cfg.match_radius_fraction = 0.0075;  // back to a sub-pixel radius
  const std::vector<EdgePrCounts> tight = edge_pr(pred, gt, cfg);
  for (const EdgePrCounts& c : tight) {
    CHECK(c.matched_pred == 0);
    CHECK(c.total_pred == 1);
  }
}

TEST_CASE("edge matching equals the direct greedy oracle") {
  SplitMix64 rng(0xEDCEu);
  for (int trial = 0; trial < 40; ++trial) {
    const std::uint32_t h = rng.range(4, 14);
    const std::uint32_t w = rng.range(4, 14);
    ProbGrid pred(h, w, 0.0f);
    BinaryEdgeGrid gt(h, w);
    std::vector<std::pair<std::uint32_t, std::uint32_t>> pred_px, gt_px;
    for (std::uint32_t r = 0; r < h; ++r) {
      for (std::uint32_t c = 0; c < w; ++c) {
        if (rng.below(100) < 12) {
          pred.at(r, c) = 1.0f;
          pred_px.push_back({r, c});
        }
        if (rng.below(100) < 12) {
          gt.set(r, c, true);
          gt_px.push_back({r, c});
        }
      }
    }
    EdgeEvalConfig cfg;
    cfg.match_radius_fraction = 0.15;
    const double radius =
        cfg.match_radius_fraction * std::sqrt(double(h) * h + double(w) * w);
    const auto [want_pred, want_gt] = greedy_oracle(pred_px, gt_px, radius);
    const std::vector<EdgePrCounts> counts = edge_pr(pred, gt, cfg);
    for (const EdgePrCounts& c : counts) {
      CHECK(c.matched_pred == want_pred);
      CHECK(c.matched_gt == want_gt);
      CHECK(c.total_pred == pred_px.size());
      CHECK(c.total_gt == gt_px.size());
      CHECK(c.matched_pred <= c.total_gt);
      CHECK(c.matched_gt <= c.total_pred);
    }
  }
}

TEST_CASE("threshold sweep drops low-activation predictions") {
  ProbGrid pred(4, 4, 0.0f);
  pred.at(1, 1) = 0.3f;
  pred.at(2, 2) = 0.7f;
  BinaryEdgeGrid gt(4, 4);
  gt.set(1, 1, true);
  gt.set(2, 2, true);
  const EdgeEvalConfig cfg;
  const std::vector<EdgePrCounts> counts = edge_pr(pred, gt, cfg);
  for (std::size_t t = 0; t < cfg.thresholds.size(); ++t) {
    const std::uint64_t want = cfg.thresholds[t] < 0.3 ? 2
                               : cfg.thresholds[t] < 0.7 ? 1
                                                         : 0;
    CHECK(counts[t].total_pred == want);
    CHECK(counts[t].matched_pred == want);
  }
}

TEST_CASE("perfect single image gives ODS and OIS of one") {
  BinaryEdgeGrid gt(6, 6);
  gt.set(3, 3, true);
  const std::vector<std::vector<EdgePrCounts>> per_image{
      edge_pr(lift_edges(gt), gt, {})};
  const OdsOis scores = ods_ois(per_image);
  CHECK(scores.ods == 1.0);
  CHECK(scores.ois == 1.0);
}

TEST_CASE("an empty prediction scores zero") {
  BinaryEdgeGrid gt(6, 6);
  gt.set(2, 2, true);
  const std::vector<std::vector<EdgePrCounts>> per_image{
      edge_pr(ProbGrid(6, 6, 0.0f), gt, {})};
  const OdsOis scores = ods_ois(per_image);
  CHECK(scores.ods == 0.0);
  CHECK(scores.ois == 0.0);
}

TEST_CASE("ods and ois match a hand-rolled sweep on two images") {
  SplitMix64 rng(0x0D50u);
  std::vector<std::vector<EdgePrCounts>> per_image;
  for (int image = 0; image < 2; ++image) {
    ProbGrid pred(8, 8, 0.0f);
    BinaryEdgeGrid gt(8, 8);
    for (std::uint32_t r = 0; r < 8; ++r) {
      for (std::uint32_t c = 0; c < 8; ++c) {
        if (rng.below(100) < 20) pred.at(r, c) = float(rng.range(1, 99)) / 100.0f;
        if (rng.below(100) < 20) gt.set(r, c, true);
      }
    }
    per_image.push_back(edge_pr(pred, gt, {}));
  }
  const OdsOis scores = ods_ois(per_image);

  const std::size_t nt = per_image[0].size();
  double best_dataset = 0.0;
  double ois_sum = 0.0;
  for (const auto& counts : per_image) {
    double best = 0.0;
    for (const EdgePrCounts& c : counts) best = std::max(best, f_measure(c));
    ois_sum += best;
  }
  for (std::size_t t = 0; t < nt; ++t) {
    EdgePrCounts sum;
    for (const auto& counts : per_image) {
      sum.matched_pred += counts[t].matched_pred;
      sum.total_pred += counts[t].total_pred;
      sum.matched_gt += counts[t].matched_gt;
      sum.total_gt += counts[t].total_gt;
    }
    best_dataset = std::max(best_dataset, f_measure(sum));
  }
  CHECK(scores.ods == doctest::Approx(best_dataset).epsilon(1e-12));
  CHECK(scores.ois == doctest::Approx(ois_sum / 2.0).epsilon(1e-12));
}

TEST_CASE("instance scores average the per-pixel maximum") {
  ParsingResult result;
  result.instances = grid_from(2, 2, {1, 1, 0, 0});
  result.parts = LabelGrid(2, 2, std::vector<std::uint8_t>{1, 1, 0, 0});
  ScoreStack stack(2, 2, 2, 0.05f);
  stack.at(1, 0, 0) = 0.9f;
  stack.at(1, 0, 1) = 0.9f;
  const std::vector<ScoredInstance> scored = score_instances(result, &stack, "im");
  REQUIRE(scored.size() == 1);
  // Both pixels peak at the stored f32 value, so the mean is exactly that.
  CHECK(scored[0].score == double(0.9f));
  CHECK(scored[0].area == 2);
}

TEST_CASE("without scores an instance is ranked by relative area") {
  ParsingResult result;
  result.instances = InstanceGrid(10, 10, std::uint32_t(0));
  for (std::uint32_t r = 0; r < 5; ++r) {
    for (std::uint32_t c = 0; c < 10; ++c) result.instances.at(r, c) = 1;
  }
  const std::vector<ScoredInstance> scored = score_instances(result, nullptr, "im");
  REQUIRE(scored.size() == 1);
  CHECK(scored[0].score == doctest::Approx(0.5).epsilon(1e-12));
}

TEST_CASE("stack scoring matches a per-pixel averaging loop") {
  SplitMix64 rng(0x57ACu);
  ParsingResult result;
  result.instances = InstanceGrid(8, 8, std::uint32_t(0));
  for (std::uint32_t r = 0; r < 8; ++r) {
    for (std::uint32_t c = 0; c < 8; ++c) {
      result.instances.at(r, c) = c < 3 ? 1 : (c < 6 ? 2 : 0);
    }
  }
  ScoreStack stack(8, 8, 3);
  for (auto& v : stack.data) v = float(rng.below(1000)) / 1000.0f;
  const std::vector<ScoredInstance> scored = score_instances(result, &stack, "x");
  REQUIRE(scored.size() == 2);
  for (std::uint32_t id = 1; id <= 2; ++id) {
    double sum = 0.0;
    std::uint64_t n = 0;
    for (std::uint32_t r = 0; r < 8; ++r) {
      for (std::uint32_t c = 0; c < 8; ++c) {
        if (result.instances.at(r, c) != id) continue;
        float best = stack.at(0, r, c);
        for (std::uint32_t k = 1; k < 3; ++k) {
          best = std::max(best, stack.at(k, r, c));
        }
        sum += best;
        ++n;
      }
    }
    const auto it = std::find_if(scored.begin(), scored.end(),
                                 [&](const ScoredInstance& s) {
                                   return s.instance_id == id;
                                 });
    REQUIRE(it != scored.end());
    CHECK(it->score == doctest::Approx(sum / double(n)).epsilon(1e-6));
  }
}

TEST_CASE("an IoU of 0.55 passes threshold 0.5 and fails 0.6") {
  std::vector<std::uint32_t> gt_px(20, 0), pred_px(20, 1);
  for (std::size_t i = 0; i < 11; ++i) gt_px[i] = 1;  // inter 11, union 20
  std::vector<ApImage> images;
  images.push_back({"im", grid_from(1, 20, pred_px), grid_from(1, 20, gt_px)});
  const std::vector<ScoredInstance> preds{{"im", 1, 20, 0.8}};

  const ApResult at_05 = ap_r(images, preds, std::vector<double>{0.5});
  CHECK(at_05.ap[0] == 1.0);
  const ApResult at_06 = ap_r(images, preds, std::vector<double>{0.6});
  CHECK(at_06.ap[0] == 0.0);
}

TEST_CASE("predictions identical to ground truth score AP one everywhere") {
  SplitMix64 rng(0xAB0Du);
  std::vector<ApImage> images;
  std::vector<ScoredInstance> preds;
  for (int image = 0; image < 3; ++image) {
    const SceneConfig cfg{.seed = 0x900D + std::uint64_t(image)};
    const Scene scene = gen_scene(cfg);
    const std::string id = "im" + std::to_string(image);
    ParsingResult result;
    result.instances = scene.gt_instances;
    const auto scored = score_instances(result, nullptr, id);
    preds.insert(preds.end(), scored.begin(), scored.end());
    images.push_back({id, scene.gt_instances, scene.gt_instances});
  }
  const ApResult ap = ap_r(images, preds, default_ap_thresholds());
  REQUIRE(ap.ap.size() == 9);
  for (double v : ap.ap) CHECK(v == 1.0);
  CHECK(ap.ap_vol == 1.0);
}

TEST_CASE("ap matches the reference implementation on constructed scenes") {
  SplitMix64 rng(0xA9A9u);
  for (int trial = 0; trial < 25; ++trial) {
    std::vector<ApImage> images;
    std::vector<ScoredInstance> preds;
    const int n_images = 1 + int(rng.below(3));
    for (int image = 0; image < n_images; ++image) {
      const std::uint32_t h = rng.range(6, 12);
      const std::uint32_t w = rng.range(6, 12);
      InstanceGrid pred(h, w), gt(h, w);
      const std::uint32_t n_pred = rng.range(1, 3);
      const std::uint32_t n_gt = rng.range(1, 3);
      for (std::uint32_t r = 0; r < h; ++r) {
        for (std::uint32_t c = 0; c < w; ++c) {
          pred.at(r, c) = rng.below(n_pred + 1);
          gt.at(r, c) = rng.below(n_gt + 1);
        }
      }
      const std::string id = "im" + std::to_string(image);
      for (std::uint32_t i = 1; i <= pred.max_id(); ++i) {
        std::uint32_t area = 0;
        for (std::uint32_t v : pred.data) area += v == i ? 1 : 0;
        if (area == 0) continue;
        preds.push_back({id, i, area, double(rng.range(1, 100)) / 100.0});
      }
      images.push_back({id, std::move(pred), std::move(gt)});
    }
    bool any_gt = false;
    for (const ApImage& image : images) any_gt |= image.gt.max_id() > 0;
    if (!any_gt) continue;

    const std::vector<double> thresholds{0.1, 0.3, 0.5, 0.7, 0.9};
    const ApResult got = ap_r(images, preds, thresholds);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      const double want = ap_oracle(images, preds, thresholds[t]);
      CHECK(got.ap[t] == doctest::Approx(want).epsilon(1e-9));
    }
    for (std::size_t t = 1; t < thresholds.size(); ++t) {
      CHECK(got.ap[t] <= got.ap[t - 1] + 1e-12);  // monotone in the threshold
    }

    std::vector<ScoredInstance> scaled = preds;
    for (auto& s : scaled) s.score *= 7.5;
    const ApResult rescored = ap_r(images, scaled, thresholds);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
      CHECK(rescored.ap[t] == got.ap[t]);
    }
  }
}

TEST_CASE("ap validates its references") {
  std::vector<ApImage> images;
  images.push_back({"im", grid_from(1, 2, {1, 0}), grid_from(1, 2, {1, 0})});
  const std::vector<ScoredInstance> unknown_image{{"other", 1, 1, 0.5}};
  CHECK_THROWS_AS(ap_r(images, unknown_image, default_ap_thresholds()), Error);
  const std::vector<ScoredInstance> unknown_id{{"im", 9, 1, 0.5}};
  CHECK_THROWS_AS(ap_r(images, unknown_id, default_ap_thresholds()), Error);
  CHECK_THROWS_AS(ap_r(images, {}, std::vector<double>{}), Error);
}
