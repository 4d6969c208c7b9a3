#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "partgroup/partition.hpp"
#include "partgroup/raster.hpp"

namespace partgroup {

struct ConfusionMatrix {
  std::uint32_t k = 0;
  std::vector<std::uint64_t> counts;  // row = ground truth, column = prediction

  explicit ConfusionMatrix(std::uint32_t classes);
  std::uint64_t& at(std::uint32_t gt, std::uint32_t pred);
  std::uint64_t at(std::uint32_t gt, std::uint32_t pred) const;
  std::uint64_t total() const;
};

void accumulate_confusion(const LabelGrid& pred, const LabelGrid& gt,
                          ConfusionMatrix& acc);

struct IouSummary {
  std::vector<double> per_class;  // zero for classes with empty union
  std::vector<bool> valid;        // false where the union is empty
  double mean = 0.0;              // over valid classes, background included
};

IouSummary iou_from_confusion(const ConfusionMatrix& acc);

struct EdgeEvalConfig {
  double match_radius_fraction = 0.0075;  // of the image diagonal
  std::vector<double> thresholds = default_thresholds();

  static std::vector<double> default_thresholds();  // 0.01, 0.02, ..., 0.99
  void validate() const;
};

struct EdgePrCounts {
  std::uint64_t matched_pred = 0;
  std::uint64_t total_pred = 0;
  std::uint64_t matched_gt = 0;
  std::uint64_t total_gt = 0;
};

// Per-threshold match counts for one image; aggregate across images by
// elementwise summation before computing dataset-level figures.
std::vector<EdgePrCounts> edge_pr(const ProbGrid& pred_thinned,
                                  const BinaryEdgeGrid& gt,
                                  const EdgeEvalConfig& config);

struct OdsOis {
  double ods = 0.0;
  double ois = 0.0;
};

double f_measure(const EdgePrCounts& counts);

OdsOis ods_ois(const std::vector<std::vector<EdgePrCounts>>& per_image);

struct ScoredInstance {
  std::string image_id;
  std::uint32_t instance_id = 0;  // id inside that image's predicted grid
  std::uint32_t area = 0;
  double score = 0.0;
};

// Confidence per predicted instance: mean over its pixels of the per-pixel
// maximum class score, or instance area over image area without a stack.
// Sorted by descending score, ties by larger area then smaller id.
std::vector<ScoredInstance> score_instances(const ParsingResult& result,
                                            const ScoreStack* part_scores,
                                            const std::string& image_id);

struct ApImage {
  std::string id;
  InstanceGrid pred;
  InstanceGrid gt;
};

struct ApResult {
  std::vector<double> thresholds;
  std::vector<double> ap;  // one value per threshold
  double ap_vol = 0.0;
  std::uint64_t images = 0;
  std::uint64_t gt_instances = 0;
  std::uint64_t pred_instances = 0;
};

std::vector<double> default_ap_thresholds();  // 0.1, 0.2, ..., 0.9

ApResult ap_r(std::span<const ApImage> images, std::span<const ScoredInstance> preds,
              std::span<const double> thresholds);

struct EvalReport {
  bool has_seg = false;
  std::vector<double> per_class_iou;
  std::vector<bool> class_valid;
  double mean_iou = 0.0;

  bool has_edge = false;
  double ods = 0.0;
  double ois = 0.0;

  bool has_inst = false;
  std::vector<double> ap_thresholds;
  std::vector<double> ap;
  double ap_vol = 0.0;

  std::uint64_t images = 0;
  std::uint64_t gt_instances = 0;
  std::uint64_t pred_instances = 0;
};

}  // namespace partgroup
