#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "partgroup/edge_ops.hpp"
#include "partgroup/metrics.hpp"
#include "partgroup/partition.hpp"
#include "partgroup/report.hpp"
#include "partgroup/synthgen.hpp"

namespace py = pybind11;
using namespace partgroup;

namespace {

template <typename T>
using CArray = py::array_t<T, py::array::c_style | py::array::forcecast>;

std::pair<std::uint32_t, std::uint32_t> dims2(const py::buffer_info& info) {
  if (info.ndim != 2) throw py::value_error("expected a 2-d array");
  return {std::uint32_t(info.shape[0]), std::uint32_t(info.shape[1])};
}

LabelGrid to_labels(const CArray<std::uint8_t>& arr) {
  const py::buffer_info info = arr.request();
  const auto [h, w] = dims2(info);
  const auto* p = static_cast<const std::uint8_t*>(info.ptr);
  return LabelGrid(h, w, std::vector<std::uint8_t>(p, p + info.size));
}

ProbGrid to_prob(const CArray<float>& arr) {
  const py::buffer_info info = arr.request();
  const auto [h, w] = dims2(info);
  const auto* p = static_cast<const float*>(info.ptr);
  return ProbGrid(h, w, std::vector<float>(p, p + info.size));
}

InstanceGrid to_instances(const CArray<std::uint32_t>& arr) {
  const py::buffer_info info = arr.request();
  const auto [h, w] = dims2(info);
  const auto* p = static_cast<const std::uint32_t*>(info.ptr);
  return InstanceGrid(h, w, std::vector<std::uint32_t>(p, p + info.size));
}

BinaryEdgeGrid to_mask(const CArray<std::uint8_t>& arr) {
  const py::buffer_info info = arr.request();
  const auto [h, w] = dims2(info);
  const auto* p = static_cast<const std::uint8_t*>(info.ptr);
  BinaryEdgeGrid mask(h, w);
  for (py::ssize_t i = 0; i < info.size; ++i) mask.data[i] = p[i] ? 1 : 0;
  return mask;
}

ScoreStack to_stack(const CArray<float>& arr) {
  const py::buffer_info info = arr.request();
  if (info.ndim != 3) throw py::value_error("expected a 3-d array (K, H, W)");
  const auto k = std::uint32_t(info.shape[0]);
  const auto h = std::uint32_t(info.shape[1]);
  const auto w = std::uint32_t(info.shape[2]);
  const auto* p = static_cast<const float*>(info.ptr);
  return ScoreStack(h, w, k, std::vector<float>(p, p + info.size));
}

template <typename T, typename Grid>
py::array_t<T> from_grid(const Grid& grid) {
  py::array_t<T> out({py::ssize_t(grid.height), py::ssize_t(grid.width)});
  std::copy(grid.data.begin(), grid.data.end(), out.mutable_data());
  return out;
}

PartitionConfig make_config(double edge_threshold, std::uint64_t min_area,
                            std::uint32_t min_part_labels, bool thin_edges,
                            bool drop_orphans) {
  PartitionConfig cfg;
  cfg.edge_threshold = edge_threshold;
  cfg.min_area = min_area;
  cfg.min_part_labels = min_part_labels;
  cfg.thin_edges = thin_edges;
  cfg.drop_orphans = drop_orphans;
  return cfg;
}

py::dict result_to_dict(const ParsingResult& result) {
  py::dict out;
  out["instances"] = from_grid<std::uint32_t>(result.instances);
  py::list regions;
  for (const Region& region : result.regions) {
    py::dict item;
    item["id"] = region.id;
    item["area"] = region.area;
    py::dict hist;
    for (const auto& [label, count] : region.part_histogram) {
      hist[py::int_(label)] = count;
    }
    item["part_histogram"] = hist;
    item["accepted"] = region.accepted;
    regions.append(item);
  }
  out["regions"] = regions;
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "instance partition of part segmentations";

  py::register_exception<Error>(m, "PartGroupError");

  m.def("version", [] { return std::string(kVersion); });

  m.def(
      "partition",
      [](const CArray<std::uint8_t>& labels, const CArray<float>& edges,
         double edge_threshold, std::uint64_t min_area,
         std::uint32_t min_part_labels, bool thin_edges, bool drop_orphans) {
        const PartitionConfig cfg = make_config(
            edge_threshold, min_area, min_part_labels, thin_edges, drop_orphans);
        return result_to_dict(partition(to_labels(labels), to_prob(edges), cfg));
      },
      py::arg("labels"), py::arg("edges"),
      py::arg("edge_threshold") = kDefaultEdgeThreshold, py::arg("min_area") = 30,
      py::arg("min_part_labels") = 2, py::arg("thin_edges") = true,
      py::arg("drop_orphans") = false,
      "Group a part-label grid into instances using an edge activation map.");

  m.def(
      "nms_thin",
      [](const CArray<float>& edges) {
        return from_grid<float>(nms_thin(to_prob(edges)));
      },
      py::arg("edges"), "Suppress non-maximal edge activations along the normal.");

  m.def(
      "binarize_edges",
      [](const CArray<float>& edges, double threshold) {
        return from_grid<std::uint8_t>(binarize_edges(to_prob(edges), threshold));
      },
      py::arg("edges"), py::arg("threshold") = kDefaultEdgeThreshold,
      "Edge points are activations strictly above the threshold.");

  m.def(
      "derive_edges",
      [](const CArray<std::uint32_t>& instances, bool one_sided) {
        return from_grid<std::uint8_t>(derive_edges(
            to_instances(instances),
            one_sided ? EdgeSides::one_sided : EdgeSides::two_sided));
      },
      py::arg("instances"), py::arg("one_sided") = false,
      "Mark pixels adjacent to a different instance.");

  m.def(
      "argmax_labels",
      [](const CArray<float>& stack) {
        return from_grid<std::uint8_t>(argmax_labels(to_stack(stack)));
      },
      py::arg("scores"), "Per-pixel argmax over a (K, H, W) score stack.");

  m.def(
      "gen_scene",
      [](std::uint32_t height, std::uint32_t width, std::uint32_t min_instances,
         std::uint32_t max_instances, double edge_dropout, double spurious_edge,
         double label_flip, std::uint64_t seed, bool allow_overlap) {
        SceneConfig cfg;
        cfg.height = height;
        cfg.width = width;
        cfg.min_instances = min_instances;
        cfg.max_instances = max_instances;
        cfg.edge_dropout = edge_dropout;
        cfg.spurious_edge = spurious_edge;
        cfg.label_flip = label_flip;
        cfg.seed = seed;
        cfg.allow_overlap = allow_overlap;
        const Scene scene = gen_scene(cfg);
        py::dict out;
        out["parts"] = from_grid<std::uint8_t>(scene.gt_parts);
        out["instances"] = from_grid<std::uint32_t>(scene.gt_instances);
        out["edges"] = from_grid<std::uint8_t>(scene.gt_edges);
        out["degraded_parts"] = from_grid<std::uint8_t>(scene.degraded_parts);
        out["degraded_edges"] = from_grid<float>(scene.degraded_edge_prob);
        return out;
      },
      py::arg("height") = 128, py::arg("width") = 128,
      py::arg("min_instances") = 2, py::arg("max_instances") = 4,
      py::arg("edge_dropout") = 0.0, py::arg("spurious_edge") = 0.0,
      py::arg("label_flip") = 0.0, py::arg("seed") = 0,
      py::arg("allow_overlap") = true,
      "Generate a synthetic scene with exact ground truth.");

  m.def(
      "mean_iou",
      [](const CArray<std::uint8_t>& pred, const CArray<std::uint8_t>& gt,
         std::size_t k) {
        ConfusionMatrix confusion(k);
        accumulate_confusion(to_labels(pred), to_labels(gt), confusion);
        const IouSummary iou = iou_from_confusion(confusion);
        py::dict out;
        out["mean"] = iou.mean;
        out["per_class"] = iou.per_class;
        out["valid"] = iou.valid;
        return out;
      },
      py::arg("pred"), py::arg("gt"), py::arg("k"),
      "Mean intersection-over-union across classes present in the union.");

  m.def(
      "evaluate_edges",
      [](const std::vector<CArray<float>>& preds,
         const std::vector<CArray<std::uint8_t>>& gts, bool thin) {
        if (preds.size() != gts.size()) {
          throw py::value_error("pred and gt lists differ in length");
        }
        EdgeEvalConfig cfg;
        std::vector<std::vector<EdgePrCounts>> per_image;
        for (std::size_t i = 0; i < preds.size(); ++i) {
          ProbGrid prob = to_prob(preds[i]);
          if (thin) prob = nms_thin(prob);
          per_image.push_back(edge_pr(prob, to_mask(gts[i]), cfg));
        }
        const OdsOis scores = ods_ois(per_image);
        py::dict out;
        out["ods"] = scores.ods;
        out["ois"] = scores.ois;
        return out;
      },
      py::arg("preds"), py::arg("gts"), py::arg("thin") = true,
      "Best-F edge scores over the standard threshold sweep.");

  m.def(
      "evaluate_instances",
      [](const std::vector<CArray<std::uint32_t>>& preds,
         const std::vector<CArray<std::uint32_t>>& gts,
         const std::vector<double>& thresholds) {
        if (preds.size() != gts.size()) {
          throw py::value_error("pred and gt lists differ in length");
        }
        std::vector<ApImage> images;
        std::vector<ScoredInstance> scored;
        for (std::size_t i = 0; i < preds.size(); ++i) {
          const std::string id = "image_" + std::to_string(i);
          ApImage image{id, to_instances(preds[i]), to_instances(gts[i])};
          ParsingResult fake;
          fake.instances = image.pred;
          const std::vector<ScoredInstance> s = score_instances(fake, nullptr, id);
          scored.insert(scored.end(), s.begin(), s.end());
          images.push_back(std::move(image));
        }
        const std::vector<double> ts =
            thresholds.empty() ? default_ap_thresholds() : thresholds;
        const ApResult ap = ap_r(images, scored, ts);
        py::dict out;
        out["thresholds"] = ap.thresholds;
        out["ap"] = ap.ap;
        out["ap_vol"] = ap.ap_vol;
        return out;
      },
      py::arg("preds"), py::arg("gts"),
      py::arg("thresholds") = std::vector<double>{},
      "Region average precision with area-ranked predictions.");
}
