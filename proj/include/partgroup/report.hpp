#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "partgroup/metrics.hpp"

namespace partgroup {

inline constexpr char kVersion[] = "0.1.0";

struct PerImageStats {
  std::string id;
  std::optional<double> mean_iou;
  std::optional<double> edge_best_f;
  std::optional<std::uint64_t> pred_instances;
  std::optional<std::uint64_t> gt_instances;
};

// Byte-stable JSON document: fixed key order, floats always printed with six
// decimals, so identical runs produce identical reports.
std::string serialize_report(
    const EvalReport& report,
    const std::vector<std::pair<std::string, std::string>>& config_echo,
    const std::vector<PerImageStats>& per_image);

}  // namespace partgroup
