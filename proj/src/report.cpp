#include "partgroup/report.hpp"

#include <cstdio>

namespace partgroup {

namespace {

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size() + 2);
  for (char c : s) {
    switch (c) {
      case '"': out += "\\\""; break;
      case '\\': out += "\\\\"; break;
      case '\n': out += "\\n"; break;
      case '\r': out += "\\r"; break;
      case '\t': out += "\\t"; break;
      default:
        if (static_cast<unsigned char>(c) < 0x20) {
          char buf[8];
          std::snprintf(buf, sizeof(buf), "\\u%04x", c);
          out += buf;
        } else {
          out += c;
        }
    }
  }
  return out;
}

std::string quoted(const std::string& s) { return "\"" + escape(s) + "\""; }

std::string float_array(const std::vector<double>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += fixed6(values[i]);
  }
  return out + "]";
}

std::string bool_array(const std::vector<bool>& values) {
  std::string out = "[";
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ", ";
    out += values[i] ? "true" : "false";
  }
  return out + "]";
}

}  // namespace

std::string serialize_report(
    const EvalReport& report,
    const std::vector<std::pair<std::string, std::string>>& config_echo,
    const std::vector<PerImageStats>& per_image) {
  std::string out = "{\n";
  out += "  \"version\": " + quoted(kVersion) + ",\n";

  out += "  \"config\": {";
  for (std::size_t i = 0; i < config_echo.size(); ++i) {
    if (i) out += ",";
    out += "\n    " + quoted(config_echo[i].first) + ": " +
           quoted(config_echo[i].second);
  }
  out += config_echo.empty() ? "},\n" : "\n  },\n";

  if (report.has_seg) {
    out += "  \"seg\": {\n";
    out += "    \"mean_iou\": " + fixed6(report.mean_iou) + ",\n";
    out += "    \"per_class_iou\": " + float_array(report.per_class_iou) + ",\n";
    out += "    \"per_class_valid\": " + bool_array(report.class_valid) + "\n";
    out += "  },\n";
  } else {
    out += "  \"seg\": null,\n";
  }

  if (report.has_edge) {
    out += "  \"edge\": {\n";
    out += "    \"ods\": " + fixed6(report.ods) + ",\n";
    out += "    \"ois\": " + fixed6(report.ois) + "\n";
    out += "  },\n";
  } else {
    out += "  \"edge\": null,\n";
  }

  if (report.has_inst) {
    out += "  \"inst\": {\n";
    out += "    \"ap_thresholds\": " + float_array(report.ap_thresholds) + ",\n";
    out += "    \"ap\": " + float_array(report.ap) + ",\n";
    out += "    \"ap_vol\": " + fixed6(report.ap_vol) + ",\n";
    out += "    \"gt_instances\": " + std::to_string(report.gt_instances) + ",\n";
    out += "    \"pred_instances\": " + std::to_string(report.pred_instances) + "\n";
    out += "  },\n";
  } else {
    out += "  \"inst\": null,\n";
  }

  out += "  \"images\": " + std::to_string(report.images);

  if (!per_image.empty()) {
    out += ",\n  \"per_image\": [";
    for (std::size_t i = 0; i < per_image.size(); ++i) {
      const PerImageStats& s = per_image[i];
      if (i) out += ",";
      out += "\n    {\"id\": " + quoted(s.id);
      if (s.mean_iou) out += ", \"mean_iou\": " + fixed6(*s.mean_iou);
      if (s.edge_best_f) out += ", \"edge_best_f\": " + fixed6(*s.edge_best_f);
      if (s.pred_instances) {
        out += ", \"pred_instances\": " + std::to_string(*s.pred_instances);
      }
      if (s.gt_instances) {
        out += ", \"gt_instances\": " + std::to_string(*s.gt_instances);
      }
      out += "}";
    }
    out += "\n  ]";
  }
  out += "\n}\n";
  return out;
}

}  // namespace partgroup
