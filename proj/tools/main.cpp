#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "partgroup/codec.hpp"
#include "partgroup/manifest.hpp"
#include "partgroup/metrics.hpp"
#include "partgroup/partition.hpp"
#include "partgroup/render.hpp"
#include "partgroup/report.hpp"
#include "partgroup/synthgen.hpp"

namespace fs = std::filesystem;
using namespace partgroup;

namespace {

int exit_code_for(ErrorKind kind) {
  return kind == ErrorKind::io ? 2 : 1;
}

unsigned default_jobs() {
  if (const char* env = std::getenv("PARTGROUP_JOBS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return unsigned(v);
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? hw : 1;
}

// Runs fn(i) for i in [0, n) on up to `jobs` threads. fn must not throw.
template <typename Fn>
void parallel_for(std::size_t n, unsigned jobs, Fn fn) {
  jobs = std::max(1u, std::min<unsigned>(jobs, n ? unsigned(n) : 1u));
  if (jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (unsigned t = 0; t < jobs; ++t) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) fn(i);
    });
  }
  for (std::thread& t : pool) t.join();
}

Taxonomy load_taxonomy(const std::string& spec) {
  if (spec == "cihp") return Taxonomy::cihp();
  if (spec == "pascal-person-part") return Taxonomy::pascal_person_part();
  const std::vector<std::uint8_t> bytes = read_bytes(spec);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw_format(std::string("taxonomy file: ") + e.what());
  }
  if (!doc.contains("name") || !doc.contains("labels")) {
    throw_format("taxonomy file needs 'name' and 'labels'");
  }
  return Taxonomy(doc["name"].get<std::string>(),
                  doc["labels"].get<std::vector<std::string>>());
}

std::vector<double> parse_thresholds(const std::string& spec) {
  std::vector<double> out;
  if (spec.find(':') != std::string::npos) {
    double start = 0, step = 0, stop = 0;
    if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &start, &step, &stop) != 3 ||
        step <= 0) {
      throw_validation("threshold range must be start:step:stop");
    }
    for (double v = start; v <= stop + 1e-9; v += step) out.push_back(v);
  } else {
    std::size_t pos = 0;
    while (pos < spec.size()) {
      std::size_t used = 0;
      out.push_back(std::stod(spec.substr(pos), &used));
      pos += used;
      if (pos < spec.size() && spec[pos] == ',') ++pos;
    }
  }
  if (out.empty()) throw_validation("empty threshold list");
  return out;
}

struct SegInput {
  LabelGrid labels;
  std::optional<ScoreStack> stack;
};

SegInput load_seg(const fs::path& path) {
  const std::vector<std::uint8_t> bytes = read_bytes(path);
  switch (sniff_kind(bytes)) {
    case RasterKind::label:
      return {decode_label(bytes), std::nullopt};
    case RasterKind::stack: {
      ScoreStack stack = decode_stack(bytes);
      return {argmax_labels(stack), std::move(stack)};
    }
    default:
      throw_validation("segmentation input must be a label raster or score stack: " +
                       path.string());
  }
}

ProbGrid load_edge_prob(const fs::path& path) {
  const std::vector<std::uint8_t> bytes = read_bytes(path);
  switch (sniff_kind(bytes)) {
    case RasterKind::prob:
      return decode_prob(bytes);
    case RasterKind::label:  // 8-bit PGM carrying a {0,255} mask
      return lift_edges(decode_edge(bytes));
    default:
      throw_validation("edge input must be a float raster or binary mask: " +
                       path.string());
  }
}

BinaryEdgeGrid load_edge_mask(const fs::path& path) {
  const std::vector<std::uint8_t> bytes = read_bytes(path);
  switch (sniff_kind(bytes)) {
    case RasterKind::label:
      return decode_edge(bytes);
    case RasterKind::prob: {
      const ProbGrid grid = decode_prob(bytes);
      BinaryEdgeGrid mask(grid.height, grid.width);
      for (std::size_t i = 0; i < grid.data.size(); ++i) {
        mask.data[i] = grid.data[i] >= 0.5f ? 1 : 0;
      }
      return mask;
    }
    default:
      throw_validation("edge ground truth must be a mask or float raster: " +
                       path.string());
  }
}

struct PartitionArgs {
  std::string manifest;
  std::string out_dir;
  PartitionConfig config;
  unsigned jobs = default_jobs();
  bool continue_on_error = false;
};

int cmd_partition(const PartitionArgs& args) {
  const std::vector<ManifestEntry> entries = load_manifest(args.manifest);
  if (entries.empty()) throw_validation("empty manifest");
  fs::create_directories(args.out_dir);

  struct Outcome {
    bool ok = false;
    std::uint32_t instances = 0;
    std::string error;
    ErrorKind kind = ErrorKind::validation;
  };
  std::vector<Outcome> outcomes(entries.size());

  parallel_for(entries.size(), args.jobs, [&](std::size_t i) {
    const ManifestEntry& entry = entries[i];
    try {
      const SegInput seg = load_seg(entry.seg);
      const ProbGrid edge = load_edge_prob(entry.edge);
      const ParsingResult result = partition(seg.labels, edge, args.config);
      const fs::path out = fs::path(args.out_dir) / (entry.id + ".inst.pgm");
      write_bytes_atomic(out, encode_raster(result.instances));
      outcomes[i] = {true, result.instances.max_id(), "", ErrorKind::validation};
    } catch (const Error& e) {
      outcomes[i] = {false, 0, e.what(), e.kind()};
    } catch (const std::exception& e) {
      outcomes[i] = {false, 0, e.what(), ErrorKind::validation};
    }
  });

  nlohmann::ordered_json summary;
  summary["version"] = kVersion;
  summary["entries"] = nlohmann::ordered_json::array();
  std::size_t failures = 0;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    nlohmann::ordered_json item;
    item["id"] = entries[i].id;
    if (outcomes[i].ok) {
      item["status"] = "ok";
      item["instances"] = outcomes[i].instances;
      std::cout << entries[i].id << ": " << outcomes[i].instances
                << " instances\n";
    } else {
      item["status"] = "error";
      item["error"] = outcomes[i].error;
      std::cerr << entries[i].id << ": error: " << outcomes[i].error << "\n";
      ++failures;
    }
    summary["entries"].push_back(std::move(item));
  }
  const std::string text = summary.dump(2) + "\n";
  write_bytes_atomic(fs::path(args.out_dir) / "summary.json",
                     std::vector<std::uint8_t>(text.begin(), text.end()));

  if (failures == 0) return 0;
  if (args.continue_on_error) return 3;
  for (const Outcome& o : outcomes) {
    if (!o.ok) return exit_code_for(o.kind);
  }
  return 1;
}

struct EvaluateArgs {
  std::string manifest;
  std::string which = "all";
  std::string out = "-";
  std::string taxonomy = "cihp";
  std::string ap_thresholds = "0.1:0.1:0.9";
  double match_radius_fraction = 0.0075;
  bool per_image = false;
  bool use_stack_scores = true;
  PartitionConfig config;
  unsigned jobs = default_jobs();
};

int cmd_evaluate(const EvaluateArgs& args) {
  const std::vector<ManifestEntry> entries = load_manifest(args.manifest);
  if (entries.empty()) throw_validation("empty manifest");
  const bool want_seg = args.which == "seg" || args.which == "all";
  const bool want_edge = args.which == "edge" || args.which == "all";
  const bool want_inst = args.which == "inst" || args.which == "all";

  for (const ManifestEntry& entry : entries) {
    if (want_seg && !entry.gt_seg) {
      throw_validation("entry '" + entry.id + "' lacks gt_seg");
    }
    if (want_edge && !entry.gt_edge) {
      throw_validation("entry '" + entry.id + "' lacks gt_edge");
    }
    if (want_inst && !entry.gt_inst) {
      throw_validation("entry '" + entry.id + "' lacks gt_inst");
    }
  }

  const Taxonomy taxonomy = load_taxonomy(args.taxonomy);
  const std::vector<double> ap_thresholds = parse_thresholds(args.ap_thresholds);
  EdgeEvalConfig edge_cfg;
  edge_cfg.match_radius_fraction = args.match_radius_fraction;
  edge_cfg.validate();

  struct PerEntry {
    std::optional<ConfusionMatrix> confusion;
    std::vector<EdgePrCounts> edge_counts;
    std::vector<ScoredInstance> scored;
    std::optional<ApImage> ap_image;
    std::string error;
    ErrorKind kind = ErrorKind::validation;
  };
  std::vector<PerEntry> results(entries.size());

  parallel_for(entries.size(), args.jobs, [&](std::size_t i) {
    const ManifestEntry& entry = entries[i];
    PerEntry& out = results[i];
    try {
      std::optional<SegInput> seg;
      if (want_seg || want_inst) seg = load_seg(entry.seg);
      std::optional<ProbGrid> edge;
      if (want_edge || want_inst) edge = load_edge_prob(entry.edge);

      if (want_seg) {
        const LabelGrid gt = decode_label(read_bytes(*entry.gt_seg));
        ConfusionMatrix confusion(taxonomy.k());
        accumulate_confusion(seg->labels, gt, confusion);
        out.confusion = std::move(confusion);
      }
      if (want_edge) {
        const BinaryEdgeGrid gt = load_edge_mask(*entry.gt_edge);
        out.edge_counts = edge_pr(nms_thin(*edge), gt, edge_cfg);
      }
      if (want_inst) {
        const InstanceGrid gt = decode_instance(read_bytes(*entry.gt_inst));
        ParsingResult result = partition(seg->labels, *edge, args.config);
        const ScoreStack* stack =
            (args.use_stack_scores && seg->stack) ? &*seg->stack : nullptr;
        out.scored = score_instances(result, stack, entry.id);
        out.ap_image = ApImage{entry.id, std::move(result.instances), gt};
      }
    } catch (const Error& e) {
      out.error = std::string("entry '") + entry.id + "': " + e.what();
      out.kind = e.kind();
    } catch (const std::exception& e) {
      out.error = std::string("entry '") + entry.id + "': " + e.what();
    }
  });

  for (const PerEntry& r : results) {
    if (!r.error.empty()) throw Error(r.kind, r.error);
  }

  EvalReport report;
  report.images = entries.size();
  std::vector<PerImageStats> per_image;

  if (want_seg) {
    ConfusionMatrix total(taxonomy.k());
    for (const PerEntry& r : results) {
      for (std::size_t j = 0; j < total.counts.size(); ++j) {
        total.counts[j] += r.confusion->counts[j];
      }
    }
    const IouSummary iou = iou_from_confusion(total);
    report.has_seg = true;
    report.per_class_iou = iou.per_class;
    report.class_valid = iou.valid;
    report.mean_iou = iou.mean;
  }
  if (want_edge) {
    std::vector<std::vector<EdgePrCounts>> per_image_counts;
    for (const PerEntry& r : results) per_image_counts.push_back(r.edge_counts);
    const OdsOis scores = ods_ois(per_image_counts);
    report.has_edge = true;
    report.ods = scores.ods;
    report.ois = scores.ois;
  }
  if (want_inst) {
    std::vector<ApImage> images;
    std::vector<ScoredInstance> preds;
    for (PerEntry& r : results) {
      images.push_back(std::move(*r.ap_image));
      preds.insert(preds.end(), r.scored.begin(), r.scored.end());
    }
    const ApResult ap = ap_r(images, preds, ap_thresholds);
    report.has_inst = true;
    report.ap_thresholds = ap.thresholds;
    report.ap = ap.ap;
    report.ap_vol = ap.ap_vol;
    report.gt_instances = ap.gt_instances;
    report.pred_instances = ap.pred_instances;
  }

  if (args.per_image) {
    for (std::size_t i = 0; i < entries.size(); ++i) {
      PerImageStats stats;
      stats.id = entries[i].id;
      if (want_seg) {
        stats.mean_iou = iou_from_confusion(*results[i].confusion).mean;
      }
      if (want_edge) {
        double best = 0.0;
        for (const EdgePrCounts& c : results[i].edge_counts) {
          best = std::max(best, f_measure(c));
        }
        stats.edge_best_f = best;
      }
      if (want_inst) {
        stats.pred_instances = results[i].ap_image->pred.max_id();
        stats.gt_instances = results[i].ap_image->gt.max_id();
      }
      per_image.push_back(std::move(stats));
    }
  }

  std::vector<std::pair<std::string, std::string>> echo;
  echo.emplace_back("manifest", args.manifest);
  echo.emplace_back("which", args.which);
  echo.emplace_back("taxonomy", taxonomy.name);
  echo.emplace_back("edge_threshold", std::to_string(args.config.edge_threshold));
  echo.emplace_back("min_area", std::to_string(args.config.min_area));
  echo.emplace_back("min_part_labels", std::to_string(args.config.min_part_labels));
  echo.emplace_back("thin_edges", args.config.thin_edges ? "true" : "false");
  echo.emplace_back("drop_orphans", args.config.drop_orphans ? "true" : "false");
  echo.emplace_back("match_radius_fraction",
                    std::to_string(args.match_radius_fraction));
  echo.emplace_back("ap_thresholds", args.ap_thresholds);

  const std::string text = serialize_report(report, echo, per_image);
  if (args.out == "-") {
    std::cout << text;
  } else {
    write_bytes_atomic(args.out, std::vector<std::uint8_t>(text.begin(), text.end()));
  }
  return 0;
}

struct SynthArgs {
  std::string out_dir;
  std::string config_file;
  std::uint64_t count = 0;
  std::uint64_t seed = 0;
  bool seed_given = false;
  unsigned jobs = default_jobs();
};

SceneConfig scene_config_from_file(const std::string& path) {
  SceneConfig cfg;
  if (path.empty()) return cfg;
  const std::vector<std::uint8_t> bytes = read_bytes(path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw_format(std::string("scene config: ") + e.what());
  }
  const auto get = [&](const char* key, auto& field) {
    if (doc.contains(key)) field = doc[key].get<std::decay_t<decltype(field)>>();
  };
  get("height", cfg.height);
  get("width", cfg.width);
  get("min_instances", cfg.min_instances);
  get("max_instances", cfg.max_instances);
  get("min_parts", cfg.min_parts);
  get("max_parts", cfg.max_parts);
  get("min_area", cfg.min_area);
  get("label_count", cfg.label_count);
  get("edge_dropout", cfg.edge_dropout);
  get("spurious_edge", cfg.spurious_edge);
  get("label_flip", cfg.label_flip);
  get("seed", cfg.seed);
  get("allow_overlap", cfg.allow_overlap);
  get("max_attempts", cfg.max_attempts);
  return cfg;
}

int cmd_synth(const SynthArgs& args) {
  SceneConfig base = scene_config_from_file(args.config_file);
  if (args.seed_given) base.seed = args.seed;
  base.validate();
  fs::create_directories(args.out_dir);

  if (args.count == 0) {
    std::cerr << "warning: count is 0, writing an empty manifest\n";
    write_bytes_atomic(fs::path(args.out_dir) / "manifest.jsonl", {});
    return 0;
  }

  std::vector<std::string> errors(args.count);
  std::vector<std::string> manifest_lines(args.count);
  parallel_for(args.count, args.jobs, [&](std::size_t i) {
    try {
      SceneConfig cfg = base;
      cfg.seed = base.seed + i;
      const Scene scene = gen_scene(cfg);

      char name[32];
      std::snprintf(name, sizeof(name), "scene_%04zu", i);
      const fs::path dir = fs::path(args.out_dir) / name;
      write_bytes_atomic(dir / "parts.pgm", encode_raster(scene.gt_parts));
      write_bytes_atomic(dir / "inst.pgm", encode_raster(scene.gt_instances));
      write_bytes_atomic(dir / "edge.pgm", encode_raster(scene.gt_edges));
      write_bytes_atomic(dir / "deg_parts.pgm", encode_raster(scene.degraded_parts));
      write_bytes_atomic(dir / "deg_edge.fgr", encode_raster(scene.degraded_edge_prob));

      nlohmann::ordered_json sidecar;
      sidecar["seed"] = cfg.seed;
      sidecar["instances"] = scene.gt_instances.max_id();
      sidecar["per_instance"] = nlohmann::ordered_json::array();
      const std::uint32_t n = scene.gt_instances.max_id();
      std::vector<std::uint64_t> areas(n + 1, 0);
      std::vector<std::set<std::uint8_t>> labels(n + 1);
      for (std::size_t p = 0; p < scene.gt_instances.data.size(); ++p) {
        const std::uint32_t id = scene.gt_instances.data[p];
        if (id == 0) continue;
        ++areas[id];
        labels[id].insert(scene.gt_parts.data[p]);
      }
      for (std::uint32_t id = 1; id <= n; ++id) {
        nlohmann::ordered_json item;
        item["id"] = id;
        item["area"] = areas[id];
        item["labels"] = std::vector<int>(labels[id].begin(), labels[id].end());
        sidecar["per_instance"].push_back(std::move(item));
      }
      const std::string side_text = sidecar.dump(2) + "\n";
      write_bytes_atomic(dir / "gt.json",
                         std::vector<std::uint8_t>(side_text.begin(), side_text.end()));

      nlohmann::ordered_json line;
      line["id"] = name;
      line["seg"] = std::string(name) + "/deg_parts.pgm";
      line["edge"] = std::string(name) + "/deg_edge.fgr";
      line["gt_seg"] = std::string(name) + "/parts.pgm";
      line["gt_inst"] = std::string(name) + "/inst.pgm";
      line["gt_edge"] = std::string(name) + "/edge.pgm";
      manifest_lines[i] = line.dump();
    } catch (const Error& e) {
      errors[i] = e.what();
    } catch (const std::exception& e) {
      errors[i] = e.what();
    }
  });

  for (std::size_t i = 0; i < args.count; ++i) {
    if (!errors[i].empty()) {
      throw Error(ErrorKind::generation,
                  "scene " + std::to_string(i) + ": " + errors[i]);
    }
  }
  std::string manifest_text;
  for (const std::string& line : manifest_lines) {
    manifest_text += line;
    manifest_text += "\n";
  }
  write_bytes_atomic(
      fs::path(args.out_dir) / "manifest.jsonl",
      std::vector<std::uint8_t>(manifest_text.begin(), manifest_text.end()));
  std::cout << "wrote " << args.count << " scenes to " << args.out_dir << "\n";
  return 0;
}

struct RenderArgs {
  std::string input;
  std::string out;
};

int cmd_render(const RenderArgs& args) {
  const std::vector<std::uint8_t> bytes = read_bytes(args.input);
  std::vector<std::uint8_t> image;
  switch (sniff_kind(bytes)) {
    case RasterKind::prob:
      image = render_prob(decode_prob(bytes));
      break;
    case RasterKind::stack:
      image = render_labels(argmax_labels(decode_stack(bytes)));
      break;
    case RasterKind::instance:
      image = render_instances(decode_instance(bytes));
      break;
    case RasterKind::label:
      try {
        image = render_labels(decode_label(bytes));
      } catch (const Error&) {
        image = render_edges(decode_edge(bytes));
      }
      break;
    default:
      throw_validation("unknown raster kind: " + args.input);
  }
  write_bytes_atomic(args.out, image);
  return 0;
}

void add_partition_flags(CLI::App* cmd, PartitionConfig& config) {
  cmd->add_option("--edge-threshold", config.edge_threshold,
                  "edge activation break threshold")
      ->capture_default_str();
  cmd->add_option("--min-area", config.min_area,
                  "region area must exceed this to count as an instance")
      ->capture_default_str();
  cmd->add_option("--min-part-labels", config.min_part_labels,
                  "minimum distinct part labels for an instance")
      ->capture_default_str();
  cmd->add_flag("--no-thin", [&config](std::int64_t) { config.thin_edges = false; },
                "skip non-maximal-suppression thinning");
  cmd->add_flag("--drop-orphans", config.drop_orphans,
                "drop rejected regions that reach no accepted region");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"instance partition of part segmentations and its evaluation"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  PartitionArgs part_args;
  CLI::App* part = app.add_subcommand("partition", "batch instance partition");
  part->add_option("--manifest", part_args.manifest, "JSONL manifest")
      ->required()
      ->check(CLI::ExistingFile);
  part->add_option("--out", part_args.out_dir, "output directory")->required();
  add_partition_flags(part, part_args.config);
  part->add_option("--jobs", part_args.jobs, "worker threads")
      ->capture_default_str();
  part->add_flag("--continue-on-error", part_args.continue_on_error,
                 "process remaining entries after a failure");

  EvaluateArgs eval_args;
  CLI::App* eval = app.add_subcommand("evaluate", "compute metric report");
  eval->add_option("--manifest", eval_args.manifest, "JSONL manifest")
      ->required()
      ->check(CLI::ExistingFile);
  eval->add_option("--which", eval_args.which, "seg, edge, inst or all")
      ->check(CLI::IsMember({"seg", "edge", "inst", "all"}))
      ->capture_default_str();
  eval->add_option("--out", eval_args.out, "report path, - for stdout")
      ->capture_default_str();
  eval->add_option("--taxonomy", eval_args.taxonomy,
                   "cihp, pascal-person-part, or a JSON taxonomy file")
      ->capture_default_str();
  eval->add_option("--match-radius-fraction", eval_args.match_radius_fraction,
                   "edge match radius as a fraction of the image diagonal")
      ->capture_default_str();
  eval->add_option("--ap-thresholds", eval_args.ap_thresholds,
                   "start:step:stop or comma list of IoU thresholds")
      ->capture_default_str();
  eval->add_flag("--per-image", eval_args.per_image, "per-image breakdown");
  eval->add_flag("--no-stack-scores",
                 [&eval_args](std::int64_t) { eval_args.use_stack_scores = false; },
                 "rank instances by area even when a score stack is given");
  add_partition_flags(eval, eval_args.config);
  eval->add_option("--jobs", eval_args.jobs, "worker threads")
      ->capture_default_str();

  SynthArgs synth_args;
  CLI::App* synth = app.add_subcommand("synth", "generate synthetic scenes");
  synth->add_option("--out", synth_args.out_dir, "output directory")->required();
  synth->add_option("--count", synth_args.count, "number of scenes")->required();
  CLI::Option* seed_opt =
      synth->add_option("--seed", synth_args.seed, "base seed; scene i uses seed+i");
  synth->add_option("--config", synth_args.config_file,
                    "JSON file with scene generation settings")
      ->check(CLI::ExistingFile);
  synth->add_option("--jobs", synth_args.jobs, "worker threads")
      ->capture_default_str();

  RenderArgs render_args;
  CLI::App* render = app.add_subcommand("render", "raster to PPM visualization");
  render->add_option("--input", render_args.input, "raster file")
      ->required()
      ->check(CLI::ExistingFile);
  render->add_option("--out", render_args.out, "PPM output path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*part) return cmd_partition(part_args);
    if (*eval) return cmd_evaluate(eval_args);
    if (*synth) {
      synth_args.seed_given = seed_opt->count() > 0;
      return cmd_synth(synth_args);
    }
    if (*render) return cmd_render(render_args);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
