#include "partgroup/raster.hpp"

#include <algorithm>
#include <cmath>
#include <set>

namespace partgroup {

namespace detail {

void check_dims(std::uint32_t height, std::uint32_t width) {
  if (height == 0 || width == 0) {
    throw_validation("grid dimensions must be positive");
  }
  if (height > kMaxGridSide || width > kMaxGridSide) {
    throw_validation("grid side exceeds " + std::to_string(kMaxGridSide));
  }
}

template <typename T>
std::vector<T> checked_data(std::uint32_t h, std::uint32_t w, std::size_t planes,
                            std::vector<T> values) {
  if (values.size() != std::size_t(h) * w * planes) {
    throw_validation("data length does not match grid dimensions");
  }
  return values;
}

}  // namespace detail

Taxonomy::Taxonomy(std::string name_, std::vector<std::string> labels_)
    : name(std::move(name_)), labels(std::move(labels_)) {
  if (labels.size() < 2) {
    throw_validation("taxonomy needs at least background and one part label");
  }
  if (labels.size() > 255) {
    throw_validation("taxonomy exceeds 255 classes");
  }
  if (labels[0] != "Background") {
    throw_validation("taxonomy index 0 must be named \"Background\"");
  }
  std::set<std::string> seen(labels.begin(), labels.end());
  if (seen.size() != labels.size()) {
    throw_validation("taxonomy label names must be unique");
  }
}

const Taxonomy& Taxonomy::cihp() {
  static const Taxonomy t("cihp",
                          {"Background",  "Hat",       "Hair",      "Sunglasses",
                           "Upper-clothes", "Dress",   "Coat",      "Socks",
                           "Pants",       "Gloves",    "Scarf",     "Skirt",
                           "Torso-skin",  "Face",      "Right-arm", "Left-arm",
                           "Right-leg",   "Left-leg",  "Right-shoe", "Left-shoe"});
  return t;
}

const Taxonomy& Taxonomy::pascal_person_part() {
  static const Taxonomy t("pascal-person-part",
                          {"Background", "Head", "Torso", "Upper-arms",
                           "Lower-arms", "Upper-legs", "Lower-legs"});
  return t;
}

LabelGrid::LabelGrid(std::uint32_t h, std::uint32_t w, std::uint8_t fill)
    : height(h), width(w), data(std::size_t(h) * w, fill) {
  detail::check_dims(h, w);
}

LabelGrid::LabelGrid(std::uint32_t h, std::uint32_t w, std::vector<std::uint8_t> values)
    : height(h), width(w) {
  detail::check_dims(h, w);
  data = detail::checked_data(h, w, 1, std::move(values));
}

ProbGrid::ProbGrid(std::uint32_t h, std::uint32_t w, float fill)
    : height(h), width(w), data(std::size_t(h) * w, fill) {
  detail::check_dims(h, w);
  if (!(fill >= 0.0f && fill <= 1.0f)) {
    throw_validation("probability fill value outside [0, 1]");
  }
}

ProbGrid::ProbGrid(std::uint32_t h, std::uint32_t w, std::vector<float> values)
    : height(h), width(w) {
  detail::check_dims(h, w);
  data = detail::checked_data(h, w, 1, std::move(values));
  for (float v : data) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw_validation("probability value outside [0, 1]");
    }
  }
}

ScoreStack::ScoreStack(std::uint32_t h, std::uint32_t w, std::uint32_t k, float fill)
    : height(h), width(w), channels(k), data(std::size_t(h) * w * k, fill) {
  detail::check_dims(h, w);
  if (k == 0) throw_validation("score stack needs at least one channel");
}

ScoreStack::ScoreStack(std::uint32_t h, std::uint32_t w, std::uint32_t k,
                       std::vector<float> values)
    : height(h), width(w), channels(k) {
  detail::check_dims(h, w);
  if (k == 0) throw_validation("score stack needs at least one channel");
  data = detail::checked_data(h, w, k, std::move(values));
}

BinaryEdgeGrid::BinaryEdgeGrid(std::uint32_t h, std::uint32_t w, bool fill)
    : height(h), width(w), data(std::size_t(h) * w, fill ? 1 : 0) {
  detail::check_dims(h, w);
}

BinaryEdgeGrid::BinaryEdgeGrid(std::uint32_t h, std::uint32_t w,
                               std::vector<std::uint8_t> values)
    : height(h), width(w) {
  detail::check_dims(h, w);
  data = detail::checked_data(h, w, 1, std::move(values));
  for (auto& v : data) v = v ? 1 : 0;
}

InstanceGrid::InstanceGrid(std::uint32_t h, std::uint32_t w, std::uint32_t fill)
    : height(h), width(w), data(std::size_t(h) * w, fill) {
  detail::check_dims(h, w);
}

InstanceGrid::InstanceGrid(std::uint32_t h, std::uint32_t w,
                           std::vector<std::uint32_t> values)
    : height(h), width(w) {
  detail::check_dims(h, w);
  data = detail::checked_data(h, w, 1, std::move(values));
}

std::uint32_t InstanceGrid::max_id() const noexcept {
  std::uint32_t m = 0;
  for (std::uint32_t v : data) m = std::max(m, v);
  return m;
}

LabelGrid argmax_labels(const ScoreStack& stack) {
  if (stack.channels == 0 || stack.data.empty()) {
    throw_validation("argmax_labels: empty stack");
  }
  if (stack.channels > 255) {
    throw_validation("argmax_labels: more channels than representable labels");
  }
  for (float v : stack.data) {
    if (!std::isfinite(v)) {
      throw_validation("argmax_labels: non-finite score");
    }
  }
  LabelGrid out(stack.height, stack.width);
  const std::size_t plane = stack.plane_size();
  for (std::size_t p = 0; p < plane; ++p) {
    std::uint32_t best = 0;
    float best_score = stack.data[p];
    for (std::uint32_t c = 1; c < stack.channels; ++c) {
      const float s = stack.data[std::size_t(c) * plane + p];
      if (s > best_score) {  // strict: ties keep the lowest channel
        best_score = s;
        best = c;
      }
    }
    out.data[p] = static_cast<std::uint8_t>(best);
  }
  return out;
}

}  // namespace partgroup
