#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "partgroup/error.hpp"

namespace partgroup {

/// Grid sides are capped so every pixel index fits comfortably in 32 bits.
inline constexpr std::uint32_t kMaxGridSide = 65535;

namespace detail {
void check_dims(std::uint32_t height, std::uint32_t width);
}

/// Ordered part-label set. Index 0 is always the background class; K is the
/// total class count including background.
struct Taxonomy {
  std::string name;
  std::vector<std::string> labels;

  Taxonomy(std::string name, std::vector<std::string> labels);

  std::size_t k() const noexcept { return labels.size(); }

  /// The 19 CIHP part labels plus background (K = 20). The part order follows
  /// the dataset description; it is fixed here so label indices are stable,
  /// without any claim that it matches the benchmark server's internal order.
  static const Taxonomy& cihp();

  /// Six PASCAL-Person-Part classes plus background (K = 7).
  static const Taxonomy& pascal_person_part();
};

/// H x W grid of part-label indices, 0 = background, row-major.
struct LabelGrid {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint8_t> data;

  LabelGrid() = default;
  LabelGrid(std::uint32_t h, std::uint32_t w, std::uint8_t fill = 0);
  LabelGrid(std::uint32_t h, std::uint32_t w, std::vector<std::uint8_t> values);

  std::uint8_t at(std::uint32_t r, std::uint32_t c) const {
    return data[std::size_t(r) * width + c];
  }
  std::uint8_t& at(std::uint32_t r, std::uint32_t c) {
    return data[std::size_t(r) * width + c];
  }
  std::size_t pixels() const noexcept { return data.size(); }

  bool operator==(const LabelGrid&) const = default;
};

/// H x W grid of activations in [0, 1], row-major.
struct ProbGrid {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<float> data;

  ProbGrid() = default;
  ProbGrid(std::uint32_t h, std::uint32_t w, float fill = 0.0f);
  ProbGrid(std::uint32_t h, std::uint32_t w, std::vector<float> values);

  float at(std::uint32_t r, std::uint32_t c) const {
    return data[std::size_t(r) * width + c];
  }
  float& at(std::uint32_t r, std::uint32_t c) {
    return data[std::size_t(r) * width + c];
  }
  std::size_t pixels() const noexcept { return data.size(); }

  bool operator==(const ProbGrid&) const = default;
};

/// K per-class score planes, each H x W row-major. Values are any finite
/// reals; they are not required to be probabilities.
struct ScoreStack {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::uint32_t channels = 0;
  std::vector<float> data;  // channel-major: K planes of H*W

  ScoreStack() = default;
  ScoreStack(std::uint32_t h, std::uint32_t w, std::uint32_t k, float fill = 0.0f);
  ScoreStack(std::uint32_t h, std::uint32_t w, std::uint32_t k, std::vector<float> values);

  std::size_t plane_size() const noexcept {
    return std::size_t(height) * width;
  }
  float at(std::uint32_t channel, std::uint32_t r, std::uint32_t c) const {
    return data[std::size_t(channel) * plane_size() + std::size_t(r) * width + c];
  }
  float& at(std::uint32_t channel, std::uint32_t r, std::uint32_t c) {
    return data[std::size_t(channel) * plane_size() + std::size_t(r) * width + c];
  }

  bool operator==(const ScoreStack&) const = default;
};

/// H x W mask of edge points.
struct BinaryEdgeGrid {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint8_t> data;  // 0 or 1

  BinaryEdgeGrid() = default;
  BinaryEdgeGrid(std::uint32_t h, std::uint32_t w, bool fill = false);
  BinaryEdgeGrid(std::uint32_t h, std::uint32_t w, std::vector<std::uint8_t> values);

  bool at(std::uint32_t r, std::uint32_t c) const {
    return data[std::size_t(r) * width + c] != 0;
  }
  void set(std::uint32_t r, std::uint32_t c, bool v) {
    data[std::size_t(r) * width + c] = v ? 1 : 0;
  }
  std::size_t pixels() const noexcept { return data.size(); }

  bool operator==(const BinaryEdgeGrid&) const = default;
};

/// H x W grid of instance ids, 0 = background. After finalization ids form a
/// contiguous range 1..M.
struct InstanceGrid {
  std::uint32_t height = 0;
  std::uint32_t width = 0;
  std::vector<std::uint32_t> data;

  InstanceGrid() = default;
  InstanceGrid(std::uint32_t h, std::uint32_t w, std::uint32_t fill = 0);
  InstanceGrid(std::uint32_t h, std::uint32_t w, std::vector<std::uint32_t> values);

  std::uint32_t at(std::uint32_t r, std::uint32_t c) const {
    return data[std::size_t(r) * width + c];
  }
  std::uint32_t& at(std::uint32_t r, std::uint32_t c) {
    return data[std::size_t(r) * width + c];
  }
  std::size_t pixels() const noexcept { return data.size(); }

  /// Largest id present (0 when the grid is all background).
  std::uint32_t max_id() const noexcept;

  bool operator==(const InstanceGrid&) const = default;
};

/// Per-pixel argmax over channels. Ties go to the lowest channel index.
/// Throws if any score is non-finite or channels exceed the label range.
LabelGrid argmax_labels(const ScoreStack& stack);

}  // namespace partgroup
