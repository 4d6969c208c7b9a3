#include "partgroup/edge_ops.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace partgroup {

namespace {

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (double(i) * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

// Separable Gaussian with replicated borders, double precision.
std::vector<double> gaussian_smooth(const ProbGrid& grid, double sigma) {
  const int h = int(grid.height), w = int(grid.width);
  const std::vector<double> kernel = gaussian_kernel(sigma);
  const int radius = int(kernel.size() / 2);

  std::vector<double> rows(std::size_t(h) * w, 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int cc = std::clamp(c + i, 0, w - 1);
        acc += kernel[i + radius] * double(grid.data[std::size_t(r) * w + cc]);
      }
      rows[std::size_t(r) * w + c] = acc;
    }
  }
  std::vector<double> out(std::size_t(h) * w, 0.0);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const int rr = std::clamp(r + i, 0, h - 1);
        acc += kernel[i + radius] * rows[std::size_t(rr) * w + c];
      }
      out[std::size_t(r) * w + c] = acc;
    }
  }
  return out;
}

double bilinear_at(const ProbGrid& grid, double y, double x) {
  const int h = int(grid.height), w = int(grid.width);
  y = std::clamp(y, 0.0, double(h - 1));
  x = std::clamp(x, 0.0, double(w - 1));
  const int y0 = int(std::floor(y));
  const int x0 = int(std::floor(x));
  const int y1 = std::min(y0 + 1, h - 1);
  const int x1 = std::min(x0 + 1, w - 1);
  const double fy = y - y0, fx = x - x0;
  const double v00 = grid.data[std::size_t(y0) * w + x0];
  const double v01 = grid.data[std::size_t(y0) * w + x1];
  const double v10 = grid.data[std::size_t(y1) * w + x0];
  const double v11 = grid.data[std::size_t(y1) * w + x1];
  return (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
}

template <typename Sample>
void resample_plane(std::uint32_t in_h, std::uint32_t in_w, std::uint32_t out_h,
                    std::uint32_t out_w, Sample sample, float* out) {
  const double sy = double(in_h) / double(out_h);
  const double sx = double(in_w) / double(out_w);
  for (std::uint32_t r = 0; r < out_h; ++r) {
    const double y = std::clamp((r + 0.5) * sy - 0.5, 0.0, double(in_h - 1));
    const int y0 = int(std::floor(y));
    const int y1 = std::min<int>(y0 + 1, int(in_h) - 1);
    const double fy = y - y0;
    for (std::uint32_t c = 0; c < out_w; ++c) {
      const double x = std::clamp((c + 0.5) * sx - 0.5, 0.0, double(in_w - 1));
      const int x0 = int(std::floor(x));
      const int x1 = std::min<int>(x0 + 1, int(in_w) - 1);
      const double fx = x - x0;
      const double v = (1 - fy) * ((1 - fx) * sample(y0, x0) + fx * sample(y0, x1)) +
                       fy * ((1 - fx) * sample(y1, x0) + fx * sample(y1, x1));
      out[std::size_t(r) * out_w + c] = float(v);
    }
  }
}

void check_scale_consistency(std::uint32_t h, std::uint32_t w, double scale,
                             std::uint32_t base_h, std::uint32_t base_w) {
  if (!(scale > 0.0)) throw_validation("fusion input scale must be positive");
  const auto expect_h = std::llround(scale * base_h);
  const auto expect_w = std::llround(scale * base_w);
  if (std::llabs(expect_h - (long long)h) > 1 || std::llabs(expect_w - (long long)w) > 1) {
    throw_validation("fusion input dimensions inconsistent with its scale");
  }
}

}  // namespace

FlipLabelPolicy FlipLabelPolicy::for_taxonomy(const Taxonomy& taxonomy) {
  FlipLabelPolicy policy;
  for (std::size_t i = 0; i < taxonomy.labels.size(); ++i) {
    const std::string& name = taxonomy.labels[i];
    if (name.rfind("Right-", 0) == 0) {
      const std::string mirrored = "Left-" + name.substr(6);
      for (std::size_t j = 0; j < taxonomy.labels.size(); ++j) {
        if (taxonomy.labels[j] == mirrored) {
          policy.swap_pairs.emplace_back(std::uint8_t(i), std::uint8_t(j));
        }
      }
    }
  }
  policy.validate(taxonomy.k());
  return policy;
}

void FlipLabelPolicy::validate(std::size_t k) const {
  std::vector<bool> used(k, false);
  for (auto [a, b] : swap_pairs) {
    if (a >= k || b >= k) throw_validation("flip policy index out of range");
    if (a == b || used[a] || used[b]) throw_validation("flip policy pairs must be disjoint");
    used[a] = used[b] = true;
  }
}

ProbGrid nms_thin(const ProbGrid& edges) {
  const int h = int(edges.height), w = int(edges.width);
  const std::vector<double> smooth = gaussian_smooth(edges, kNmsSigma);
  ProbGrid out(edges.height, edges.width, 0.0f);

  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      const float e = edges.data[std::size_t(r) * w + c];
      if (e == 0.0f) continue;
      const int cl = std::max(c - 1, 0), cr = std::min(c + 1, w - 1);
      const int ru = std::max(r - 1, 0), rd = std::min(r + 1, h - 1);
      const double gx = smooth[std::size_t(r) * w + cr] - smooth[std::size_t(r) * w + cl];
      const double gy = smooth[std::size_t(rd) * w + c] - smooth[std::size_t(ru) * w + c];
      const double norm = std::hypot(gx, gy);
      if (norm < 1e-12) {  // flat orientation: nothing to compare against
        out.data[std::size_t(r) * w + c] = e;
        continue;
      }
      const double nx = gx / norm, ny = gy / norm;
      const double fwd = bilinear_at(edges, r + ny, c + nx);
      const double bwd = bilinear_at(edges, r - ny, c - nx);
      if (double(e) >= fwd && double(e) >= bwd) {
        out.data[std::size_t(r) * w + c] = e;
      }
    }
  }
  return out;
}

BinaryEdgeGrid binarize_edges(const ProbGrid& thinned, double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw_validation("edge threshold must lie in [0, 1]");
  }
  BinaryEdgeGrid out(thinned.height, thinned.width);
  // Activations are stored as f32, so the strict comparison happens at f32
  // precision; an activation of exactly 0.2 never crosses a 0.2 threshold.
  const float cut = float(threshold);
  for (std::size_t i = 0; i < thinned.data.size(); ++i) {
    out.data[i] = thinned.data[i] > cut ? 1 : 0;
  }
  return out;
}

ProbGrid flip_horizontal(const ProbGrid& grid) {
  ProbGrid out(grid.height, grid.width, 0.0f);
  for (std::uint32_t r = 0; r < grid.height; ++r) {
    for (std::uint32_t c = 0; c < grid.width; ++c) {
      out.at(r, c) = grid.at(r, grid.width - 1 - c);
    }
  }
  return out;
}

ScoreStack flip_horizontal(const ScoreStack& stack, const FlipLabelPolicy& policy) {
  policy.validate(stack.channels);
  std::vector<std::uint32_t> source(stack.channels);
  for (std::uint32_t i = 0; i < stack.channels; ++i) source[i] = i;
  for (auto [a, b] : policy.swap_pairs) std::swap(source[a], source[b]);

  ScoreStack out(stack.height, stack.width, stack.channels);
  for (std::uint32_t k = 0; k < stack.channels; ++k) {
    for (std::uint32_t r = 0; r < stack.height; ++r) {
      for (std::uint32_t c = 0; c < stack.width; ++c) {
        out.at(k, r, c) = stack.at(source[k], r, stack.width - 1 - c);
      }
    }
  }
  return out;
}

ProbGrid resize_bilinear(const ProbGrid& grid, std::uint32_t out_h, std::uint32_t out_w) {
  detail::check_dims(out_h, out_w);
  if (out_h == grid.height && out_w == grid.width) return grid;
  std::vector<float> data(std::size_t(out_h) * out_w);
  resample_plane(
      grid.height, grid.width, out_h, out_w,
      [&](int y, int x) { return double(grid.data[std::size_t(y) * grid.width + x]); },
      data.data());
  for (float& v : data) v = std::clamp(v, 0.0f, 1.0f);
  return ProbGrid(out_h, out_w, std::move(data));
}

ScoreStack resize_bilinear(const ScoreStack& stack, std::uint32_t out_h,
                           std::uint32_t out_w) {
  detail::check_dims(out_h, out_w);
  if (out_h == stack.height && out_w == stack.width) return stack;
  ScoreStack out(out_h, out_w, stack.channels);
  for (std::uint32_t k = 0; k < stack.channels; ++k) {
    const float* plane = stack.data.data() + std::size_t(k) * stack.plane_size();
    resample_plane(
        stack.height, stack.width, out_h, out_w,
        [&](int y, int x) { return double(plane[std::size_t(y) * stack.width + x]); },
        out.data.data() + std::size_t(k) * out.plane_size());
  }
  return out;
}

std::variant<ProbGrid, ScoreStack> fuse_score_maps(std::span<const FusionInput> inputs,
                                                   std::uint32_t base_height,
                                                   std::uint32_t base_width,
                                                   const FlipLabelPolicy& policy) {
  if (inputs.empty()) throw_validation("fuse_score_maps: empty input list");
  detail::check_dims(base_height, base_width);

  const bool stack_kind = std::holds_alternative<ScoreStack>(inputs.front().grid);
  std::uint32_t channels = 1;
  if (stack_kind) channels = std::get<ScoreStack>(inputs.front().grid).channels;

  const std::size_t plane = std::size_t(base_height) * base_width;
  std::vector<double> acc(plane * channels, 0.0);

  for (const FusionInput& input : inputs) {
    if (std::holds_alternative<ScoreStack>(input.grid) != stack_kind) {
      throw_validation("fuse_score_maps: mixed input kinds");
    }
    if (stack_kind) {
      const ScoreStack& s = std::get<ScoreStack>(input.grid);
      if (s.channels != channels) {
        throw_validation("fuse_score_maps: channel count mismatch");
      }
      check_scale_consistency(s.height, s.width, input.scale, base_height, base_width);
      ScoreStack aligned = input.flipped ? flip_horizontal(s, policy) : s;
      aligned = resize_bilinear(aligned, base_height, base_width);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += double(aligned.data[i]);
    } else {
      const ProbGrid& g = std::get<ProbGrid>(input.grid);
      check_scale_consistency(g.height, g.width, input.scale, base_height, base_width);
      ProbGrid aligned = input.flipped ? flip_horizontal(g) : g;
      aligned = resize_bilinear(aligned, base_height, base_width);
      for (std::size_t i = 0; i < acc.size(); ++i) acc[i] += double(aligned.data[i]);
    }
  }

  const double inv = 1.0 / double(inputs.size());
  if (stack_kind) {
    ScoreStack out(base_height, base_width, channels);
    for (std::size_t i = 0; i < acc.size(); ++i) out.data[i] = float(acc[i] * inv);
    return out;
  }
  std::vector<float> data(plane);
  for (std::size_t i = 0; i < plane; ++i) {
    data[i] = std::clamp(float(acc[i] * inv), 0.0f, 1.0f);
  }
  return ProbGrid(base_height, base_width, std::move(data));
}

ScoreStack average_predictions(const ScoreStack& a, const ScoreStack& b) {
  if (a.height != b.height || a.width != b.width || a.channels != b.channels) {
    throw_validation("average_predictions: shape mismatch");
  }
  ScoreStack out(a.height, a.width, a.channels);
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    out.data[i] = float(0.5 * (double(a.data[i]) + double(b.data[i])));
  }
  return out;
}

}  // namespace partgroup
