#include "partgroup/render.hpp"

#include <cmath>
#include <string>

namespace partgroup {

namespace {

std::array<std::uint8_t, 3> hsv_to_rgb(double h, double s, double v) {
  const double c = v * s;
  const double hp = h / 60.0;
  const double x = c * (1.0 - std::fabs(std::fmod(hp, 2.0) - 1.0));
  double r = 0, g = 0, b = 0;
  if (hp < 1) {
    r = c, g = x;
  } else if (hp < 2) {
    r = x, g = c;
  } else if (hp < 3) {
    g = c, b = x;
  } else if (hp < 4) {
    g = x, b = c;
  } else if (hp < 5) {
    r = x, b = c;
  } else {
    r = c, b = x;
  }
  const double m = v - c;
  const auto to8 = [](double f) {
    return std::uint8_t(std::lround(f * 255.0));
  };
  return {to8(r + m), to8(g + m), to8(b + m)};
}

std::vector<std::uint8_t> ppm_header(std::uint32_t h, std::uint32_t w) {
  const std::string header =
      "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  return std::vector<std::uint8_t>(header.begin(), header.end());
}

}  // namespace

std::array<std::uint8_t, 3> label_color(std::uint8_t label) {
  if (label == 0) return {0, 0, 0};
  const double hue = std::fmod(double(label) * 137.508, 360.0);
  // Alternate saturation/value rings so hue collisions stay distinguishable.
  const double s = (label % 3 == 0) ? 0.55 : 0.85;
  const double v = (label % 2 == 0) ? 0.95 : 0.75;
  return hsv_to_rgb(hue, s, v);
}

std::array<std::uint8_t, 3> instance_color(std::uint32_t id) {
  if (id == 0) return {0, 0, 0};
  std::uint64_t z = (std::uint64_t(id) + 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  z ^= z >> 31;
  const double hue = std::fmod(double(id) * 137.508, 360.0);
  const double s = 0.60 + double(z % 35) / 100.0;
  const double v = 0.70 + double((z >> 8) % 30) / 100.0;
  return hsv_to_rgb(hue, s, v);
}

std::vector<std::uint8_t> render_labels(const LabelGrid& grid) {
  std::vector<std::uint8_t> out = ppm_header(grid.height, grid.width);
  out.reserve(out.size() + grid.data.size() * 3);
  for (std::uint8_t v : grid.data) {
    const auto rgb = label_color(v);
    out.insert(out.end(), rgb.begin(), rgb.end());
  }
  return out;
}

std::vector<std::uint8_t> render_instances(const InstanceGrid& grid) {
  std::vector<std::uint8_t> out = ppm_header(grid.height, grid.width);
  out.reserve(out.size() + grid.data.size() * 3);
  for (std::uint32_t v : grid.data) {
    const auto rgb = instance_color(v);
    out.insert(out.end(), rgb.begin(), rgb.end());
  }
  return out;
}

std::vector<std::uint8_t> render_edges(const BinaryEdgeGrid& grid) {
  std::vector<std::uint8_t> out = ppm_header(grid.height, grid.width);
  out.reserve(out.size() + grid.data.size() * 3);
  for (std::uint8_t v : grid.data) {
    const std::uint8_t g = v ? 255 : 0;
    out.insert(out.end(), {g, g, g});
  }
  return out;
}

std::vector<std::uint8_t> render_prob(const ProbGrid& grid) {
  std::vector<std::uint8_t> out = ppm_header(grid.height, grid.width);
  out.reserve(out.size() + grid.data.size() * 3);
  for (float v : grid.data) {
    const std::uint8_t g = std::uint8_t(std::lround(double(v) * 255.0));
    out.insert(out.end(), {g, g, g});
  }
  return out;
}

}  // namespace partgroup
