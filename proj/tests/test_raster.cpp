#include <doctest.h>

#include <cstring>
#include <string>
#include <vector>

#include "partgroup/codec.hpp"
#include "partgroup/raster.hpp"
#include "partgroup/synthgen.hpp"

using namespace partgroup;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& header,
                                   std::vector<std::uint8_t> payload) {
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

}  // namespace

TEST_CASE("label PGM decodes byte for byte") {
  const auto bytes = bytes_of("P5\n2 2\n255\n", {0, 1, 2, 0});
  const LabelGrid grid = decode_label(bytes);
  CHECK(grid.height == 2);
  CHECK(grid.width == 2);
  CHECK(grid.data == std::vector<std::uint8_t>{0, 1, 2, 0});
}

TEST_CASE("label PGM header accepts comments and extra whitespace") {
  const auto bytes = bytes_of("P5\n# a comment\n 2\t2 \n255\n", {7, 0, 0, 9});
  const LabelGrid grid = decode_label(bytes);
  CHECK(grid.at(0, 0) == 7);
  CHECK(grid.at(1, 1) == 9);
}

TEST_CASE("float raster decodes exact values") {
  ProbGrid src(1, 3, std::vector<float>{0.0f, 0.5f, 1.0f});
  const ProbGrid grid = decode_prob(encode_raster(src));
  CHECK(grid.height == 1);
  CHECK(grid.width == 3);
  CHECK(grid.data[0] == 0.0f);
  CHECK(grid.data[1] == 0.5f);
  CHECK(grid.data[2] == 1.0f);
}

TEST_CASE("1x1 zero label grid encodes to the exact header plus one byte") {
  const auto bytes = encode_raster(LabelGrid(1, 1, std::uint8_t(0)));
  const std::string expected = "P5\n1 1\n255\n";
  REQUIRE(bytes.size() == expected.size() + 1);
  CHECK(std::memcmp(bytes.data(), expected.data(), expected.size()) == 0);
  CHECK(bytes.back() == 0);
}

TEST_CASE("instance id 300 becomes big-endian 0x012C") {
  const auto bytes = encode_raster(InstanceGrid(1, 1, std::uint32_t(300)));
  REQUIRE(bytes.size() >= 2);
  CHECK(bytes[bytes.size() - 2] == 0x01);
  CHECK(bytes[bytes.size() - 1] == 0x2C);
  CHECK(decode_instance(bytes).at(0, 0) == 300);
}

TEST_CASE("roundtrip is the identity for random grids of every kind") {
  SplitMix64 rng(0xC0DECu);
  for (int trial = 0; trial < 100; ++trial) {
    const std::uint32_t h = rng.range(1, 9);
    const std::uint32_t w = rng.range(1, 9);

    LabelGrid labels(h, w);
    for (auto& v : labels.data) v = std::uint8_t(rng.below(255));
    CHECK(decode_label(encode_raster(labels)) == labels);

    ProbGrid prob(h, w);
    for (auto& v : prob.data) v = float(rng.below(1001)) / 1000.0f;
    CHECK(decode_prob(encode_raster(prob)) == prob);

    InstanceGrid inst(h, w);
    for (auto& v : inst.data) v = rng.below(65536);
    CHECK(decode_instance(encode_raster(inst)) == inst);

    BinaryEdgeGrid edges(h, w);
    for (auto& v : edges.data) v = std::uint8_t(rng.below(2));
    CHECK(decode_edge(encode_raster(edges)) == edges);

    ScoreStack stack(h, w, rng.range(1, 4));
    for (auto& v : stack.data) v = float(rng.below(2001)) / 1000.0f - 1.0f;
    CHECK(decode_stack(encode_raster(stack)) == stack);
  }
}

TEST_CASE("label value 255 is rejected both ways") {
  CHECK_THROWS_AS(encode_raster(LabelGrid(1, 1, std::uint8_t(255))), Error);
  const auto bytes = bytes_of("P5\n1 1\n255\n", {255});
  CHECK_THROWS_AS(decode_label(bytes), Error);
}

TEST_CASE("truncated and padded payloads are rejected") {
  auto bytes = encode_raster(LabelGrid(2, 2, std::uint8_t(3)));
  auto truncated = bytes;
  truncated.pop_back();
  CHECK_THROWS_AS(decode_label(truncated), Error);
  auto padded = bytes;
  padded.push_back(0);
  CHECK_THROWS_AS(decode_label(padded), Error);
}

TEST_CASE("edge raster samples must be 0 or 255") {
  const auto bytes = bytes_of("P5\n1 2\n255\n", {0, 128});
  CHECK_THROWS_AS(decode_edge(bytes), Error);
}

TEST_CASE("probability rasters reject values outside the unit interval") {
  CHECK_THROWS_AS(encode_raster(ProbGrid(1, 1, 1.5f)), Error);
  CHECK_THROWS_AS(encode_raster(ProbGrid(1, 1, -0.1f)), Error);
}

TEST_CASE("sniff_kind identifies every format") {
  CHECK(sniff_kind(encode_raster(LabelGrid(1, 1, std::uint8_t(1)))) ==
        RasterKind::label);
  CHECK(sniff_kind(encode_raster(ProbGrid(1, 1, 0.5f))) == RasterKind::prob);
  CHECK(sniff_kind(encode_raster(InstanceGrid(1, 1, std::uint32_t(4)))) ==
        RasterKind::instance);
  CHECK(sniff_kind(encode_raster(ScoreStack(1, 1, 2, 0.0f))) == RasterKind::stack);
  const std::vector<std::uint8_t> garbage{'X', 'Y', 'Z'};
  CHECK_THROWS_AS(sniff_kind(garbage), Error);
}

TEST_CASE("argmax picks the maximum channel") {
  ScoreStack stack(1, 1, 2);
  stack.at(0, 0, 0) = 0.1f;
  stack.at(1, 0, 0) = 0.9f;
  CHECK(argmax_labels(stack).at(0, 0) == 1);
}

TEST_CASE("argmax ties break to the lowest channel") {
  ScoreStack stack(1, 1, 2, 0.5f);
  CHECK(argmax_labels(stack).at(0, 0) == 0);
}

TEST_CASE("argmax rejects non-finite scores") {
  ScoreStack stack(1, 1, 2, 0.0f);
  stack.at(1, 0, 0) = std::numeric_limits<float>::quiet_NaN();
  CHECK_THROWS_AS(argmax_labels(stack), Error);
}

TEST_CASE("argmax matches a per-pixel linear scan") {
  SplitMix64 rng(0xA3A3u);
  ScoreStack stack(8, 8, 5);
  for (auto& v : stack.data) v = float(rng.below(1000)) / 500.0f - 1.0f;
  const LabelGrid got = argmax_labels(stack);
  for (std::uint32_t r = 0; r < 8; ++r) {
    for (std::uint32_t c = 0; c < 8; ++c) {
      std::uint32_t best = 0;
      for (std::uint32_t k = 1; k < 5; ++k) {
        if (stack.at(k, r, c) > stack.at(best, r, c)) best = k;
      }
      CHECK(got.at(r, c) == best);
    }
  }
}

TEST_CASE("argmax is invariant under positive scaling") {
  SplitMix64 rng(0x5CA1Eu);
  ScoreStack stack(6, 6, 4);
  for (auto& v : stack.data) v = float(rng.below(1000)) / 250.0f - 2.0f;
  ScoreStack scaled = stack;
  for (auto& v : scaled.data) v *= 3.5f;
  CHECK(argmax_labels(stack) == argmax_labels(scaled));
}

TEST_CASE("taxonomies carry a background class") {
  CHECK(Taxonomy::cihp().k() == 20);
  CHECK(Taxonomy::cihp().labels[0] == "Background");
  CHECK(Taxonomy::pascal_person_part().k() == 7);
}
