#include "partgroup/codec.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>

namespace partgroup {

namespace {

void append(std::vector<std::uint8_t>& out, const std::string& s) {
  out.insert(out.end(), s.begin(), s.end());
}

void append_le32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((v >> 24) & 0xff));
}

void append_f32le(std::vector<std::uint8_t>& out, float f) {
  append_le32(out, std::bit_cast<std::uint32_t>(f));
}

std::string pgm_header(std::uint32_t width, std::uint32_t height, std::uint32_t maxval) {
  return "P5\n" + std::to_string(width) + " " + std::to_string(height) + "\n" +
         std::to_string(maxval) + "\n";
}

// Incremental PGM header reader: handles PNM whitespace and '#' comments.
struct PgmReader {
  std::span<const std::uint8_t> bytes;
  std::size_t pos = 0;

  void expect_magic() {
    if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '5') {
      throw_format("not a binary PGM: missing P5 magic");
    }
    pos = 2;
  }

  void skip_space() {
    bool progressed = true;
    while (progressed && pos < bytes.size()) {
      progressed = false;
      while (pos < bytes.size() && std::isspace(bytes[pos])) {
        ++pos;
        progressed = true;
      }
      if (pos < bytes.size() && bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
        progressed = true;
      }
    }
  }

  std::uint64_t read_uint(const char* what) {
    skip_space();
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw_format(std::string("PGM header: expected ") + what);
    }
    std::uint64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos] - '0');
      if (v > 0xffffffffull) throw_format("PGM header: value overflow");
      ++pos;
    }
    return v;
  }

  // One whitespace byte separates the maxval from the payload.
  std::span<const std::uint8_t> payload() {
    if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
      throw_format("PGM header: missing separator before payload");
    }
    ++pos;
    return bytes.subspan(pos);
  }
};

struct PgmImage {
  std::uint32_t height, width, maxval;
  std::span<const std::uint8_t> payload;
};

PgmImage parse_pgm(std::span<const std::uint8_t> bytes, std::uint32_t expected_maxval,
                   std::size_t bytes_per_sample) {
  PgmReader r{bytes};
  r.expect_magic();
  const std::uint64_t width = r.read_uint("width");
  const std::uint64_t height = r.read_uint("height");
  const std::uint64_t maxval = r.read_uint("maxval");
  if (maxval != expected_maxval) {
    throw_format("PGM maxval " + std::to_string(maxval) + ", expected " +
                 std::to_string(expected_maxval));
  }
  if (height == 0 || width == 0 || height > kMaxGridSide || width > kMaxGridSide) {
    throw_format("PGM dimensions out of range");
  }
  auto payload = r.payload();
  const std::size_t need = std::size_t(height) * width * bytes_per_sample;
  if (payload.size() < need) {
    throw_format("truncated payload: need " + std::to_string(need) + " bytes, have " +
                 std::to_string(payload.size()));
  }
  if (payload.size() > need) {
    throw_format("trailing bytes after payload");
  }
  return {std::uint32_t(height), std::uint32_t(width), std::uint32_t(maxval), payload};
}

struct FloatHeader {
  std::uint32_t height, width, channels;
  std::span<const std::uint8_t> payload;
};

std::uint32_t read_le32(std::span<const std::uint8_t> b, std::size_t at) {
  return std::uint32_t(b[at]) | (std::uint32_t(b[at + 1]) << 8) |
         (std::uint32_t(b[at + 2]) << 16) | (std::uint32_t(b[at + 3]) << 24);
}

FloatHeader parse_float_raster(std::span<const std::uint8_t> bytes, const char* magic,
                               bool with_channels) {
  const std::size_t header = with_channels ? 16 : 12;
  if (bytes.size() < 4 || std::memcmp(bytes.data(), magic, 4) != 0) {
    throw_format(std::string("missing ") + magic + " magic");
  }
  if (bytes.size() < header) {
    throw_format("truncated header");
  }
  const std::uint32_t height = read_le32(bytes, 4);
  const std::uint32_t width = read_le32(bytes, 8);
  const std::uint32_t channels = with_channels ? read_le32(bytes, 12) : 1;
  if (height == 0 || width == 0 || height > kMaxGridSide || width > kMaxGridSide) {
    throw_format("float raster dimensions out of range");
  }
  if (channels == 0) {
    throw_format("float raster channel count must be positive");
  }
  auto payload = bytes.subspan(header);
  const std::size_t need = std::size_t(height) * width * channels * 4;
  if (payload.size() < need) {
    throw_format("truncated payload: need " + std::to_string(need) + " bytes, have " +
                 std::to_string(payload.size()));
  }
  if (payload.size() > need) {
    throw_format("trailing bytes after payload");
  }
  return {height, width, channels, payload};
}

std::vector<float> decode_f32le(std::span<const std::uint8_t> payload, std::size_t count) {
  std::vector<float> out(count);
  for (std::size_t i = 0; i < count; ++i) {
    out[i] = std::bit_cast<float>(read_le32(payload, i * 4));
  }
  return out;
}

}  // namespace

std::vector<std::uint8_t> encode_raster(const LabelGrid& grid) {
  detail::check_dims(grid.height, grid.width);
  for (std::uint8_t v : grid.data) {
    if (v == 255) throw_validation("label value 255 is a reserved sentinel");
  }
  std::vector<std::uint8_t> out;
  out.reserve(grid.data.size() + 16);
  append(out, pgm_header(grid.width, grid.height, 255));
  out.insert(out.end(), grid.data.begin(), grid.data.end());
  return out;
}

std::vector<std::uint8_t> encode_raster(const ProbGrid& grid) {
  detail::check_dims(grid.height, grid.width);
  std::vector<std::uint8_t> out;
  out.reserve(grid.data.size() * 4 + 12);
  append(out, "FGR1");
  append_le32(out, grid.height);
  append_le32(out, grid.width);
  for (float v : grid.data) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw_validation("probability value outside [0, 1]");
    }
    append_f32le(out, v);
  }
  return out;
}

std::vector<std::uint8_t> encode_raster(const InstanceGrid& grid) {
  detail::check_dims(grid.height, grid.width);
  std::vector<std::uint8_t> out;
  out.reserve(grid.data.size() * 2 + 16);
  append(out, pgm_header(grid.width, grid.height, 65535));
  for (std::uint32_t v : grid.data) {
    if (v > 65535) {
      throw_capacity("instance id " + std::to_string(v) + " exceeds 16-bit raster");
    }
    out.push_back(static_cast<std::uint8_t>(v >> 8));  // big-endian per PGM
    out.push_back(static_cast<std::uint8_t>(v & 0xff));
  }
  return out;
}

std::vector<std::uint8_t> encode_raster(const BinaryEdgeGrid& grid) {
  detail::check_dims(grid.height, grid.width);
  std::vector<std::uint8_t> out;
  out.reserve(grid.data.size() + 16);
  append(out, pgm_header(grid.width, grid.height, 255));
  for (std::uint8_t v : grid.data) out.push_back(v ? 255 : 0);
  return out;
}

std::vector<std::uint8_t> encode_raster(const ScoreStack& stack) {
  detail::check_dims(stack.height, stack.width);
  if (stack.channels == 0) throw_validation("score stack needs at least one channel");
  std::vector<std::uint8_t> out;
  out.reserve(stack.data.size() * 4 + 16);
  append(out, "FGS1");
  append_le32(out, stack.height);
  append_le32(out, stack.width);
  append_le32(out, stack.channels);
  for (float v : stack.data) {
    if (!std::isfinite(v)) throw_validation("score value is not finite");
    append_f32le(out, v);
  }
  return out;
}

LabelGrid decode_label(std::span<const std::uint8_t> bytes) {
  const PgmImage img = parse_pgm(bytes, 255, 1);
  std::vector<std::uint8_t> data(img.payload.begin(), img.payload.end());
  for (std::uint8_t v : data) {
    if (v == 255) throw_validation("label value 255 is a reserved sentinel");
  }
  return LabelGrid(img.height, img.width, std::move(data));
}

ProbGrid decode_prob(std::span<const std::uint8_t> bytes) {
  const FloatHeader h = parse_float_raster(bytes, "FGR1", false);
  std::vector<float> data = decode_f32le(h.payload, std::size_t(h.height) * h.width);
  for (float v : data) {
    if (!(v >= 0.0f && v <= 1.0f)) {
      throw_validation("probability value outside [0, 1]");
    }
  }
  return ProbGrid(h.height, h.width, std::move(data));
}

InstanceGrid decode_instance(std::span<const std::uint8_t> bytes) {
  const PgmImage img = parse_pgm(bytes, 65535, 2);
  std::vector<std::uint32_t> data(std::size_t(img.height) * img.width);
  for (std::size_t i = 0; i < data.size(); ++i) {
    data[i] = (std::uint32_t(img.payload[i * 2]) << 8) | img.payload[i * 2 + 1];
  }
  return InstanceGrid(img.height, img.width, std::move(data));
}

BinaryEdgeGrid decode_edge(std::span<const std::uint8_t> bytes) {
  const PgmImage img = parse_pgm(bytes, 255, 1);
  std::vector<std::uint8_t> data(std::size_t(img.height) * img.width);
  for (std::size_t i = 0; i < data.size(); ++i) {
    const std::uint8_t v = img.payload[i];
    if (v != 0 && v != 255) {
      throw_validation("edge raster sample must be 0 or 255");
    }
    data[i] = v ? 1 : 0;
  }
  return BinaryEdgeGrid(img.height, img.width, std::move(data));
}

ScoreStack decode_stack(std::span<const std::uint8_t> bytes) {
  const FloatHeader h = parse_float_raster(bytes, "FGS1", true);
  std::vector<float> data =
      decode_f32le(h.payload, std::size_t(h.height) * h.width * h.channels);
  for (float v : data) {
    if (!std::isfinite(v)) throw_validation("score value is not finite");
  }
  return ScoreStack(h.height, h.width, h.channels, std::move(data));
}

RasterKind sniff_kind(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 4) {
    if (std::memcmp(bytes.data(), "FGR1", 4) == 0) return RasterKind::prob;
    if (std::memcmp(bytes.data(), "FGS1", 4) == 0) return RasterKind::stack;
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
    PgmReader r{bytes};
    r.expect_magic();
    r.read_uint("width");
    r.read_uint("height");
    const std::uint64_t maxval = r.read_uint("maxval");
    if (maxval == 255) return RasterKind::label;
    if (maxval == 65535) return RasterKind::instance;
    throw_format("unsupported PGM maxval " + std::to_string(maxval));
  }
  throw_format("unrecognized raster magic");
}

std::vector<std::uint8_t> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  if (in.bad()) throw_io("read failed on " + path.string());
  return bytes;
}

void write_bytes_atomic(const std::filesystem::path& path,
                        std::span<const std::uint8_t> bytes) {
  namespace fs = std::filesystem;
  const fs::path dir = path.parent_path().empty() ? "." : path.parent_path();
  std::error_code ec;
  fs::create_directories(dir, ec);
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw_io("cannot create " + tmp.string());
    if (!bytes.empty()) {
      out.write(reinterpret_cast<const char*>(bytes.data()),
                static_cast<std::streamsize>(bytes.size()));
    }
    if (!out) throw_io("write failed on " + tmp.string());
  }
  fs::rename(tmp, path, ec);
  if (ec) throw_io("rename to " + path.string() + " failed: " + ec.message());
}

}  // namespace partgroup
