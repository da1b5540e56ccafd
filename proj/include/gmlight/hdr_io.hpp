// Copyright 2026 The gmlight Authors
// SPDX-License-Identifier: Apache-2.0

// PFM (read/write) and Radiance RGBE (read) codecs.
//
// PFM is the exact float32 interchange format. Its rows are stored
// bottom-to-top; in memory they are top-to-bottom so that row indices agree
// with the polar angle used by sphere_geom.

#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <limits>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "gmlight/errors.hpp"
#include "gmlight/panorama.hpp"

namespace gmlight {

using Bytes = std::vector<std::uint8_t>;

namespace detail {

inline constexpr std::size_t kMaxDimension = 1u << 16;

// Cursor over a byte buffer that tracks the offset for error messages.
class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> data) : data_(data) {}

  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return data_.size() - pos_; }
  bool at_end() const noexcept { return pos_ >= data_.size(); }

  [[noreturn]] void fail(const std::string& what) const {
    throw FormatError(what, pos_);
  }

  std::uint8_t byte() {
    if (at_end()) fail("unexpected end of data");
    return data_[pos_++];
  }

  std::uint8_t peek(std::size_t ahead = 0) const {
    return data_[pos_ + ahead];
  }

  std::span<const std::uint8_t> take(std::size_t n) {
    if (remaining() < n) {
      fail("truncated payload: need " + std::to_string(n) + " bytes, have " +
           std::to_string(remaining()));
    }
    auto out = data_.subspan(pos_, n);
    pos_ += n;
    return out;
  }

  void skip_whitespace() {
    while (!at_end() && is_space(data_[pos_])) ++pos_;
  }

  // Next whitespace-delimited token.
  std::string token() {
    skip_whitespace();
    std::string out;
    while (!at_end() && !is_space(data_[pos_])) {
      out.push_back(static_cast<char>(data_[pos_++]));
      if (out.size() > 64) fail("header token too long");
    }
    if (out.empty()) fail("missing header token");
    return out;
  }

  // Line without its terminating '\n'.
  std::string line() {
    std::string out;
    while (true) {
      if (at_end()) fail("unterminated header line");
      const auto c = static_cast<char>(data_[pos_++]);
      if (c == '\n') return out;
      out.push_back(c);
      if (out.size() > 4096) fail("header line too long");
    }
  }

 private:
  static bool is_space(std::uint8_t c) {
    return c == ' ' || c == '\n' || c == '\r' || c == '\t';
  }

  std::span<const std::uint8_t> data_;
  std::size_t pos_ = 0;
};

inline std::size_t parse_dimension(ByteReader& in, const std::string& tok) {
  std::size_t value = 0;
  if (tok.empty() || tok.size() > 9) in.fail("bad dimension '" + tok + "'");
  for (char c : tok) {
    if (c < '0' || c > '9') in.fail("bad dimension '" + tok + "'");
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  if (value == 0 || value > kMaxDimension) {
    in.fail("dimension out of range: " + tok);
  }
  return value;
}

inline double parse_scale(ByteReader& in, const std::string& tok) {
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size() || !std::isfinite(v) || v == 0.0) {
    in.fail("bad PFM scale '" + tok + "'");
  }
  return v;
}

inline float load_float(const std::uint8_t* p, bool little_endian) {
  std::uint32_t bits = 0;
  if (little_endian) {
    bits = std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 |
           std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24;
  } else {
    bits = std::uint32_t{p[3]} | std::uint32_t{p[2]} << 8 |
           std::uint32_t{p[1]} << 16 | std::uint32_t{p[0]} << 24;
  }
  return std::bit_cast<float>(bits);
}

inline void store_float_le(Bytes& out, float v) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  out.push_back(static_cast<std::uint8_t>(bits & 0xff));
  out.push_back(static_cast<std::uint8_t>((bits >> 8) & 0xff));
  out.push_back(static_cast<std::uint8_t>((bits >> 16) & 0xff));
  out.push_back(static_cast<std::uint8_t>((bits >> 24) & 0xff));
}

struct PfmHeader {
  std::size_t channels = 3;
  std::size_t width = 0;
  std::size_t height = 0;
  double scale = -1.0;
};

inline PfmHeader read_pfm_header(ByteReader& in, bool allow_gray) {
  PfmHeader h;
  const std::string magic = in.token();
  if (magic == "PF") {
    h.channels = 3;
  } else if (magic == "Pf" && allow_gray) {
    h.channels = 1;
  } else if (magic == "Pf") {
    in.fail("grayscale PFM ('Pf') is not supported for colour panoramas");
  } else {
    in.fail("not a PFM file (magic '" + magic + "')");
  }
  h.width = parse_dimension(in, in.token());
  h.height = parse_dimension(in, in.token());
  h.scale = parse_scale(in, in.token());
  // Exactly one whitespace byte separates the header from the payload.
  if (in.at_end()) in.fail("missing PFM payload");
  const auto sep = in.byte();
  if (sep != '\n' && sep != ' ' && sep != '\r' && sep != '\t') {
    in.fail("malformed PFM header terminator");
  }
  return h;
}

// Returns top-to-bottom row-major samples, channels interleaved.
inline std::vector<double> read_pfm_payload(ByteReader& in,
                                            const PfmHeader& h) {
  const bool little = h.scale < 0.0;
  const double mult = std::abs(h.scale);
  const std::size_t row_len = h.width * h.channels;
  std::vector<double> out(row_len * h.height);
  for (std::size_t file_row = 0; file_row < h.height; ++file_row) {
    const std::size_t row = h.height - 1 - file_row;
    const std::size_t row_offset = in.offset();
    auto raw = in.take(row_len * 4);
    for (std::size_t k = 0; k < row_len; ++k) {
      const double v = static_cast<double>(load_float(&raw[4 * k], little)) *
                       mult;
      if (!std::isfinite(v) || v < 0.0) {
        throw FormatError("invalid PFM sample (non-finite or negative)",
                          row_offset + 4 * k);
      }
      out[row * row_len + k] = v;
    }
  }
  return out;
}

}  // namespace detail

inline Panorama read_pfm(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  const auto h = detail::read_pfm_header(in, /*allow_gray=*/false);
  const auto samples = detail::read_pfm_payload(in, h);
  std::vector<Rgb> pixels(h.width * h.height);
  for (std::size_t i = 0; i < pixels.size(); ++i) {
    pixels[i] = {samples[3 * i], samples[3 * i + 1], samples[3 * i + 2]};
  }
  return Panorama(h.width, h.height, std::move(pixels));
}

// Narrows to float32. Values beyond the float range cannot be represented
// and are rejected.
inline Bytes write_pfm(const Panorama& p) {
  const std::string header = "PF\n" + std::to_string(p.width()) + " " +
                             std::to_string(p.height()) + "\n-1.000000\n";
  Bytes out(header.begin(), header.end());
  out.reserve(header.size() + p.size() * 12);
  for (std::size_t file_row = 0; file_row < p.height(); ++file_row) {
    const std::size_t row = p.height() - 1 - file_row;
    for (std::size_t col = 0; col < p.width(); ++col) {
      for (double c : p.at(row, col)) {
        if (c > std::numeric_limits<float>::max()) {
          throw InvalidArgument("pixel value exceeds float32 range");
        }
        detail::store_float_le(out, static_cast<float>(c));
      }
    }
  }
  return out;
}

// Accepts grayscale "Pf" or colour "PF" (first channel) depth rasters.
inline ScalarRaster read_depth_pfm(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  const auto h = detail::read_pfm_header(in, /*allow_gray=*/true);
  const auto samples = detail::read_pfm_payload(in, h);
  ScalarRaster r{h.width, h.height, std::vector<double>(h.width * h.height)};
  for (std::size_t i = 0; i < r.values.size(); ++i) {
    r.values[i] = samples[i * h.channels];
  }
  return r;
}

inline Bytes write_depth_pfm(const ScalarRaster& r) {
  const std::string header = "Pf\n" + std::to_string(r.width) + " " +
                             std::to_string(r.height) + "\n-1.000000\n";
  Bytes out(header.begin(), header.end());
  for (std::size_t file_row = 0; file_row < r.height; ++file_row) {
    const std::size_t row = r.height - 1 - file_row;
    for (std::size_t col = 0; col < r.width; ++col) {
      detail::store_float_le(out, static_cast<float>(r.at(row, col)));
    }
  }
  return out;
}

namespace detail {

inline Rgb decode_rgbe(const std::uint8_t* p) {
  if (p[3] == 0) return kBlack;
  const int exp = static_cast<int>(p[3]) - 136;
  return {std::ldexp(static_cast<double>(p[0]), exp),
          std::ldexp(static_cast<double>(p[1]), exp),
          std::ldexp(static_cast<double>(p[2]), exp)};
}

// Decodes one scanline of `width` RGBE quadruples into `quads`.
inline void read_rgbe_scanline(ByteReader& in, std::size_t width,
                               std::vector<std::uint8_t>& quads) {
  quads.assign(width * 4, 0);
  const bool rle = width >= 8 && width < 0x8000 && in.remaining() >= 4 &&
                   in.peek(0) == 2 && in.peek(1) == 2 &&
                   (in.peek(2) & 0x80) == 0;
  if (!rle) {
    auto raw = in.take(width * 4);
    std::copy(raw.begin(), raw.end(), quads.begin());
    return;
  }
  in.take(2);
  const std::size_t hi = in.byte();
  const std::size_t encoded = (hi << 8) | std::size_t{in.byte()};
  if (encoded != width) {
    in.fail("bad scanline length " + std::to_string(encoded) +
            ", expected " + std::to_string(width));
  }
  for (std::size_t ch = 0; ch < 4; ++ch) {
    std::size_t x = 0;
    while (x < width) {
      std::size_t count = in.byte();
      if (count > 128) {
        count -= 128;
        if (x + count > width) in.fail("RLE run overflows scanline");
        const std::uint8_t v = in.byte();
        for (std::size_t k = 0; k < count; ++k) quads[(x++) * 4 + ch] = v;
      } else {
        if (count == 0 || x + count > width) {
          in.fail("bad RLE literal count");
        }
        for (std::size_t k = 0; k < count; ++k) {
          quads[(x++) * 4 + ch] = in.byte();
        }
      }
    }
  }
}

}  // namespace detail

inline Panorama read_rgbe(std::span<const std::uint8_t> bytes) {
  detail::ByteReader in(bytes);
  const std::string magic = in.line();
  if (magic.rfind("#?RADIANCE", 0) != 0 && magic.rfind("#?RGBE", 0) != 0) {
    in.fail("unknown Radiance header '" + magic + "'");
  }
  while (true) {
    const std::string line = in.line();
    if (line.empty() || line == "\r") break;
    if (line.rfind("FORMAT=", 0) == 0 && line != "FORMAT=32-bit_rle_rgbe") {
      in.fail("unsupported Radiance format '" + line + "'");
    }
  }
  const std::string y_axis = in.token();
  const std::size_t height = detail::parse_dimension(in, in.token());
  const std::string x_axis = in.token();
  const std::size_t width = detail::parse_dimension(in, in.token());
  if ((y_axis != "-Y" && y_axis != "+Y") || x_axis != "+X") {
    in.fail("unsupported resolution orientation " + y_axis + " " + x_axis);
  }
  if (in.at_end() || in.byte() != '\n') in.fail("bad resolution line");

  std::vector<Rgb> pixels(width * height);
  std::vector<std::uint8_t> quads;
  for (std::size_t s = 0; s < height; ++s) {
    detail::read_rgbe_scanline(in, width, quads);
    const std::size_t row = y_axis == "-Y" ? s : height - 1 - s;
    for (std::size_t x = 0; x < width; ++x) {
      pixels[row * width + x] = detail::decode_rgbe(&quads[4 * x]);
    }
  }
  return Panorama(width, height, std::move(pixels));
}

inline Bytes read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InvalidArgument("cannot open " + path.string());
  return Bytes(std::istreambuf_iterator<char>(f), {});
}

inline void write_file(const std::filesystem::path& path,
                       std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw InvalidArgument("cannot write " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw InvalidArgument("failed writing " + path.string());
}

// Dispatches on the extension: .pfm or .hdr.
inline Panorama load_panorama(const std::filesystem::path& path) {
  const auto ext = path.extension().string();
  if (ext == ".pfm" || ext == ".PFM") return read_pfm(read_file(path));
  if (ext == ".hdr" || ext == ".HDR") return read_rgbe(read_file(path));
  throw InvalidArgument("unsupported panorama extension '" + ext + "'");
}

inline void save_panorama(const std::filesystem::path& path,
                          const Panorama& p) {
  write_file(path, write_pfm(p));
}

}  // namespace gmlight
