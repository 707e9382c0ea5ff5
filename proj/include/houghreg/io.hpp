// Copyright 2026 The houghreg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//   http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// On-disk formats. Binary formats are little-endian with a 4-byte magic:
//   DHPC  u32 count, count*3 f32            (point cloud)
//   DHFV  u32 count, u32 dim, count*dim f32  (features, row-major)
//   DHCR  u32 count, count*(u32, u32, f32)   (correspondences)
// ASCII clouds hold one "x y z" triple per line. Transforms are 16 numbers,
// a row-major 4x4 homogeneous matrix.

#include <bit>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include <unistd.h>

#include "houghreg/cloud.hpp"
#include "houghreg/common.hpp"
#include "houghreg/correspondence.hpp"
#include "houghreg/geometry.hpp"

namespace houghreg {

enum class CloudFormat { Binary, Ascii };

inline constexpr std::string_view kCloudMagic = "DHPC";
inline constexpr std::string_view kFeatureMagic = "DHFV";
inline constexpr std::string_view kCorrespondenceMagic = "DHCR";

namespace detail {

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

inline void put_f32(std::string& out, float f) { put_u32(out, std::bit_cast<std::uint32_t>(f)); }

inline std::uint32_t checked_u32(std::size_t n, std::string_view what) {
  if (n > 0xffffffffull) throw Error(ErrorCode::InvalidConfig, std::string(what) + " count exceeds u32");
  return static_cast<std::uint32_t>(n);
}

/// Cursor over a byte buffer; short reads raise MalformedFile with offsets.
class ByteReader {
 public:
  ByteReader(std::string_view bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  void expect_magic(std::string_view magic) {
    require(magic.size(), "magic");
    if (bytes_.substr(pos_, magic.size()) != magic) {
      throw Error(ErrorCode::MalformedFile,
                  source_ + ": bad magic at byte offset 0, expected \"" + std::string(magic) + "\"");
    }
    pos_ += magic.size();
  }

  std::uint32_t u32(std::string_view what) {
    require(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) {
      v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += 4;
    return v;
  }

  float f32(std::string_view what) { return std::bit_cast<float>(u32(what)); }

  /// Fails before decoding anything when the payload is short.
  void require(std::size_t n, std::string_view what) const {
    if (bytes_.size() - pos_ < n) {
      throw Error(ErrorCode::MalformedFile,
                  source_ + ": truncated " + std::string(what) + " at byte offset " + std::to_string(pos_) +
                      ": expected " + std::to_string(n) + " bytes, " + std::to_string(bytes_.size() - pos_) +
                      " available");
    }
  }

  void expect_end() const {
    if (pos_ != bytes_.size()) {
      throw Error(ErrorCode::MalformedFile, source_ + ": " + std::to_string(bytes_.size() - pos_) +
                                                " trailing bytes at byte offset " + std::to_string(pos_));
    }
  }

 private:
  std::string_view bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

inline std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  if (ec != std::errc{}) throw Error(ErrorCode::Io, "cannot format number");
  return std::string(buf, ptr);
}

inline bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc{} && ptr == token.data() + token.size() && std::isfinite(out);
}

/// Splits on ASCII whitespace, remembering each token's byte offset.
inline std::vector<std::pair<std::string_view, std::size_t>> tokenize(std::string_view text, std::size_t base = 0) {
  std::vector<std::pair<std::string_view, std::size_t>> tokens;
  std::size_t i = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start), base + start);
  }
  return tokens;
}

}  // namespace detail

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for reading");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::Io, "read failure on " + path.string());
  return std::move(ss).str();
}

/// Writes through a sibling temporary file and renames it into place, so a
/// reader never observes a partially written file.
inline void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
  std::filesystem::path tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) {
      std::error_code ignored;
      std::filesystem::remove(tmp, ignored);
      throw Error(ErrorCode::Io, "write failure on " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignored;
    std::filesystem::remove(tmp, ignored);
    throw Error(ErrorCode::Io, "cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

// ---- point clouds --------------------------------------------------------

inline std::string encode_cloud(const PointCloud& cloud, CloudFormat format) {
  std::string out;
  if (format == CloudFormat::Binary) {
    out.reserve(8 + cloud.size() * 12);
    out.append(kCloudMagic);
    detail::put_u32(out, detail::checked_u32(cloud.size(), "point"));
    for (const auto& p : cloud.points) {
      for (int k = 0; k < 3; ++k) detail::put_f32(out, static_cast<float>(p[k]));
    }
    return out;
  }
  for (const auto& p : cloud.points) {
    out += detail::format_double(p.x());
    out += ' ';
    out += detail::format_double(p.y());
    out += ' ';
    out += detail::format_double(p.z());
    out += '\n';
  }
  return out;
}

inline PointCloud decode_cloud(std::string_view bytes, const std::string& source = "<memory>") {
  PointCloud cloud;
  if (bytes.substr(0, kCloudMagic.size()) == kCloudMagic) {
    detail::ByteReader r(bytes, source);
    r.expect_magic(kCloudMagic);
    std::uint32_t n = r.u32("point count");
    r.require(std::size_t{n} * 12, "point payload");
    cloud.points.reserve(n);
    for (std::uint32_t i = 0; i < n; ++i) {
      float x = r.f32("x"), y = r.f32("y"), z = r.f32("z");
      if (!std::isfinite(x) || !std::isfinite(y) || !std::isfinite(z)) {
        throw Error(ErrorCode::MalformedFile, source + ": non-finite coordinate in point " + std::to_string(i) +
                                                  " at byte offset " + std::to_string(8 + 12 * std::size_t{i}));
      }
      cloud.points.emplace_back(x, y, z);
    }
    r.expect_end();
    return cloud;
  }

  std::size_t line_start = 0;
  while (line_start < bytes.size()) {
    std::size_t line_end = bytes.find('\n', line_start);
    if (line_end == std::string_view::npos) line_end = bytes.size();
    auto tokens = detail::tokenize(bytes.substr(line_start, line_end - line_start), line_start);
    if (!tokens.empty() && tokens.front().first.front() != '#') {
      if (tokens.size() != 3) {
        throw Error(ErrorCode::MalformedFile, source + ": expected 3 coordinates on the line at byte offset " +
                                                  std::to_string(line_start) + ", found " +
                                                  std::to_string(tokens.size()));
      }
      Vec3 p;
      for (int k = 0; k < 3; ++k) {
        if (!detail::parse_double(tokens[k].first, p[k])) {
          throw Error(ErrorCode::MalformedFile, source + ": bad number \"" + std::string(tokens[k].first) +
                                                    "\" at byte offset " + std::to_string(tokens[k].second));
        }
      }
      cloud.points.push_back(p);
    }
    line_start = line_end + 1;
  }
  return cloud;
}

inline PointCloud load_cloud(const std::filesystem::path& path) {
  return decode_cloud(read_file(path), path.string());
}

inline void save_cloud(const PointCloud& cloud, const std::filesystem::path& path,
                       CloudFormat format = CloudFormat::Binary) {
  write_file_atomic(path, encode_cloud(cloud, format));
}

// ---- features ------------------------------------------------------------

inline std::string encode_features(const FeatureSet& f) {
  std::string out;
  out.append(kFeatureMagic);
  detail::put_u32(out, detail::checked_u32(f.count(), "descriptor"));
  detail::put_u32(out, detail::checked_u32(f.dim(), "dimension"));
  for (std::size_t i = 0; i < f.count(); ++i) {
    for (std::size_t k = 0; k < f.dim(); ++k) {
      detail::put_f32(out, static_cast<float>(f.descriptors(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k))));
    }
  }
  return out;
}

inline FeatureSet decode_features(std::string_view bytes, const std::string& source = "<memory>") {
  detail::ByteReader r(bytes, source);
  r.expect_magic(kFeatureMagic);
  std::uint32_t n = r.u32("descriptor count");
  std::uint32_t dim = r.u32("descriptor dimension");
  if (dim == 0) throw Error(ErrorCode::MalformedFile, source + ": descriptor dimension is 0 at byte offset 8");
  r.require(std::size_t{n} * dim * 4, "descriptor payload");
  FeatureSet f;
  f.descriptors.resize(n, dim);
  for (std::uint32_t i = 0; i < n; ++i) {
    for (std::uint32_t k = 0; k < dim; ++k) {
      float v = r.f32("descriptor");
      if (!std::isfinite(v)) {
        throw Error(ErrorCode::MalformedFile, source + ": non-finite descriptor entry at byte offset " +
                                                  std::to_string(12 + 4 * (std::size_t{i} * dim + k)));
      }
      f.descriptors(i, k) = v;
    }
  }
  r.expect_end();
  return f;
}

/// expected_count < 0 skips the pairing check.
inline FeatureSet load_features(const std::filesystem::path& path, long long expected_count = -1) {
  FeatureSet f = decode_features(read_file(path), path.string());
  if (expected_count >= 0 && static_cast<long long>(f.count()) != expected_count) {
    throw Error(ErrorCode::MalformedFile, path.string() + ": holds " + std::to_string(f.count()) +
                                              " descriptors but the paired cloud has " +
                                              std::to_string(expected_count) + " points");
  }
  return f;
}

inline void save_features(const FeatureSet& f, const std::filesystem::path& path) {
  write_file_atomic(path, encode_features(f));
}

// ---- correspondences -----------------------------------------------------

inline std::string encode_correspondences(std::span<const Correspondence> corrs) {
  std::string out;
  out.reserve(8 + corrs.size() * 12);
  out.append(kCorrespondenceMagic);
  detail::put_u32(out, detail::checked_u32(corrs.size(), "correspondence"));
  for (const auto& c : corrs) {
    detail::put_u32(out, c.src_id);
    detail::put_u32(out, c.dst_id);
    detail::put_f32(out, c.similarity);
  }
  return out;
}

inline std::vector<Correspondence> decode_correspondences(std::string_view bytes,
                                                          const std::string& source = "<memory>") {
  detail::ByteReader r(bytes, source);
  r.expect_magic(kCorrespondenceMagic);
  std::uint32_t n = r.u32("correspondence count");
  r.require(std::size_t{n} * 12, "correspondence payload");
  std::vector<Correspondence> corrs(n);
  for (auto& c : corrs) {
    c.src_id = r.u32("src_id");
    c.dst_id = r.u32("dst_id");
    c.similarity = r.f32("similarity");
  }
  r.expect_end();
  return corrs;
}

inline std::vector<Correspondence> load_correspondences(const std::filesystem::path& path) {
  return decode_correspondences(read_file(path), path.string());
}

inline void save_correspondences(std::span<const Correspondence> corrs, const std::filesystem::path& path) {
  write_file_atomic(path, encode_correspondences(corrs));
}

// ---- transforms ----------------------------------------------------------

inline std::string format_transform(const RigidTransform& T) {
  const Mat4 m = T.matrix();
  std::string out;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      if (j > 0) out += ' ';
      out += detail::format_double(m(i, j));
    }
    out += '\n';
  }
  return out;
}

inline RigidTransform parse_transform(std::string_view text, const std::string& source = "<memory>") {
  auto tokens = detail::tokenize(text);
  if (tokens.size() != 16) {
    throw Error(ErrorCode::MalformedFile,
                source + ": expected 16 numbers, found " + std::to_string(tokens.size()));
  }
  Mat4 m;
  for (int i = 0; i < 16; ++i) {
    if (!detail::parse_double(tokens[i].first, m(i / 4, i % 4))) {
      throw Error(ErrorCode::MalformedFile, source + ": bad number \"" + std::string(tokens[i].first) +
                                                "\" at byte offset " + std::to_string(tokens[i].second));
    }
  }
  if (m(3, 0) != 0.0 || m(3, 1) != 0.0 || m(3, 2) != 0.0 || m(3, 3) != 1.0) {
    throw Error(ErrorCode::MalformedFile, source + ": last row must be 0 0 0 1");
  }
  RigidTransform T = RigidTransform::from_matrix(m);
  if (!is_rotation(T.rotation, 1e-6)) {
    throw Error(ErrorCode::MalformedFile, source + ": upper-left 3x3 block is not a rotation");
  }
  return T;
}

inline RigidTransform load_transform(const std::filesystem::path& path) {
  return parse_transform(read_file(path), path.string());
}

inline void save_transform(const RigidTransform& T, const std::filesystem::path& path) {
  write_file_atomic(path, format_transform(T));
}

}  // namespace houghreg
