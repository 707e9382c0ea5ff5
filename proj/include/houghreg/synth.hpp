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

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "houghreg/cloud.hpp"
#include "houghreg/common.hpp"
#include "houghreg/geometry.hpp"

namespace houghreg {

/// Scenes live in the cube [-kSceneHalfExtent, kSceneHalfExtent]^3 (meters).
inline constexpr double kSceneHalfExtent = 1.0;

struct SynthConfig {
  std::size_t n_points = 2000;       // per cloud
  double overlap_fraction = 0.5;     // (0, 1]
  double noise_sigma = 0.0;          // meters, relative noise between matched points
  double rotation_magnitude = 0.5;   // radians, in [0, pi]
  double translation_magnitude = 0.5;  // meters
  std::uint64_t seed = 0;
};

/// Source/target clouds plus the transform mapping source coordinates into
/// target coordinates. Indices [0, n_shared) of both clouds are the same
/// underlying surface points.
struct SynthPair {
  PointCloud source;
  PointCloud target;
  RigidTransform gt;
  std::size_t n_shared = 0;
};

inline void validate(const SynthConfig& cfg) {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (cfg.n_points == 0) bad("n_points must be >= 1");
  if (!(cfg.overlap_fraction > 0.0 && cfg.overlap_fraction <= 1.0)) bad("overlap_fraction must be in (0, 1]");
  if (!(cfg.noise_sigma >= 0.0) || !std::isfinite(cfg.noise_sigma)) bad("noise_sigma must be >= 0");
  if (!(cfg.rotation_magnitude >= 0.0 && cfg.rotation_magnitude <= std::numbers::pi)) {
    bad("rotation_magnitude must be in [0, pi]");
  }
  if (!(cfg.translation_magnitude >= 0.0) || !std::isfinite(cfg.translation_magnitude)) {
    bad("translation_magnitude must be >= 0");
  }
}

namespace detail {

inline Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  for (;;) {
    Vec3 v(n(rng), n(rng), n(rng));
    double len = v.norm();
    if (len > 1e-12) return v / len;
  }
}

/// Planar patches and Gaussian blobs, clamped to the scene cube.
inline std::vector<Vec3> sample_scene(std::size_t count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::uniform_real_distribution<double> center(-0.8 * kSceneHalfExtent, 0.8 * kSceneHalfExtent);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t per_primitive = std::max<std::size_t>(16, count / 12);

  std::vector<Vec3> pts;
  pts.reserve(count);
  while (pts.size() < count) {
    const Vec3 c(center(rng), center(rng), center(rng));
    const std::size_t k = std::min(per_primitive, count - pts.size());
    if (unit(rng) < 0.6) {
      const Vec3 normal = random_unit(rng);
      Vec3 a = normal.cross(random_unit(rng));
      while (a.norm() < 1e-6) a = normal.cross(random_unit(rng));
      a.normalize();
      const Vec3 b = normal.cross(a);
      const double half = (0.15 + 0.35 * unit(rng)) * kSceneHalfExtent;
      for (std::size_t i = 0; i < k; ++i) {
        double u = (2.0 * unit(rng) - 1.0) * half;
        double v = (2.0 * unit(rng) - 1.0) * half;
        pts.push_back(c + u * a + v * b);
      }
    } else {
      const double sigma = (0.03 + 0.09 * unit(rng)) * kSceneHalfExtent;
      for (std::size_t i = 0; i < k; ++i) {
        pts.push_back(c + sigma * Vec3(gauss(rng), gauss(rng), gauss(rng)));
      }
    }
  }
  for (auto& p : pts) p = p.cwiseMax(-kSceneHalfExtent).cwiseMin(kSceneHalfExtent);
  return pts;
}

}  // namespace detail

/// Random rigid transform with rotation angle exactly `rotation_magnitude`
/// about a uniform axis and translation of norm `translation_magnitude`.
inline RigidTransform random_transform(double rotation_magnitude, double translation_magnitude,
                                       std::mt19937_64& rng) {
  RigidTransform T;
  T.rotation = axis_angle_to_rotation(AxisAngle(detail::random_unit(rng) * rotation_magnitude));
  T.translation = detail::random_unit(rng) * translation_magnitude;
  return T;
}

/// Deterministic in cfg.seed. The overlap is a slab: all surface samples are
/// ordered along a random direction, the source keeps the first n_points and
/// the target the last n_points.
inline SynthPair synthesize_pair(const SynthConfig& cfg) {
  validate(cfg);
  std::mt19937_64 rng(cfg.seed);
  const std::size_t n = cfg.n_points;
  const auto shared = static_cast<std::size_t>(std::llround(cfg.overlap_fraction * static_cast<double>(n)));
  const std::size_t total = 2 * n - shared;

  std::vector<Vec3> scene = detail::sample_scene(total, rng);
  const Vec3 dir = detail::random_unit(rng);
  std::vector<std::size_t> order(total);
  for (std::size_t i = 0; i < total; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return scene[a].dot(dir) < scene[b].dot(dir); });

  // order[0, n - shared) source-only, [n - shared, n) shared, [n, total) target-only.
  const std::size_t private_count = n - shared;
  SynthPair pair;
  pair.n_shared = shared;
  pair.source.points.reserve(n);
  pair.target.points.reserve(n);
  for (std::size_t i = 0; i < shared; ++i) pair.source.points.push_back(scene[order[private_count + i]]);
  for (std::size_t i = 0; i < private_count; ++i) pair.source.points.push_back(scene[order[i]]);
  for (std::size_t i = 0; i < shared; ++i) pair.target.points.push_back(scene[order[private_count + i]]);
  for (std::size_t i = 0; i < private_count; ++i) pair.target.points.push_back(scene[order[n + i]]);

  pair.gt = random_transform(cfg.rotation_magnitude, cfg.translation_magnitude, rng);
  for (auto& q : pair.target.points) q = pair.gt(q);

  if (cfg.noise_sigma > 0.0) {
    // Split evenly between the clouds so matched points differ by noise_sigma
    // per axis.
    std::normal_distribution<double> noise(0.0, cfg.noise_sigma / std::numbers::sqrt2);
    for (auto* cloud : {&pair.source, &pair.target}) {
      for (auto& p : cloud->points) p += Vec3(noise(rng), noise(rng), noise(rng));
    }
  }
  return pair;
}

}  // namespace houghreg
