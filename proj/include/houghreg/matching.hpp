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
#include <array>
#include <cmath>
#include <cstdint>
#include <iterator>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "houghreg/cloud.hpp"
#include "houghreg/common.hpp"
#include "houghreg/correspondence.hpp"
#include "houghreg/geometry.hpp"
#include "houghreg/parallel.hpp"

namespace houghreg {

/// Three distinct indices into a correspondence list, stored ascending.
struct Triplet {
  std::array<std::uint32_t, 3> idx{};

  friend bool operator==(const Triplet&, const Triplet&) = default;
};

struct MatchConfig {
  double voxel_v = 0.05;  // meters; the tuple test tolerates 3 * voxel_v
  std::size_t n_triplets = 50000;
  std::uint64_t seed = 0;
  bool mutual_check = false;
};

inline void validate(const MatchConfig& cfg) {
  if (!(cfg.voxel_v > 0.0) || !std::isfinite(cfg.voxel_v)) {
    throw Error(ErrorCode::InvalidConfig, "voxel_v must be positive");
  }
  if (cfg.n_triplets < 1) throw Error(ErrorCode::InvalidConfig, "n_triplets must be >= 1");
}

/// Top-1 nearest neighbour in descriptor space from P to Q and from Q to P.
/// The union (or, with mutual_check, the intersection) is returned sorted by
/// (src_id, dst_id) without duplicates; similarity is the negated descriptor
/// distance.
inline std::vector<Correspondence> match_features(const FeatureSet& feat_p, const FeatureSet& feat_q,
                                                  bool mutual_check = false) {
  if (feat_p.count() == 0 || feat_q.count() == 0) {
    throw Error(ErrorCode::EmptyIndex, "feature sets must be non-empty");
  }
  if (feat_p.dim() != feat_q.dim()) {
    throw Error(ErrorCode::DimensionMismatch, "descriptor dimensions differ (" + std::to_string(feat_p.dim()) +
                                                  " vs " + std::to_string(feat_q.dim()) + ")");
  }
  const NearestNeighborIndex index_p(feat_p);
  const NearestNeighborIndex index_q(feat_q);
  const std::size_t dim = feat_p.dim();
  const std::size_t threads = thread_count();

  auto row = [dim](const FeatureSet& f, std::size_t i) {
    return std::span<const double>(f.descriptors.data() + i * dim, dim);
  };
  std::vector<Correspondence> forward(feat_p.count());
  parallel_for(feat_p.count(), threads, [&](std::size_t i) {
    Neighbor nn = index_q.query(row(feat_p, i));
    forward[i] = {static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(nn.id),
                  static_cast<float>(-nn.distance)};
  });
  std::vector<Correspondence> backward(feat_q.count());
  parallel_for(feat_q.count(), threads, [&](std::size_t j) {
    Neighbor nn = index_p.query(row(feat_q, j));
    backward[j] = {static_cast<std::uint32_t>(nn.id), static_cast<std::uint32_t>(j),
                   static_cast<float>(-nn.distance)};
  });

  auto by_ids = [](const Correspondence& a, const Correspondence& b) {
    return a.src_id != b.src_id ? a.src_id < b.src_id : a.dst_id < b.dst_id;
  };
  auto same_ids = [](const Correspondence& a, const Correspondence& b) {
    return a.src_id == b.src_id && a.dst_id == b.dst_id;
  };
  std::sort(forward.begin(), forward.end(), by_ids);
  std::sort(backward.begin(), backward.end(), by_ids);
  backward.erase(std::unique(backward.begin(), backward.end(), same_ids), backward.end());

  std::vector<Correspondence> out;
  if (mutual_check) {
    std::set_intersection(forward.begin(), forward.end(), backward.begin(), backward.end(),
                          std::back_inserter(out), by_ids);
  } else {
    std::set_union(forward.begin(), forward.end(), backward.begin(), backward.end(), std::back_inserter(out),
                   by_ids);
  }
  return out;
}

struct OracleConfig {
  double inlier_ratio = 0.1;
  std::size_t n_total = 1000;
  double tolerance = 0.05;  // meters; a pair is a true match iff |q - T(p)| <= tolerance
  std::uint64_t seed = 0;
};

/// Correspondences with a controlled inlier ratio: round(inlier_ratio *
/// n_total) true matches (target nearest neighbour of T(p) within tolerance,
/// drawn without replacement) and random pairs that are not true matches,
/// shuffled together.
inline std::vector<Correspondence> oracle_correspondences(const PointCloud& P, const PointCloud& Q,
                                                          const RigidTransform& T_gt, const OracleConfig& cfg) {
  if (!(cfg.inlier_ratio >= 0.0 && cfg.inlier_ratio <= 1.0)) {
    throw Error(ErrorCode::InvalidConfig, "inlier_ratio must be in [0, 1]");
  }
  if (cfg.n_total < 1) throw Error(ErrorCode::InvalidConfig, "n_total must be >= 1");
  if (!(cfg.tolerance > 0.0)) throw Error(ErrorCode::InvalidConfig, "tolerance must be positive");
  if (P.empty() || Q.empty()) throw Error(ErrorCode::InvalidConfig, "clouds must be non-empty");

  const auto n_inliers =
      static_cast<std::size_t>(std::llround(cfg.inlier_ratio * static_cast<double>(cfg.n_total)));
  std::mt19937_64 rng(cfg.seed);

  std::vector<Correspondence> corrs;
  corrs.reserve(cfg.n_total);
  if (n_inliers > 0) {
    const NearestNeighborIndex index_q(Q);
    std::vector<Correspondence> pool;
    for (std::size_t i = 0; i < P.size(); ++i) {
      Neighbor nn = index_q.query(T_gt(P[i]));
      if (nn.distance <= cfg.tolerance) {
        pool.push_back({static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(nn.id), 0.0f});
      }
    }
    if (pool.size() < n_inliers) {
      throw Error(ErrorCode::InvalidConfig, "only " + std::to_string(pool.size()) +
                                                " true matches available, " + std::to_string(n_inliers) +
                                                " requested");
    }
    std::sample(pool.begin(), pool.end(), std::back_inserter(corrs), n_inliers, rng);
  }

  std::uniform_int_distribution<std::uint32_t> pick_p(0, static_cast<std::uint32_t>(P.size() - 1));
  std::uniform_int_distribution<std::uint32_t> pick_q(0, static_cast<std::uint32_t>(Q.size() - 1));
  const std::size_t max_attempts = 1000 * cfg.n_total + 1000;
  std::size_t attempts = 0;
  while (corrs.size() < cfg.n_total) {
    if (++attempts > max_attempts) {
      throw Error(ErrorCode::InvalidConfig, "could not draw enough outlier pairs; tolerance too large");
    }
    std::uint32_t i = pick_p(rng);
    std::uint32_t j = pick_q(rng);
    if ((Q[j] - T_gt(P[i])).norm() <= cfg.tolerance) continue;  // accidental inlier
    corrs.push_back({i, j, 0.0f});
  }
  std::shuffle(corrs.begin(), corrs.end(), rng);
  return corrs;
}

/// Triangle rigidity check: every within-cloud pairwise distance must agree
/// across the clouds by strictly less than 3 * v.
inline bool tuple_test(const Triplet& t, std::span<const Correspondence> corrs, const PointCloud& P,
                       const PointCloud& Q, double v) {
  const double limit = 3.0 * v;
  for (int a = 0; a < 3; ++a) {
    for (int b = a + 1; b < 3; ++b) {
      const Correspondence& ca = corrs[t.idx[a]];
      const Correspondence& cb = corrs[t.idx[b]];
      double dp = (P[ca.src_id] - P[cb.src_id]).norm();
      double dq = (Q[ca.dst_id] - Q[cb.dst_id]).norm();
      if (!(std::abs(dp - dq) < limit)) return false;
    }
  }
  return true;
}

/// True when the three points are too close to collinear (or coincident)
/// for a well-conditioned rotation estimate.
inline bool is_degenerate(const Vec3& a, const Vec3& b, const Vec3& c) {
  const double ab = (b - a).norm(), bc = (c - b).norm(), ca = (a - c).norm();
  const double shortest = std::min({ab, bc, ca});
  const double longest = std::max({ab, bc, ca});
  if (shortest < 1e-6) return true;
  const double area = 0.5 * (b - a).cross(c - a).norm();
  return area < 1e-3 * longest * longest;
}

inline bool source_degenerate(const Triplet& t, std::span<const Correspondence> corrs, const PointCloud& P) {
  return is_degenerate(P[corrs[t.idx[0]].src_id], P[corrs[t.idx[1]].src_id], P[corrs[t.idx[2]].src_id]);
}

/// n_triplets uniform draws of three distinct correspondence indices, in
/// draw order. Depends only on the correspondence count and the seed.
inline std::vector<Triplet> draw_triplets(std::size_t n_corrs, std::size_t n_triplets, std::uint64_t seed) {
  if (n_corrs < 3) {
    throw Error(ErrorCode::TooFewCorrespondences, "need at least 3 correspondences, got " + std::to_string(n_corrs));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(n_corrs - 1));
  std::vector<Triplet> draws(n_triplets);
  for (auto& t : draws) {
    std::uint32_t a = pick(rng);
    std::uint32_t b = pick(rng);
    while (b == a) b = pick(rng);
    std::uint32_t c = pick(rng);
    while (c == a || c == b) c = pick(rng);
    t.idx = {a, b, c};
    std::sort(t.idx.begin(), t.idx.end());
  }
  return draws;
}

/// Draws cfg.n_triplets triplets and keeps, in draw order, those whose
/// source points are non-degenerate and that pass the tuple test.
inline std::vector<Triplet> sample_triplets(std::span<const Correspondence> corrs, const PointCloud& P,
                                            const PointCloud& Q, const MatchConfig& cfg,
                                            std::size_t threads = thread_count()) {
  validate(cfg);
  std::vector<Triplet> draws = draw_triplets(corrs.size(), cfg.n_triplets, cfg.seed);
  for (const auto& c : corrs) {
    if (c.src_id >= P.size() || c.dst_id >= Q.size()) {
      throw Error(ErrorCode::InvalidConfig, "correspondence (" + std::to_string(c.src_id) + ", " +
                                                std::to_string(c.dst_id) + ") is out of range for the clouds");
    }
  }
  std::vector<std::uint8_t> keep(draws.size());
  parallel_for(draws.size(), threads, [&](std::size_t i) {
    keep[i] = !source_degenerate(draws[i], corrs, P) && tuple_test(draws[i], corrs, P, Q, cfg.voxel_v);
  });
  std::vector<Triplet> out;
  for (std::size_t i = 0; i < draws.size(); ++i) {
    if (keep[i]) out.push_back(draws[i]);
  }
  return out;
}

/// Fraction of correspondences with |q - T(p)| <= tau; 0 for an empty list.
inline double inlier_ratio(std::span<const Correspondence> corrs, const PointCloud& P, const PointCloud& Q,
                           const RigidTransform& T_gt, double tau) {
  if (corrs.empty()) return 0.0;
  std::size_t hits = 0;
  for (const auto& c : corrs) {
    if ((Q[c.dst_id] - T_gt(P[c.src_id])).norm() <= tau) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(corrs.size());
}

}  // namespace houghreg
