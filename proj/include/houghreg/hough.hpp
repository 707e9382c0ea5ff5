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

// Sparse 6D Hough voting over (axis-angle, translation).
//
// Every triplet that survives the tuple test casts one unit vote into the bin
// floor(r / b_r) ++ floor(t / b_t). The accumulator stores only occupied bins,
// optionally blurs them with a truncated separable Gaussian, and the bin with
// the largest mass is decoded into the consensus transform.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "houghreg/cloud.hpp"
#include "houghreg/common.hpp"
#include "houghreg/correspondence.hpp"
#include "houghreg/geometry.hpp"
#include "houghreg/matching.hpp"
#include "houghreg/parallel.hpp"
#include "houghreg/result.hpp"

namespace houghreg {

/// Pose parameters smaller than this in magnitude are treated as exactly 0.
inline constexpr double kPoseSnap = 1e-12;

/// Continuous parameters of one triplet's pose.
struct PoseVote {
  AxisAngle r;
  Vec3 t = Vec3::Zero();
};

struct Bin {
  BinKey key{};
  double mass = 0.0;
};

/// A vote retained alongside the accumulator for sub-bin decoding.
struct RawVote {
  BinKey key{};
  PoseVote pose;
};

struct SmoothingConfig {
  bool enabled = true;
  double sigma_bins = 1.0;
  int radius_bins = 2;
};

struct HoughConfig {
  double b_r = 0.02;  // radians per bin
  double b_t = 0.02;  // meters per bin
  SmoothingConfig smoothing;
  // When > 0, refit Procrustes on every correspondence within refit_tau of
  // the decoded pose.
  double refit_tau = 0.0;
};

inline void validate(const HoughConfig& cfg) {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (!(cfg.b_r > 0.0) || !std::isfinite(cfg.b_r)) bad("b_r must be positive");
  if (!(cfg.b_t > 0.0) || !std::isfinite(cfg.b_t)) bad("b_t must be positive");
  if (cfg.smoothing.enabled) {
    if (!(cfg.smoothing.sigma_bins > 0.0)) bad("smoothing sigma_bins must be positive");
    if (cfg.smoothing.radius_bins < 1) bad("smoothing radius_bins must be >= 1");
  }
  if (!(cfg.refit_tau >= 0.0)) bad("refit_tau must be >= 0");
}

inline nlohmann::ordered_json to_json(const HoughConfig& cfg) {
  nlohmann::ordered_json j;
  j["b_r"] = cfg.b_r;
  j["b_t"] = cfg.b_t;
  if (cfg.smoothing.enabled) {
    j["smoothing"] = {{"type", "gaussian"},
                      {"sigma_bins", cfg.smoothing.sigma_bins},
                      {"radius_bins", cfg.smoothing.radius_bins}};
  } else {
    j["smoothing"] = {{"type", "none"}};
  }
  j["refit_tau"] = cfg.refit_tau;
  return j;
}

inline nlohmann::ordered_json to_json(const MatchConfig& cfg) {
  nlohmann::ordered_json j;
  j["voxel_v"] = cfg.voxel_v;
  j["n_triplets"] = cfg.n_triplets;
  j["seed"] = cfg.seed;
  j["mutual_check"] = cfg.mutual_check;
  return j;
}

namespace detail {

inline std::int32_t bin_index(double value, double size) {
  const double f = std::floor(value / size);
  if (!std::isfinite(f) || f < std::numeric_limits<std::int32_t>::min() ||
      f > std::numeric_limits<std::int32_t>::max()) {
    throw Error(ErrorCode::InvalidConfig, "pose parameter " + std::to_string(value) +
                                              " does not fit a bin index at bin size " + std::to_string(size));
  }
  return static_cast<std::int32_t>(f);
}

inline bool key_less(const Bin& a, const Bin& b) { return a.key < b.key; }

/// Stable sort by key, then sum runs of equal keys in their emitted order and
/// drop bins whose mass is not positive. Determinism follows from the input
/// order alone.
inline std::vector<Bin> sort_and_reduce(std::vector<Bin> entries) {
  std::stable_sort(entries.begin(), entries.end(), key_less);
  std::vector<Bin> out;
  out.reserve(entries.size());
  for (const Bin& e : entries) {
    if (!out.empty() && out.back().key == e.key) {
      out.back().mass += e.mass;
    } else {
      if (!out.empty() && !(out.back().mass > 0.0)) out.pop_back();
      out.push_back(e);
    }
  }
  if (!out.empty() && !(out.back().mass > 0.0)) out.pop_back();
  return out;
}

/// exp(-o^2 / (2 sigma^2)) for o in [-radius, radius], normalized to sum 1.
/// The 6D kernel is the outer product, so it also sums to 1.
inline std::vector<double> gaussian_weights(double sigma_bins, int radius_bins) {
  std::vector<double> w(2 * static_cast<std::size_t>(radius_bins) + 1);
  double sum = 0.0;
  for (int o = -radius_bins; o <= radius_bins; ++o) {
    double v = std::exp(-static_cast<double>(o * o) / (2.0 * sigma_bins * sigma_bins));
    w[static_cast<std::size_t>(o + radius_bins)] = v;
    sum += v;
  }
  for (double& v : w) v /= sum;
  return w;
}

/// One separable pass along `axis` over a key-sorted bin list.
inline std::vector<Bin> smooth_axis(std::span<const Bin> bins, int axis, std::span<const double> w, int radius) {
  std::vector<Bin> emitted;
  emitted.reserve(bins.size() * w.size());
  for (const Bin& b : bins) {
    for (int o = -radius; o <= radius; ++o) {
      Bin e = b;
      e.key[static_cast<std::size_t>(axis)] += o;
      e.mass *= w[static_cast<std::size_t>(o + radius)];
      emitted.push_back(e);
    }
  }
  return sort_and_reduce(std::move(emitted));
}

/// Streams the smoothed space one slab (fixed first key component) at a time
/// in ascending key order. Axes 1..5 are blurred per input slab; axis 0 then
/// mixes the 2r+1 neighbouring slabs. Peak memory is bounded by a window of
/// slabs rather than the whole dilated support.
template <typename Sink>
void for_each_smoothed_slab(std::span<const Bin> bins, double sigma_bins, int radius_bins, Sink&& sink) {
  if (bins.empty()) return;
  const std::vector<double> w = gaussian_weights(sigma_bins, radius_bins);
  const int r = radius_bins;

  // Input slab boundaries (bins are key-sorted, so slabs are contiguous).
  std::vector<std::pair<std::int32_t, std::span<const Bin>>> slabs;
  for (std::size_t i = 0; i < bins.size();) {
    std::size_t j = i;
    while (j < bins.size() && bins[j].key[0] == bins[i].key[0]) ++j;
    slabs.emplace_back(bins[i].key[0], bins.subspan(i, j - i));
    i = j;
  }

  std::map<std::int32_t, std::vector<Bin>> blurred;  // window of slabs blurred along axes 1..5
  std::size_t next_slab = 0;
  std::int64_t c = static_cast<std::int64_t>(slabs.front().first) - r;
  const std::int64_t last = static_cast<std::int64_t>(slabs.back().first) + r;
  while (c <= last) {
    // Make sure every input slab within [c - r, c + r] is blurred.
    while (next_slab < slabs.size() && slabs[next_slab].first <= c + r) {
      std::vector<Bin> cur(slabs[next_slab].second.begin(), slabs[next_slab].second.end());
      for (int axis = 1; axis < 6; ++axis) cur = smooth_axis(cur, axis, w, r);
      blurred.emplace(slabs[next_slab].first, std::move(cur));
      ++next_slab;
    }
    while (!blurred.empty() && blurred.begin()->first < c - r) blurred.erase(blurred.begin());

    if (blurred.empty()) {
      // Gap in the occupied slabs: jump to the next output slab with support.
      c = static_cast<std::int64_t>(slabs[next_slab].first) - r;
      continue;
    }

    std::vector<Bin> emitted;
    for (int o = -r; o <= r; ++o) {
      auto it = blurred.find(static_cast<std::int32_t>(c - o));
      if (it == blurred.end()) continue;
      const double wo = w[static_cast<std::size_t>(o + r)];
      for (const Bin& b : it->second) {
        Bin e = b;
        e.key[0] = static_cast<std::int32_t>(c);
        e.mass *= wo;
        emitted.push_back(e);
      }
    }
    std::vector<Bin> out = sort_and_reduce(std::move(emitted));
    if (!out.empty()) sink(std::span<const Bin>(out));
    ++c;
  }
}

}  // namespace detail

/// Sparse accumulator: key-sorted occupied bins (all masses > 0) plus the raw
/// votes that produced them. Immutable once built.
class HoughSpace {
 public:
  HoughSpace() = default;
  HoughSpace(double b_r, double b_t) : b_r_(b_r), b_t_(b_t) {}

  /// Builds from bins in any order; duplicate keys are summed and
  /// non-positive masses dropped.
  static HoughSpace from_bins(std::vector<Bin> bins, double b_r, double b_t, std::vector<RawVote> votes = {}) {
    HoughSpace h(b_r, b_t);
    h.bins_ = detail::sort_and_reduce(std::move(bins));
    h.votes_ = std::move(votes);
    return h;
  }

  /// Takes bins that are already key-sorted, unique and positive.
  static HoughSpace from_sorted_bins(std::vector<Bin> bins, double b_r, double b_t, std::vector<RawVote> votes) {
    HoughSpace h(b_r, b_t);
    h.bins_ = std::move(bins);
    h.votes_ = std::move(votes);
    return h;
  }

  std::span<const Bin> bins() const { return bins_; }
  std::span<const RawVote> votes() const { return votes_; }
  std::size_t size() const { return bins_.size(); }
  bool empty() const { return bins_.empty(); }
  double b_r() const { return b_r_; }
  double b_t() const { return b_t_; }

  double total_mass() const {
    double s = 0.0;
    for (const Bin& b : bins_) s += b.mass;
    return s;
  }

  double mass_at(const BinKey& key) const {
    auto it = std::lower_bound(bins_.begin(), bins_.end(), Bin{key, 0.0}, detail::key_less);
    return (it != bins_.end() && it->key == key) ? it->mass : 0.0;
  }

 private:
  double b_r_ = 0.0;
  double b_t_ = 0.0;
  std::vector<Bin> bins_;
  std::vector<RawVote> votes_;
};

inline BinKey bin_of(const AxisAngle& r, const Vec3& t, double b_r, double b_t) {
  if (!(b_r > 0.0) || !(b_t > 0.0)) throw Error(ErrorCode::InvalidConfig, "bin sizes must be positive");
  return {detail::bin_index(r.r.x(), b_r), detail::bin_index(r.r.y(), b_r), detail::bin_index(r.r.z(), b_r),
          detail::bin_index(t.x(), b_t),   detail::bin_index(t.y(), b_t),   detail::bin_index(t.z(), b_t)};
}

/// Procrustes on the triplet's three point pairs, rotation as axis-angle.
inline PoseVote triplet_pose(const Triplet& t, std::span<const Correspondence> corrs, const PointCloud& P,
                             const PointCloud& Q) {
  std::array<Vec3, 3> src, dst;
  for (std::size_t k = 0; k < 3; ++k) {
    src[k] = P[corrs[t.idx[k]].src_id];
    dst[k] = Q[corrs[t.idx[k]].dst_id];
  }
  RigidTransform T = solve_procrustes(src, dst);
  PoseVote v{rotation_to_axis_angle(T.rotation), T.translation};
  // Round-off residue around zero (e.g. -1e-17 for identical clouds) would
  // otherwise floor into bin -1.
  for (int k = 0; k < 3; ++k) {
    if (std::abs(v.r.r[k]) < kPoseSnap) v.r.r[k] = 0.0;
    if (std::abs(v.t[k]) < kPoseSnap) v.t[k] = 0.0;
  }
  return v;
}

/// One unit vote per pose. Keys are computed in parallel, each worker builds
/// a sorted histogram of its chunk and the chunks are merged; unit masses make
/// the totals independent of the partition.
inline HoughSpace accumulate(std::span<const PoseVote> poses, double b_r, double b_t,
                             std::size_t threads = thread_count()) {
  std::vector<RawVote> votes(poses.size());
  parallel_for(poses.size(), threads, [&](std::size_t i) {
    votes[i] = {bin_of(poses[i].r, poses[i].t, b_r, b_t), poses[i]};
  });

  const std::size_t chunks = std::clamp<std::size_t>(threads, 1, std::max<std::size_t>(poses.size(), 1));
  std::vector<std::vector<Bin>> partial(chunks);
  parallel_chunks(poses.size(), chunks, [&](std::size_t c, std::size_t begin, std::size_t end) {
    std::vector<BinKey> keys;
    keys.reserve(end - begin);
    for (std::size_t i = begin; i < end; ++i) keys.push_back(votes[i].key);
    std::sort(keys.begin(), keys.end());
    auto& out = partial[c];
    for (const BinKey& k : keys) {
      if (!out.empty() && out.back().key == k) {
        out.back().mass += 1.0;
      } else {
        out.push_back({k, 1.0});
      }
    }
  });
  std::vector<Bin> all;
  for (auto& p : partial) all.insert(all.end(), p.begin(), p.end());
  return HoughSpace::from_bins(std::move(all), b_r, b_t, std::move(votes));
}

inline HoughSpace accumulate(std::span<const PoseVote> poses, const HoughConfig& cfg,
                             std::size_t threads = thread_count()) {
  return accumulate(poses, cfg.b_r, cfg.b_t, threads);
}

/// Spreads every bin's mass over the Chebyshev ball of radius_bins with a
/// normalized truncated Gaussian; total mass is conserved. Raw votes carry
/// over unchanged.
inline HoughSpace gaussian_smooth(const HoughSpace& H, double sigma_bins, int radius_bins) {
  if (!(sigma_bins > 0.0)) throw Error(ErrorCode::InvalidConfig, "sigma_bins must be positive");
  if (radius_bins < 1) throw Error(ErrorCode::InvalidConfig, "radius_bins must be >= 1");
  std::vector<Bin> out;
  detail::for_each_smoothed_slab(H.bins(), sigma_bins, radius_bins,
                                 [&](std::span<const Bin> slab) { out.insert(out.end(), slab.begin(), slab.end()); });
  std::vector<RawVote> votes(H.votes().begin(), H.votes().end());
  return HoughSpace::from_sorted_bins(std::move(out), H.b_r(), H.b_t(), std::move(votes));
}

/// Maximum-mass bin; ties go to the lexicographically smallest key.
inline std::pair<BinKey, double> argmax_bin(std::span<const Bin> bins) {
  if (bins.empty()) throw Error(ErrorCode::EmptyHoughSpace, "no votes were cast");
  const Bin* best = &bins.front();
  for (const Bin& b : bins) {
    if (b.mass > best->mass || (b.mass == best->mass && b.key < best->key)) best = &b;
  }
  return {best->key, best->mass};
}

inline std::pair<BinKey, double> argmax_bin(const HoughSpace& H) { return argmax_bin(H.bins()); }

/// argmax_bin(gaussian_smooth(H, ...)) without materializing the whole
/// smoothed space.
inline std::pair<BinKey, double> smoothed_argmax(const HoughSpace& H, double sigma_bins, int radius_bins) {
  if (H.empty()) throw Error(ErrorCode::EmptyHoughSpace, "no votes were cast");
  std::optional<std::pair<BinKey, double>> best;
  detail::for_each_smoothed_slab(H.bins(), sigma_bins, radius_bins, [&](std::span<const Bin> slab) {
    auto cand = argmax_bin(slab);
    // Slabs arrive in ascending key order, so only strictly larger masses win.
    if (!best || cand.second > best->second) best = cand;
  });
  return *best;
}

inline Vec3 bin_center_rotation(const BinKey& k, double b_r) {
  return {(k[0] + 0.5) * b_r, (k[1] + 0.5) * b_r, (k[2] + 0.5) * b_r};
}

inline Vec3 bin_center_translation(const BinKey& k, double b_t) {
  return {(k[3] + 0.5) * b_t, (k[4] + 0.5) * b_t, (k[5] + 0.5) * b_t};
}

inline std::int64_t chebyshev_distance(const BinKey& a, const BinKey& b) {
  std::int64_t d = 0;
  for (std::size_t k = 0; k < 6; ++k) {
    d = std::max<std::int64_t>(d, std::abs(static_cast<std::int64_t>(a[k]) - b[k]));
  }
  return d;
}

struct DecodedPose {
  RigidTransform transform;
  std::size_t n_votes = 0;  // raw votes averaged; 0 means bin-center fallback
};

/// Mean of the raw votes within Chebyshev distance 1 of the winner, or the
/// winner's bin center when there are none.
inline DecodedPose decode_pose(const HoughSpace& H, const BinKey& winner) {
  Vec3 r_sum = Vec3::Zero();
  Vec3 t_sum = Vec3::Zero();
  std::size_t n = 0;
  for (const RawVote& v : H.votes()) {
    if (chebyshev_distance(v.key, winner) <= 1) {
      r_sum += v.pose.r.r;
      t_sum += v.pose.t;
      ++n;
    }
  }
  DecodedPose out;
  out.n_votes = n;
  if (n > 0) {
    out.transform.rotation = axis_angle_to_rotation(AxisAngle(r_sum / static_cast<double>(n)));
    out.transform.translation = t_sum / static_cast<double>(n);
  } else {
    out.transform.rotation = axis_angle_to_rotation(AxisAngle(bin_center_rotation(winner, H.b_r())));
    out.transform.translation = bin_center_translation(winner, H.b_t());
  }
  return out;
}

inline RigidTransform decode(const HoughSpace& H, const BinKey& winner) { return decode_pose(H, winner).transform; }

/// Least-squares refit on every correspondence within tau of T. Returns T
/// unchanged when fewer than three qualify.
inline RigidTransform refit_on_inliers(const RigidTransform& T, std::span<const Correspondence> corrs,
                                       const PointCloud& P, const PointCloud& Q, double tau,
                                       std::size_t* n_used = nullptr) {
  std::vector<Vec3> src, dst;
  for (const auto& c : corrs) {
    if ((Q[c.dst_id] - T(P[c.src_id])).norm() <= tau) {
      src.push_back(P[c.src_id]);
      dst.push_back(Q[c.dst_id]);
    }
  }
  if (n_used) *n_used = src.size();
  if (src.size() < 3) return T;
  return solve_procrustes(src, dst);
}

/// Full pipeline: sample and filter triplets, solve each, vote, optionally
/// smooth, take the argmax and decode it.
inline RegistrationResult hough_register(std::span<const Correspondence> corrs, const PointCloud& P,
                                         const PointCloud& Q, const MatchConfig& match_cfg,
                                         const HoughConfig& hough_cfg, std::size_t threads = thread_count()) {
  validate(match_cfg);
  validate(hough_cfg);
  if (corrs.size() < 3) {
    throw Error(ErrorCode::TooFewCorrespondences, "need at least 3 correspondences, got " + std::to_string(corrs.size()));
  }

  RegistrationResult result;
  result.method = "hough";
  result.n_correspondences = corrs.size();
  result.n_triplets_sampled = match_cfg.n_triplets;
  result.config["method"] = "hough";
  result.config["matching"] = to_json(match_cfg);
  result.config["hough"] = to_json(hough_cfg);
  StageClock clock(result.timings);

  const std::vector<Triplet> triplets = sample_triplets(corrs, P, Q, match_cfg, threads);
  clock.lap("sample_triplets");

  std::vector<PoseVote> poses(triplets.size());
  std::vector<std::uint8_t> ok(triplets.size(), 1);
  parallel_for(triplets.size(), threads, [&](std::size_t i) {
    try {
      poses[i] = triplet_pose(triplets[i], corrs, P, Q);
    } catch (const Error&) {
      ok[i] = 0;
    }
  });
  std::vector<PoseVote> accepted;
  accepted.reserve(poses.size());
  for (std::size_t i = 0; i < poses.size(); ++i) {
    if (ok[i]) accepted.push_back(poses[i]);
  }
  result.n_votes_dropped = poses.size() - accepted.size();
  result.n_triplets_accepted = accepted.size();
  clock.lap("vote");
  if (accepted.empty()) {
    throw Error(ErrorCode::NoValidTriplets, "all " + std::to_string(match_cfg.n_triplets) +
                                                " sampled triplets were rejected");
  }

  const HoughSpace H = accumulate(accepted, hough_cfg, threads);
  clock.lap("accumulate");

  std::pair<BinKey, double> winner;
  if (hough_cfg.smoothing.enabled) {
    winner = smoothed_argmax(H, hough_cfg.smoothing.sigma_bins, hough_cfg.smoothing.radius_bins);
  } else {
    winner = argmax_bin(H);
  }
  clock.lap("argmax");

  result.winning_bin = winner.first;
  result.winning_mass = winner.second;
  result.transform = decode(H, winner.first);
  clock.lap("decode");

  if (hough_cfg.refit_tau > 0.0) {
    result.transform = refit_on_inliers(result.transform, corrs, P, Q, hough_cfg.refit_tau, &result.n_inliers);
    clock.lap("refit");
  }
  return result;
}

}  // namespace houghreg
