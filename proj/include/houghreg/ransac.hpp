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

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "houghreg/cloud.hpp"
#include "houghreg/common.hpp"
#include "houghreg/correspondence.hpp"
#include "houghreg/geometry.hpp"
#include "houghreg/matching.hpp"
#include "houghreg/result.hpp"

namespace houghreg {

/// Textbook hypothesize-and-verify RANSAC over minimal 3-correspondence
/// samples. Samples that are degenerate or fail the tuple test are skipped
/// without verification but still count as iterations.
struct RansacConfig {
  std::size_t max_iterations = 100000;
  double voxel_v = 0.05;     // tuple-test scale
  double inlier_tau = 0.15;  // meters, conventionally 3 * voxel_v
  std::uint64_t seed = 0;
  bool early_exit = true;
  double early_exit_confidence = 0.999;
};

inline void validate(const RansacConfig& cfg) {
  auto bad = [](const std::string& msg) { throw Error(ErrorCode::InvalidConfig, msg); };
  if (cfg.max_iterations < 1) bad("max_iterations must be >= 1");
  if (!(cfg.voxel_v > 0.0)) bad("voxel_v must be positive");
  if (!(cfg.inlier_tau > 0.0)) bad("inlier_tau must be positive");
  if (!(cfg.early_exit_confidence > 0.0 && cfg.early_exit_confidence < 1.0)) {
    bad("early_exit_confidence must be in (0, 1)");
  }
}

inline nlohmann::ordered_json to_json(const RansacConfig& cfg) {
  nlohmann::ordered_json j;
  j["variant"] = "textbook";
  j["max_iterations"] = cfg.max_iterations;
  j["sample_size"] = 3;
  j["voxel_v"] = cfg.voxel_v;
  j["inlier_tau"] = cfg.inlier_tau;
  j["seed"] = cfg.seed;
  j["early_exit"] = cfg.early_exit;
  j["early_exit_confidence"] = cfg.early_exit_confidence;
  return j;
}

/// Per-iteration record, filled when a trace is requested.
struct RansacIteration {
  Triplet sample;
  bool valid = false;           // passed degeneracy and tuple tests
  std::size_t n_inliers = 0;    // hypothesis support (valid samples only)
  std::size_t best_so_far = 0;  // best support after this iteration
};

inline std::size_t count_inliers(const RigidTransform& T, std::span<const Correspondence> corrs,
                                 const PointCloud& P, const PointCloud& Q, double tau,
                                 std::vector<std::uint32_t>* inliers = nullptr) {
  const double tau2 = tau * tau;
  std::size_t n = 0;
  if (inliers) inliers->clear();
  for (std::size_t i = 0; i < corrs.size(); ++i) {
    const auto& c = corrs[i];
    if ((Q[c.dst_id] - T(P[c.src_id])).squaredNorm() <= tau2) {
      ++n;
      if (inliers) inliers->push_back(static_cast<std::uint32_t>(i));
    }
  }
  return n;
}

/// Iterations needed so that an all-inlier minimal sample is drawn with the
/// given confidence at inlier fraction w.
inline double required_iterations(double w, double confidence) {
  const double p_good = w * w * w;
  if (p_good <= 0.0) return std::numeric_limits<double>::infinity();
  if (p_good >= 1.0) return 1.0;
  return std::log(1.0 - confidence) / std::log(1.0 - p_good);
}

inline RegistrationResult ransac_register(std::span<const Correspondence> corrs, const PointCloud& P,
                                          const PointCloud& Q, const RansacConfig& cfg,
                                          std::vector<RansacIteration>* trace = nullptr) {
  validate(cfg);
  if (corrs.size() < 3) {
    throw Error(ErrorCode::TooFewCorrespondences, "need at least 3 correspondences, got " + std::to_string(corrs.size()));
  }
  for (const auto& c : corrs) {
    if (c.src_id >= P.size() || c.dst_id >= Q.size()) {
      throw Error(ErrorCode::InvalidConfig, "correspondence (" + std::to_string(c.src_id) + ", " +
                                                std::to_string(c.dst_id) + ") is out of range for the clouds");
    }
  }

  RegistrationResult result;
  result.method = "ransac";
  result.n_correspondences = corrs.size();
  result.config["method"] = "ransac";
  result.config["ransac"] = to_json(cfg);
  StageClock clock(result.timings);

  std::mt19937_64 rng(cfg.seed);
  std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(corrs.size() - 1));
  if (trace) trace->clear();

  RigidTransform best_model;
  std::size_t best_support = 0;
  bool have_model = false;
  std::size_t iterations = 0;
  std::size_t valid = 0;
  const double n = static_cast<double>(corrs.size());

  while (iterations < cfg.max_iterations) {
    ++iterations;
    Triplet t;
    std::uint32_t a = pick(rng);
    std::uint32_t b = pick(rng);
    while (b == a) b = pick(rng);
    std::uint32_t c = pick(rng);
    while (c == a || c == b) c = pick(rng);
    t.idx = {a, b, c};
    std::sort(t.idx.begin(), t.idx.end());

    RansacIteration rec;
    rec.sample = t;
    if (!source_degenerate(t, corrs, P) && tuple_test(t, corrs, P, Q, cfg.voxel_v)) {
      std::array<Vec3, 3> src, dst;
      for (std::size_t k = 0; k < 3; ++k) {
        src[k] = P[corrs[t.idx[k]].src_id];
        dst[k] = Q[corrs[t.idx[k]].dst_id];
      }
      RigidTransform model = solve_procrustes(src, dst);
      std::size_t support = count_inliers(model, corrs, P, Q, cfg.inlier_tau);
      rec.valid = true;
      rec.n_inliers = support;
      ++valid;
      if (!have_model || support > best_support) {
        best_model = model;
        best_support = support;
        have_model = true;
      }
    }
    rec.best_so_far = best_support;
    if (trace) trace->push_back(rec);

    if (cfg.early_exit && have_model &&
        static_cast<double>(iterations) >=
            required_iterations(static_cast<double>(best_support) / n, cfg.early_exit_confidence)) {
      break;
    }
  }
  clock.lap("hypothesize_verify");
  result.n_triplets_sampled = iterations;
  result.n_triplets_accepted = valid;

  if (!have_model) {
    throw Error(ErrorCode::NoValidTriplets,
                "all " + std::to_string(iterations) + " RANSAC samples failed the degeneracy or tuple test");
  }

  std::vector<std::uint32_t> inliers;
  count_inliers(best_model, corrs, P, Q, cfg.inlier_tau, &inliers);
  RigidTransform final_model = best_model;
  if (inliers.size() >= 3) {
    std::vector<Vec3> src, dst;
    for (auto i : inliers) {
      src.push_back(P[corrs[i].src_id]);
      dst.push_back(Q[corrs[i].dst_id]);
    }
    final_model = solve_procrustes(src, dst);
  }
  clock.lap("refit");

  // The least-squares refit can lose a boundary inlier; never return a model
  // with less support than the best sampled hypothesis.
  std::size_t final_support = count_inliers(final_model, corrs, P, Q, cfg.inlier_tau);
  if (final_support < best_support) {
    final_model = best_model;
    final_support = best_support;
  }

  result.transform = final_model;
  result.winning_mass = static_cast<double>(best_support);
  result.n_inliers = final_support;
  return result;
}

}  // namespace houghreg
