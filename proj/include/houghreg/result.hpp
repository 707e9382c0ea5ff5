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
#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "houghreg/geometry.hpp"

namespace houghreg {

/// Six signed bin indices: rotation (x, y, z) then translation (x, y, z).
using BinKey = std::array<std::int32_t, 6>;

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

/// Outcome of one pairwise registration, with provenance.
struct RegistrationResult {
  std::string method;  // "hough" or "ransac"
  RigidTransform transform;
  std::optional<BinKey> winning_bin;  // hough only
  double winning_mass = 0.0;          // vote mass (hough) or inlier count (ransac)
  std::size_t n_correspondences = 0;
  std::size_t n_triplets_sampled = 0;
  std::size_t n_triplets_accepted = 0;
  std::size_t n_votes_dropped = 0;
  std::size_t n_inliers = 0;  // ransac: support of the final model
  std::vector<StageTiming> timings;
  nlohmann::ordered_json config;

  double total_seconds() const {
    double s = 0.0;
    for (const auto& t : timings) s += t.seconds;
    return s;
  }
};

/// Timings are wall-clock and therefore excluded unless requested; without
/// them the document is a pure function of inputs and configuration.
inline nlohmann::ordered_json to_json(const RegistrationResult& r, bool include_timings = false) {
  nlohmann::ordered_json j;
  j["method"] = r.method;
  const Mat4 m = r.transform.matrix();
  std::vector<double> flat;
  for (int i = 0; i < 4; ++i)
    for (int k = 0; k < 4; ++k) flat.push_back(m(i, k));
  j["transform"] = flat;
  if (r.winning_bin) {
    j["winning_bin"] = std::vector<std::int32_t>(r.winning_bin->begin(), r.winning_bin->end());
  } else {
    j["winning_bin"] = nullptr;
  }
  j["winning_mass"] = r.winning_mass;
  j["n_correspondences"] = r.n_correspondences;
  j["n_triplets_sampled"] = r.n_triplets_sampled;
  j["n_triplets_accepted"] = r.n_triplets_accepted;
  j["n_votes_dropped"] = r.n_votes_dropped;
  if (r.method == "ransac") j["n_inliers"] = r.n_inliers;
  if (include_timings) {
    nlohmann::ordered_json t = nlohmann::ordered_json::object();
    for (const auto& s : r.timings) t[s.stage] = s.seconds;
    j["timings"] = t;
  }
  j["config"] = r.config;
  return j;
}

inline std::string serialize(const RegistrationResult& r, bool include_timings = false) {
  return to_json(r, include_timings).dump(2) + "\n";
}

/// Accumulates named stage durations.
class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out), start_(std::chrono::steady_clock::now()) {}

  void lap(std::string stage) {
    auto now = std::chrono::steady_clock::now();
    out_.push_back({std::move(stage), std::chrono::duration<double>(now - start_).count()});
    start_ = now;
  }

 private:
  std::vector<StageTiming>& out_;
  std::chrono::steady_clock::time_point start_;
};

}  // namespace houghreg
