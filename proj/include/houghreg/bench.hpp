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

// Synthetic benchmark harness.
//
// A suite is a grid of data cells (inlier ratio x correspondence count x
// noise) crossed with method variants (Hough per bin size and smoothing
// setting, plus RANSAC). Every (cell, trial) pair gets its own seed,
//   trial_seed = splitmix64(splitmix64(splitmix64(seed) ^ cell) ^ trial),
// from which the scene, the correspondences and the method seeds derive, so
// any cell can be rerun on its own and all methods see identical inputs.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <numbers>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "houghreg/common.hpp"
#include "houghreg/geometry.hpp"
#include "houghreg/hough.hpp"
#include "houghreg/io.hpp"
#include "houghreg/matching.hpp"
#include "houghreg/parallel.hpp"
#include "houghreg/ransac.hpp"
#include "houghreg/synth.hpp"

namespace houghreg {

struct Thresholds {
  double rre_max_deg = 15.0;
  double rte_max_m = 0.30;
};

struct ScoreResult {
  bool success = false;
  MetricPair metrics;  // radians, meters
};

/// Success iff RRE <= rre_max and RTE <= rte_max (inclusive).
inline ScoreResult score(const RigidTransform& pred, const RigidTransform& gt, const Thresholds& th) {
  ScoreResult s;
  s.metrics = metrics(pred, gt);
  s.success = rad_to_deg(s.metrics.rre) <= th.rre_max_deg && s.metrics.rte <= th.rte_max_m;
  return s;
}

inline ScoreResult score(const RegistrationResult& result, const RigidTransform& gt, const Thresholds& th) {
  return score(result.transform, gt, th);
}

struct BinSize {
  double b_r = 0.02;
  double b_t = 0.02;
};

struct BenchSuite {
  // grid
  std::vector<double> inlier_ratios{0.2, 0.1, 0.05};
  std::vector<std::size_t> n_correspondences{2000};
  std::vector<double> noise_sigmas{0.01};
  std::vector<BinSize> bin_sizes{BinSize{}};
  std::vector<bool> smoothing{true};
  std::vector<std::string> methods{"hough", "ransac"};
  std::size_t trials = 20;
  std::uint64_t seed = 0;
  Thresholds thresholds;

  // scene
  std::size_t n_points = 2000;
  double overlap = 0.5;
  double rotation_magnitude = 1.0;
  double translation_magnitude = 0.5;

  // correspondences and voting
  double oracle_tolerance_factor = 4.0;  // true-match radius = max(factor * sigma, min)
  double oracle_tolerance_min = 0.01;
  double voxel_v = 0.025;
  std::size_t n_triplets = 50000;
  double smoothing_sigma_bins = 1.0;
  int smoothing_radius_bins = 2;
  // Hough refit on correspondences within this distance of the decoded pose;
  // 0 disables.
  double hough_refit_tau = 0.0;

  // ransac
  std::size_t ransac_max_iterations = 50000;
  double ransac_inlier_tau = 0.0;  // 0 means 3 * voxel_v
  bool ransac_early_exit = false;
  double ransac_confidence = 0.999;
  // Cap RANSAC iterations per cell so its median runtime matches Hough's.
  // Wall-clock dependent, so such runs are not byte-reproducible.
  bool ransac_time_matched = false;
};

struct DataCell {
  double inlier_ratio = 0.0;
  std::size_t n_correspondences = 0;
  double noise_sigma = 0.0;
};

struct MethodVariant {
  std::string method;  // "hough" or "ransac"
  BinSize bins;        // hough only
  bool smoothing = false;
};

struct TrialRecord {
  std::size_t cell = 0;
  std::size_t variant = 0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  bool success = false;
  std::optional<double> rre_deg;
  std::optional<double> rte_m;
  std::string error;
  double time_s = 0.0;
  std::size_t ransac_iterations = 0;
};

struct BenchRow {
  DataCell cell;
  MethodVariant variant;
  std::size_t trials = 0;
  std::size_t successes = 0;
  std::size_t errors = 0;
  double recall = 0.0;
  // NaN when undefined (no successes / no scored trials).
  double rre_mean_deg_success = 0.0, rre_std_deg_success = 0.0;
  double rte_mean_m_success = 0.0, rte_std_m_success = 0.0;
  double rre_mean_deg_all = 0.0, rre_std_deg_all = 0.0;
  double rte_mean_m_all = 0.0, rte_std_m_all = 0.0;
  double mean_time_s = 0.0;
  double median_time_s = 0.0;
  std::size_t ransac_iterations = 0;  // cap used (ransac rows)
};

struct BenchOutput {
  std::vector<BenchRow> rows;
  std::vector<TrialRecord> records;  // ordered by (cell, trial, variant)
};

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

inline std::uint64_t trial_seed(std::uint64_t base, std::size_t cell, std::size_t trial) {
  return splitmix64(splitmix64(splitmix64(base) ^ cell) ^ trial);
}

inline std::vector<DataCell> data_cells(const BenchSuite& s) {
  std::vector<DataCell> cells;
  for (double w : s.inlier_ratios)
    for (std::size_t n : s.n_correspondences)
      for (double sigma : s.noise_sigmas) cells.push_back({w, n, sigma});
  return cells;
}

inline std::vector<MethodVariant> method_variants(const BenchSuite& s) {
  std::vector<MethodVariant> out;
  for (const auto& m : s.methods) {
    if (m == "hough") {
      for (const auto& b : s.bin_sizes)
        for (bool sm : s.smoothing) out.push_back({"hough", b, sm});
    } else {
      out.push_back({m, {}, false});
    }
  }
  return out;
}

// ---- suite (de)serialization -----------------------------------------------

namespace detail {

class SuiteReader {
 public:
  [[noreturn]] static void fail(const std::string& field, const std::string& why) {
    throw Error(ErrorCode::InvalidConfig, "suite field '" + field + "': " + why);
  }

  static void check_keys(const nlohmann::json& obj, const std::string& path, std::set<std::string> allowed) {
    if (!obj.is_object()) fail(path.empty() ? "<root>" : path, "must be an object");
    for (auto it = obj.begin(); it != obj.end(); ++it) {
      if (!allowed.count(it.key())) fail(join(path, it.key()), "unknown field");
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }

  static double number(const nlohmann::json& v, const std::string& field) {
    if (!v.is_number()) fail(field, "must be a number");
    double d = v.get<double>();
    if (!std::isfinite(d)) fail(field, "must be finite");
    return d;
  }

  static std::size_t count(const nlohmann::json& v, const std::string& field) {
    if (!v.is_number_integer() || v.get<long long>() < 0) fail(field, "must be a non-negative integer");
    return v.get<std::size_t>();
  }

  static std::vector<double> numbers(const nlohmann::json& v, const std::string& field) {
    if (!v.is_array() || v.empty()) fail(field, "must be a non-empty array");
    std::vector<double> out;
    for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(v[i], field + "[" + std::to_string(i) + "]"));
    return out;
  }
};

}  // namespace detail

inline void validate(const BenchSuite& s) {
  using R = detail::SuiteReader;
  if (s.trials < 1) R::fail("trials", "must be >= 1");
  if (!(s.thresholds.rre_max_deg > 0.0)) R::fail("thresholds.rre_max_deg", "must be positive");
  if (!(s.thresholds.rte_max_m > 0.0)) R::fail("thresholds.rte_max_m", "must be positive");
  if (s.inlier_ratios.empty()) R::fail("grid.inlier_ratios", "must be non-empty");
  for (std::size_t i = 0; i < s.inlier_ratios.size(); ++i) {
    if (!(s.inlier_ratios[i] >= 0.0 && s.inlier_ratios[i] <= 1.0)) {
      R::fail("grid.inlier_ratios[" + std::to_string(i) + "]", "must be in [0, 1]");
    }
  }
  if (s.n_correspondences.empty()) R::fail("grid.n_correspondences", "must be non-empty");
  for (std::size_t i = 0; i < s.n_correspondences.size(); ++i) {
    if (s.n_correspondences[i] < 3) R::fail("grid.n_correspondences[" + std::to_string(i) + "]", "must be >= 3");
  }
  if (s.noise_sigmas.empty()) R::fail("grid.noise_sigmas", "must be non-empty");
  for (std::size_t i = 0; i < s.noise_sigmas.size(); ++i) {
    if (!(s.noise_sigmas[i] >= 0.0)) R::fail("grid.noise_sigmas[" + std::to_string(i) + "]", "must be >= 0");
  }
  if (s.bin_sizes.empty()) R::fail("grid.bin_sizes", "must be non-empty");
  for (std::size_t i = 0; i < s.bin_sizes.size(); ++i) {
    if (!(s.bin_sizes[i].b_r > 0.0) || !(s.bin_sizes[i].b_t > 0.0)) {
      R::fail("grid.bin_sizes[" + std::to_string(i) + "]", "bin sizes must be positive");
    }
  }
  if (s.smoothing.empty()) R::fail("grid.smoothing", "must be non-empty");
  if (s.methods.empty()) R::fail("grid.methods", "must be non-empty");
  for (std::size_t i = 0; i < s.methods.size(); ++i) {
    if (s.methods[i] != "hough" && s.methods[i] != "ransac") {
      R::fail("grid.methods[" + std::to_string(i) + "]", "must be \"hough\" or \"ransac\"");
    }
  }
  if (s.n_points < 3) R::fail("synth.n_points", "must be >= 3");
  if (!(s.overlap > 0.0 && s.overlap <= 1.0)) R::fail("synth.overlap", "must be in (0, 1]");
  if (!(s.rotation_magnitude >= 0.0 && s.rotation_magnitude <= std::numbers::pi)) {
    R::fail("synth.rotation_magnitude", "must be in [0, pi]");
  }
  if (!(s.translation_magnitude >= 0.0)) R::fail("synth.translation_magnitude", "must be >= 0");
  if (!(s.oracle_tolerance_factor > 0.0)) R::fail("matching.oracle_tolerance_factor", "must be positive");
  if (!(s.oracle_tolerance_min > 0.0)) R::fail("matching.oracle_tolerance_min", "must be positive");
  if (!(s.voxel_v > 0.0)) R::fail("matching.voxel_v", "must be positive");
  if (s.n_triplets < 1) R::fail("matching.n_triplets", "must be >= 1");
  if (!(s.smoothing_sigma_bins > 0.0)) R::fail("smoothing.sigma_bins", "must be positive");
  if (s.smoothing_radius_bins < 1) R::fail("smoothing.radius_bins", "must be >= 1");
  if (!(s.hough_refit_tau >= 0.0) || !std::isfinite(s.hough_refit_tau)) R::fail("hough.refit_tau", "must be >= 0");
  if (s.ransac_max_iterations < 1) R::fail("ransac.max_iterations", "must be >= 1");
  if (!(s.ransac_inlier_tau >= 0.0)) R::fail("ransac.inlier_tau", "must be >= 0");
  if (!(s.ransac_confidence > 0.0 && s.ransac_confidence < 1.0)) R::fail("ransac.confidence", "must be in (0, 1)");
}

/// Parses the JSON suite document. Unknown fields and wrong types raise
/// InvalidConfig naming the offending field path.
inline BenchSuite suite_from_json(const nlohmann::json& j) {
  using R = detail::SuiteReader;
  BenchSuite s;
  R::check_keys(j, "", {"trials", "seed", "thresholds", "grid", "synth", "matching", "smoothing", "hough", "ransac"});
  if (j.contains("trials")) s.trials = R::count(j["trials"], "trials");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned() && !(j["seed"].is_number_integer() && j["seed"].get<long long>() >= 0)) {
      R::fail("seed", "must be a non-negative integer");
    }
    s.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("thresholds")) {
    const auto& t = j["thresholds"];
    R::check_keys(t, "thresholds", {"rre_max_deg", "rte_max_m"});
    if (t.contains("rre_max_deg")) s.thresholds.rre_max_deg = R::number(t["rre_max_deg"], "thresholds.rre_max_deg");
    if (t.contains("rte_max_m")) s.thresholds.rte_max_m = R::number(t["rte_max_m"], "thresholds.rte_max_m");
  }
  if (j.contains("grid")) {
    const auto& g = j["grid"];
    R::check_keys(g, "grid", {"inlier_ratios", "n_correspondences", "noise_sigmas", "bin_sizes", "smoothing", "methods"});
    if (g.contains("inlier_ratios")) s.inlier_ratios = R::numbers(g["inlier_ratios"], "grid.inlier_ratios");
    if (g.contains("noise_sigmas")) s.noise_sigmas = R::numbers(g["noise_sigmas"], "grid.noise_sigmas");
    if (g.contains("n_correspondences")) {
      const auto& v = g["n_correspondences"];
      if (!v.is_array() || v.empty()) R::fail("grid.n_correspondences", "must be a non-empty array");
      s.n_correspondences.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        s.n_correspondences.push_back(R::count(v[i], "grid.n_correspondences[" + std::to_string(i) + "]"));
      }
    }
    if (g.contains("bin_sizes")) {
      const auto& v = g["bin_sizes"];
      if (!v.is_array() || v.empty()) R::fail("grid.bin_sizes", "must be a non-empty array");
      s.bin_sizes.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        std::string f = "grid.bin_sizes[" + std::to_string(i) + "]";
        R::check_keys(v[i], f, {"rot", "trans"});
        if (!v[i].contains("rot") || !v[i].contains("trans")) R::fail(f, "needs both \"rot\" and \"trans\"");
        s.bin_sizes.push_back({R::number(v[i]["rot"], f + ".rot"), R::number(v[i]["trans"], f + ".trans")});
      }
    }
    if (g.contains("smoothing")) {
      const auto& v = g["smoothing"];
      if (!v.is_array() || v.empty()) R::fail("grid.smoothing", "must be a non-empty array");
      s.smoothing.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_boolean()) R::fail("grid.smoothing[" + std::to_string(i) + "]", "must be a boolean");
        s.smoothing.push_back(v[i].get<bool>());
      }
    }
    if (g.contains("methods")) {
      const auto& v = g["methods"];
      if (!v.is_array() || v.empty()) R::fail("grid.methods", "must be a non-empty array");
      s.methods.clear();
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i].is_string()) R::fail("grid.methods[" + std::to_string(i) + "]", "must be a string");
        s.methods.push_back(v[i].get<std::string>());
      }
    }
  }
  if (j.contains("synth")) {
    const auto& v = j["synth"];
    R::check_keys(v, "synth", {"n_points", "overlap", "rotation_magnitude", "translation_magnitude"});
    if (v.contains("n_points")) s.n_points = R::count(v["n_points"], "synth.n_points");
    if (v.contains("overlap")) s.overlap = R::number(v["overlap"], "synth.overlap");
    if (v.contains("rotation_magnitude")) s.rotation_magnitude = R::number(v["rotation_magnitude"], "synth.rotation_magnitude");
    if (v.contains("translation_magnitude")) {
      s.translation_magnitude = R::number(v["translation_magnitude"], "synth.translation_magnitude");
    }
  }
  if (j.contains("matching")) {
    const auto& v = j["matching"];
    R::check_keys(v, "matching", {"voxel_v", "n_triplets", "oracle_tolerance_factor", "oracle_tolerance_min"});
    if (v.contains("voxel_v")) s.voxel_v = R::number(v["voxel_v"], "matching.voxel_v");
    if (v.contains("n_triplets")) s.n_triplets = R::count(v["n_triplets"], "matching.n_triplets");
    if (v.contains("oracle_tolerance_factor")) {
      s.oracle_tolerance_factor = R::number(v["oracle_tolerance_factor"], "matching.oracle_tolerance_factor");
    }
    if (v.contains("oracle_tolerance_min")) {
      s.oracle_tolerance_min = R::number(v["oracle_tolerance_min"], "matching.oracle_tolerance_min");
    }
  }
  if (j.contains("smoothing")) {
    const auto& v = j["smoothing"];
    R::check_keys(v, "smoothing", {"sigma_bins", "radius_bins"});
    if (v.contains("sigma_bins")) s.smoothing_sigma_bins = R::number(v["sigma_bins"], "smoothing.sigma_bins");
    if (v.contains("radius_bins")) s.smoothing_radius_bins = static_cast<int>(R::count(v["radius_bins"], "smoothing.radius_bins"));
  }
  if (j.contains("hough")) {
    const auto& v = j["hough"];
    R::check_keys(v, "hough", {"refit_tau"});
    if (v.contains("refit_tau")) s.hough_refit_tau = R::number(v["refit_tau"], "hough.refit_tau");
  }
  if (j.contains("ransac")) {
    const auto& v = j["ransac"];
    R::check_keys(v, "ransac", {"max_iterations", "inlier_tau", "early_exit", "confidence", "time_matched"});
    if (v.contains("max_iterations")) s.ransac_max_iterations = R::count(v["max_iterations"], "ransac.max_iterations");
    if (v.contains("inlier_tau")) s.ransac_inlier_tau = R::number(v["inlier_tau"], "ransac.inlier_tau");
    if (v.contains("confidence")) s.ransac_confidence = R::number(v["confidence"], "ransac.confidence");
    for (const char* key : {"early_exit", "time_matched"}) {
      if (v.contains(key)) {
        if (!v[key].is_boolean()) R::fail(std::string("ransac.") + key, "must be a boolean");
        (std::string(key) == "early_exit" ? s.ransac_early_exit : s.ransac_time_matched) = v[key].get<bool>();
      }
    }
  }
  validate(s);
  return s;
}

inline BenchSuite parse_suite(std::string_view text, const std::string& source = "<suite>") {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::InvalidConfig, source + ": not valid JSON: " + e.what());
  }
  return suite_from_json(j);
}

inline nlohmann::ordered_json to_json(const BenchSuite& s) {
  nlohmann::ordered_json j;
  j["trials"] = s.trials;
  j["seed"] = s.seed;
  j["thresholds"] = {{"rre_max_deg", s.thresholds.rre_max_deg}, {"rte_max_m", s.thresholds.rte_max_m}};
  nlohmann::ordered_json bins = nlohmann::ordered_json::array();
  for (const auto& b : s.bin_sizes) bins.push_back({{"rot", b.b_r}, {"trans", b.b_t}});
  j["grid"] = {{"inlier_ratios", s.inlier_ratios}, {"n_correspondences", s.n_correspondences},
               {"noise_sigmas", s.noise_sigmas},   {"bin_sizes", bins},
               {"smoothing", s.smoothing},         {"methods", s.methods}};
  j["synth"] = {{"n_points", s.n_points},
                {"overlap", s.overlap},
                {"rotation_magnitude", s.rotation_magnitude},
                {"translation_magnitude", s.translation_magnitude}};
  j["matching"] = {{"voxel_v", s.voxel_v},
                   {"n_triplets", s.n_triplets},
                   {"oracle_tolerance_factor", s.oracle_tolerance_factor},
                   {"oracle_tolerance_min", s.oracle_tolerance_min}};
  j["smoothing"] = {{"sigma_bins", s.smoothing_sigma_bins}, {"radius_bins", s.smoothing_radius_bins}};
  j["hough"] = {{"refit_tau", s.hough_refit_tau}};
  j["ransac"] = {{"max_iterations", s.ransac_max_iterations},
                 {"inlier_tau", s.ransac_inlier_tau},
                 {"early_exit", s.ransac_early_exit},
                 {"confidence", s.ransac_confidence},
                 {"time_matched", s.ransac_time_matched}};
  return j;
}

/// The bundled suite (also shipped as configs/default_suite.json).
inline BenchSuite default_suite() {
  BenchSuite s;
  s.inlier_ratios = {0.2, 0.1, 0.05};
  s.n_correspondences = {2000};
  s.noise_sigmas = {0.01};
  s.bin_sizes = {BinSize{0.02, 0.02}};
  s.smoothing = {true};
  s.methods = {"hough", "ransac"};
  s.trials = 20;
  s.seed = 2021;
  s.thresholds = {2.0, 0.05};
  s.voxel_v = 0.015;
  s.smoothing_sigma_bins = 1.5;
  s.smoothing_radius_bins = 3;
  s.hough_refit_tau = 0.075;
  return s;
}

// ---- running -----------------------------------------------------------------

struct TrialData {
  SynthPair pair;
  std::vector<Correspondence> corrs;
};

inline TrialData make_trial_data(const BenchSuite& s, const DataCell& cell, std::uint64_t seed) {
  SynthConfig sc;
  sc.n_points = s.n_points;
  sc.overlap_fraction = s.overlap;
  sc.noise_sigma = cell.noise_sigma;
  sc.rotation_magnitude = s.rotation_magnitude;
  sc.translation_magnitude = s.translation_magnitude;
  sc.seed = splitmix64(seed ^ 0x1);
  TrialData d{synthesize_pair(sc), {}};
  OracleConfig oc;
  oc.inlier_ratio = cell.inlier_ratio;
  oc.n_total = cell.n_correspondences;
  oc.tolerance = std::max(s.oracle_tolerance_factor * cell.noise_sigma, s.oracle_tolerance_min);
  oc.seed = splitmix64(seed ^ 0x2);
  d.corrs = oracle_correspondences(d.pair.source, d.pair.target, d.pair.gt, oc);
  return d;
}

inline MatchConfig match_config(const BenchSuite& s, std::uint64_t seed) {
  MatchConfig m;
  m.voxel_v = s.voxel_v;
  m.n_triplets = s.n_triplets;
  m.seed = splitmix64(seed ^ 0x3);
  return m;
}

inline HoughConfig hough_config(const BenchSuite& s, const MethodVariant& v) {
  HoughConfig h;
  h.b_r = v.bins.b_r;
  h.b_t = v.bins.b_t;
  h.smoothing.enabled = v.smoothing;
  h.smoothing.sigma_bins = s.smoothing_sigma_bins;
  h.smoothing.radius_bins = s.smoothing_radius_bins;
  h.refit_tau = s.hough_refit_tau;
  return h;
}

inline RansacConfig ransac_config(const BenchSuite& s, std::uint64_t seed, std::size_t max_iterations) {
  RansacConfig r;
  r.max_iterations = max_iterations;
  r.voxel_v = s.voxel_v;
  r.inlier_tau = s.ransac_inlier_tau > 0.0 ? s.ransac_inlier_tau : 3.0 * s.voxel_v;
  r.seed = splitmix64(seed ^ 0x4);
  r.early_exit = s.ransac_early_exit;
  r.early_exit_confidence = s.ransac_confidence;
  return r;
}

namespace detail {

inline double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

inline TrialRecord run_variant(const BenchSuite& s, const TrialData& data, const MethodVariant& v,
                               std::uint64_t seed, std::size_t ransac_iterations) {
  TrialRecord rec;
  rec.seed = seed;
  auto t0 = std::chrono::steady_clock::now();
  try {
    RegistrationResult r;
    if (v.method == "hough") {
      r = hough_register(data.corrs, data.pair.source, data.pair.target, match_config(s, seed), hough_config(s, v), 1);
    } else {
      r = ransac_register(data.corrs, data.pair.source, data.pair.target, ransac_config(s, seed, ransac_iterations));
      rec.ransac_iterations = ransac_iterations;
    }
    rec.time_s = seconds_since(t0);
    ScoreResult sc = score(r, data.pair.gt, s.thresholds);
    rec.success = sc.success;
    rec.rre_deg = rad_to_deg(sc.metrics.rre);
    rec.rte_m = sc.metrics.rte;
  } catch (const Error& e) {
    rec.time_s = seconds_since(t0);
    rec.success = false;
    rec.error = e.what();
  }
  return rec;
}

inline void mean_std(const std::vector<double>& xs, double& mean, double& std_dev) {
  if (xs.empty()) {
    mean = std_dev = std::numeric_limits<double>::quiet_NaN();
    return;
  }
  double sum = 0.0;
  for (double x : xs) sum += x;
  mean = sum / static_cast<double>(xs.size());
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  std_dev = std::sqrt(ss / static_cast<double>(xs.size()));
}

inline double median(std::vector<double> xs) {
  if (xs.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(xs.begin(), xs.end());
  std::size_t m = xs.size() / 2;
  return xs.size() % 2 ? xs[m] : 0.5 * (xs[m - 1] + xs[m]);
}

}  // namespace detail

/// Aggregates per-trial records (in record order) into one row per
/// (cell, variant). Population standard deviations; error trials count as
/// failures and are excluded from the all-trial error statistics.
inline std::vector<BenchRow> aggregate(const BenchSuite& s, const std::vector<TrialRecord>& records) {
  const auto cells = data_cells(s);
  const auto variants = method_variants(s);
  std::vector<BenchRow> rows;
  for (std::size_t c = 0; c < cells.size(); ++c) {
    for (std::size_t v = 0; v < variants.size(); ++v) {
      BenchRow row;
      row.cell = cells[c];
      row.variant = variants[v];
      std::vector<double> rre_s, rte_s, rre_a, rte_a, times;
      for (const auto& r : records) {
        if (r.cell != c || r.variant != v) continue;
        ++row.trials;
        if (r.success) ++row.successes;
        if (!r.error.empty()) ++row.errors;
        if (r.rre_deg && r.rte_m) {
          rre_a.push_back(*r.rre_deg);
          rte_a.push_back(*r.rte_m);
          if (r.success) {
            rre_s.push_back(*r.rre_deg);
            rte_s.push_back(*r.rte_m);
          }
        }
        times.push_back(r.time_s);
        row.ransac_iterations = r.ransac_iterations;
      }
      row.recall = row.trials ? static_cast<double>(row.successes) / static_cast<double>(row.trials) : 0.0;
      detail::mean_std(rre_s, row.rre_mean_deg_success, row.rre_std_deg_success);
      detail::mean_std(rte_s, row.rte_mean_m_success, row.rte_std_m_success);
      detail::mean_std(rre_a, row.rre_mean_deg_all, row.rre_std_deg_all);
      detail::mean_std(rte_a, row.rte_mean_m_all, row.rte_std_m_all);
      double ignored;
      detail::mean_std(times, row.mean_time_s, ignored);
      row.median_time_s = detail::median(times);
      rows.push_back(row);
    }
  }
  return rows;
}

/// Seconds per RANSAC iteration, measured on one trial's data with early
/// exit disabled.
inline double ransac_seconds_per_iteration(const BenchSuite& s, const TrialData& data, std::uint64_t seed,
                                           std::size_t iterations = 20000) {
  RansacConfig cfg = ransac_config(s, seed, iterations);
  cfg.early_exit = false;
  auto t0 = std::chrono::steady_clock::now();
  try {
    ransac_register(data.corrs, data.pair.source, data.pair.target, cfg);
  } catch (const Error&) {
  }
  return detail::seconds_since(t0) / static_cast<double>(iterations);
}

/// Runs every (cell, trial) unit, in parallel across units when threads > 1.
/// With ransac_time_matched, Hough variants run first and each cell's RANSAC
/// cap is set to median Hough time / measured seconds per iteration.
inline BenchOutput run_suite(const BenchSuite& s, std::size_t threads = thread_count()) {
  validate(s);
  const auto cells = data_cells(s);
  const auto variants = method_variants(s);
  const std::size_t units = cells.size() * s.trials;
  std::vector<std::vector<TrialRecord>> per_unit(units, std::vector<TrialRecord>(variants.size()));

  auto run_phase = [&](bool ransac_phase, const std::vector<std::size_t>& caps) {
    parallel_for(units, threads, [&](std::size_t u) {
      const std::size_t c = u / s.trials;
      const std::size_t k = u % s.trials;
      const std::uint64_t seed = trial_seed(s.seed, c, k);
      std::optional<TrialData> data;
      std::string data_error;
      try {
        data = make_trial_data(s, cells[c], seed);
      } catch (const Error& e) {
        data_error = e.what();
      }
      for (std::size_t v = 0; v < variants.size(); ++v) {
        if ((variants[v].method == "ransac") != ransac_phase) continue;
        TrialRecord rec;
        if (data) {
          rec = detail::run_variant(s, *data, variants[v], seed, caps[c]);
        } else {
          rec.seed = seed;
          rec.error = data_error;
        }
        rec.cell = c;
        rec.variant = v;
        rec.trial = k;
        per_unit[u][v] = std::move(rec);
      }
    });
  };

  std::vector<std::size_t> caps(cells.size(), s.ransac_max_iterations);
  run_phase(false, caps);

  const bool has_ransac = std::any_of(variants.begin(), variants.end(), [](const auto& v) { return v.method == "ransac"; });
  const auto first_hough = std::find_if(variants.begin(), variants.end(), [](const auto& v) { return v.method == "hough"; });
  if (has_ransac && s.ransac_time_matched && first_hough != variants.end()) {
    const std::size_t hv = static_cast<std::size_t>(first_hough - variants.begin());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      std::vector<double> times;
      for (std::size_t k = 0; k < s.trials; ++k) times.push_back(per_unit[c * s.trials + k][hv].time_s);
      const double budget = detail::median(times);
      const std::uint64_t seed = trial_seed(s.seed, c, 0);
      try {
        TrialData data = make_trial_data(s, cells[c], seed);
        const double per_iter = ransac_seconds_per_iteration(s, data, seed);
        caps[c] = static_cast<std::size_t>(std::max(1.0, std::floor(budget / per_iter)));
      } catch (const Error&) {
      }
    }
  }
  if (has_ransac) run_phase(true, caps);

  BenchOutput out;
  for (auto& unit : per_unit)
    for (auto& rec : unit) out.records.push_back(std::move(rec));
  out.rows = aggregate(s, out.records);
  return out;
}

// ---- output ------------------------------------------------------------------

namespace detail {

inline std::string csv_number(double v) { return std::isnan(v) ? std::string() : format_double(v); }

}  // namespace detail

/// One header line, then one line per row. mean_time_s is appended only when
/// timings are requested, keeping the default output reproducible.
inline std::string to_csv(const std::vector<BenchRow>& rows, bool include_timings = false) {
  std::string out =
      "method,inlier_ratio,n_correspondences,noise_sigma,b_r,b_t,smoothing,ransac_iterations,trials,successes,errors,"
      "recall,rre_mean_deg_success,rre_std_deg_success,rte_mean_m_success,rte_std_m_success,"
      "rre_mean_deg_all,rre_std_deg_all,rte_mean_m_all,rte_std_m_all";
  if (include_timings) out += ",mean_time_s";
  out += "\n";
  using detail::csv_number;
  using detail::format_double;
  for (const auto& r : rows) {
    const bool hough = r.variant.method == "hough";
    out += r.variant.method + ",";
    out += format_double(r.cell.inlier_ratio) + ",";
    out += std::to_string(r.cell.n_correspondences) + ",";
    out += format_double(r.cell.noise_sigma) + ",";
    out += (hough ? format_double(r.variant.bins.b_r) : std::string()) + ",";
    out += (hough ? format_double(r.variant.bins.b_t) : std::string()) + ",";
    out += (hough ? std::string(r.variant.smoothing ? "gaussian" : "none") : std::string()) + ",";
    out += (hough ? std::string() : std::to_string(r.ransac_iterations)) + ",";
    out += std::to_string(r.trials) + "," + std::to_string(r.successes) + "," + std::to_string(r.errors) + ",";
    out += format_double(r.recall) + ",";
    out += csv_number(r.rre_mean_deg_success) + "," + csv_number(r.rre_std_deg_success) + ",";
    out += csv_number(r.rte_mean_m_success) + "," + csv_number(r.rte_std_m_success) + ",";
    out += csv_number(r.rre_mean_deg_all) + "," + csv_number(r.rre_std_deg_all) + ",";
    out += csv_number(r.rte_mean_m_all) + "," + csv_number(r.rte_std_m_all);
    if (include_timings) out += "," + format_double(r.mean_time_s);
    out += "\n";
  }
  return out;
}

/// One JSON object per trial record.
inline std::string to_jsonl(const BenchSuite& s, const std::vector<TrialRecord>& records, bool include_timings = false) {
  const auto cells = data_cells(s);
  const auto variants = method_variants(s);
  std::string out;
  for (const auto& r : records) {
    const auto& cell = cells[r.cell];
    const auto& v = variants[r.variant];
    nlohmann::ordered_json j;
    j["cell"] = r.cell;
    j["trial"] = r.trial;
    j["seed"] = r.seed;
    j["method"] = v.method;
    j["inlier_ratio"] = cell.inlier_ratio;
    j["n_correspondences"] = cell.n_correspondences;
    j["noise_sigma"] = cell.noise_sigma;
    if (v.method == "hough") {
      j["b_r"] = v.bins.b_r;
      j["b_t"] = v.bins.b_t;
      j["smoothing"] = v.smoothing;
    } else {
      j["ransac_iterations"] = r.ransac_iterations;
    }
    j["success"] = r.success;
    j["rre_deg"] = r.rre_deg ? nlohmann::ordered_json(*r.rre_deg) : nlohmann::ordered_json(nullptr);
    j["rte_m"] = r.rte_m ? nlohmann::ordered_json(*r.rte_m) : nlohmann::ordered_json(nullptr);
    if (!r.error.empty()) j["error"] = r.error;
    if (include_timings) j["time_s"] = r.time_s;
    out += j.dump() + "\n";
  }
  return out;
}

}  // namespace houghreg
