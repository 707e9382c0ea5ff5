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

// houghreg command-line front end.
//
// Exit codes: 0 success, 2 bad flags or configuration, 3 I/O or file format
// errors, 4 registration failed (too few correspondences, no valid triplets).

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "houghreg/bench.hpp"
#include "houghreg/cloud.hpp"
#include "houghreg/common.hpp"
#include "houghreg/geometry.hpp"
#include "houghreg/hough.hpp"
#include "houghreg/io.hpp"
#include "houghreg/matching.hpp"
#include "houghreg/parallel.hpp"
#include "houghreg/ransac.hpp"
#include "houghreg/result.hpp"
#include "houghreg/synth.hpp"

namespace fs = std::filesystem;
using namespace houghreg;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitIo = 3;
constexpr int kExitRegistration = 4;

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidVoxelSize:
    case ErrorCode::InvalidConfig:
      return kExitUsage;
    case ErrorCode::MalformedFile:
    case ErrorCode::Io:
    case ErrorCode::DimensionMismatch:
    case ErrorCode::EmptyIndex:
      return kExitIo;
    case ErrorCode::DegenerateInput:
    case ErrorCode::TooFewCorrespondences:
    case ErrorCode::NoValidTriplets:
    case ErrorCode::EmptyHoughSpace:
      return kExitRegistration;
  }
  return kExitIo;
}

// Refuses to write an output over any of the inputs.
void check_not_input(const std::string& out, const std::string& flag, const std::vector<std::string>& inputs) {
  if (out.empty()) return;
  std::error_code ec;
  for (const auto& in : inputs) {
    if (in.empty()) continue;
    if (fs::path(out) == fs::path(in) || (fs::exists(out, ec) && fs::equivalent(out, in, ec))) {
      throw UsageError(flag + " " + out + " would overwrite input " + in);
    }
  }
}

double elapsed_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v) { return detail::format_double(v); }

// ---- register -----------------------------------------------------------------

struct RegisterArgs {
  std::string source, target, features_source, features_target, correspondences;
  std::string method = "hough";
  double bin_rot = 0.02;
  double bin_trans = 0.02;
  double voxel = 0.05;
  std::size_t triplets = 50000;
  std::uint64_t seed = 0;
  bool no_smoothing = false;
  double smooth_sigma = 1.0;
  int smooth_radius = 2;
  double refit_tau = 0.0;
  bool mutual = false;
  std::size_t ransac_iterations = 100000;
  double ransac_tau = 0.15;
  bool ransac_no_early_exit = false;
  double ransac_confidence = 0.999;
  std::string out, out_transform;
  bool timings = false;
};

void add_register(CLI::App& app, RegisterArgs& a) {
  auto* sub = app.add_subcommand("register", "Estimate the rigid transform aligning --source onto --target");
  sub->add_option("--source", a.source, "Source cloud file (DHPC binary or ASCII)")->required();
  sub->add_option("--target", a.target, "Target cloud file (DHPC binary or ASCII)")->required();
  sub->add_option("--features-source", a.features_source, "Source descriptors (DHFV), one row per source point");
  sub->add_option("--features-target", a.features_target, "Target descriptors (DHFV), one row per target point");
  sub->add_option("--correspondences", a.correspondences, "Precomputed correspondences (DHCR); replaces matching");
  sub->add_option("--method", a.method, "Estimator")->check(CLI::IsMember({"hough", "ransac"}))->capture_default_str();
  sub->add_option("--bin-rot", a.bin_rot, "Rotation bin size [rad, axis-angle units]")->capture_default_str();
  sub->add_option("--bin-trans", a.bin_trans, "Translation bin size [m]")->capture_default_str();
  sub->add_option("--voxel", a.voxel, "Voxel size v [m]; tuple test tolerance is 3v")->capture_default_str();
  sub->add_option("--triplets", a.triplets, "Number of sampled triplets [count]")->capture_default_str();
  sub->add_option("--seed", a.seed, "Sampling seed")->capture_default_str();
  sub->add_flag("--no-smoothing", a.no_smoothing, "Disable Gaussian smoothing of the Hough space (default: enabled)");
  sub->add_option("--smooth-sigma", a.smooth_sigma, "Smoothing kernel sigma [bins]")->capture_default_str();
  sub->add_option("--smooth-radius", a.smooth_radius, "Smoothing kernel truncation radius [bins]")->capture_default_str();
  sub->add_option("--refit-tau", a.refit_tau, "Procrustes refit on inliers within this distance [m]; 0 disables")
      ->capture_default_str();
  sub->add_flag("--mutual", a.mutual, "Keep only mutual nearest-neighbor feature matches (default: union)");
  sub->add_option("--ransac-iterations", a.ransac_iterations, "RANSAC iteration cap [count]")->capture_default_str();
  sub->add_option("--ransac-tau", a.ransac_tau, "RANSAC inlier distance [m]")->capture_default_str();
  sub->add_flag("--ransac-no-early-exit", a.ransac_no_early_exit, "Run RANSAC to the iteration cap");
  sub->add_option("--ransac-confidence", a.ransac_confidence, "RANSAC early-exit confidence [probability]")
      ->capture_default_str();
  sub->add_option("--out", a.out, "Write the RegistrationResult JSON here");
  sub->add_option("--out-transform", a.out_transform, "Write the 4x4 transform (16 numbers) here");
  sub->add_flag("--timings", a.timings, "Include per-stage wall-clock timings in --out (not reproducible)");
}

int run_register(const RegisterArgs& a) {
  const bool have_features = !a.features_source.empty() || !a.features_target.empty();
  if (a.correspondences.empty()) {
    if (a.features_source.empty() || a.features_target.empty()) {
      throw UsageError("register needs --correspondences or both --features-source and --features-target");
    }
  } else if (have_features) {
    throw UsageError("--correspondences cannot be combined with --features-source/--features-target");
  }
  const std::vector<std::string> inputs{a.source, a.target, a.features_source, a.features_target, a.correspondences};
  check_not_input(a.out, "--out", inputs);
  check_not_input(a.out_transform, "--out-transform", inputs);

  const auto t0 = std::chrono::steady_clock::now();
  const PointCloud P = load_cloud(a.source);
  const PointCloud Q = load_cloud(a.target);
  std::vector<Correspondence> corrs;
  if (!a.correspondences.empty()) {
    corrs = load_correspondences(a.correspondences);
  } else {
    const FeatureSet fp = load_features(a.features_source, static_cast<long long>(P.size()));
    const FeatureSet fq = load_features(a.features_target, static_cast<long long>(Q.size()));
    corrs = match_features(fp, fq, a.mutual);
  }

  RegistrationResult result;
  if (a.method == "hough") {
    MatchConfig mc;
    mc.voxel_v = a.voxel;
    mc.n_triplets = a.triplets;
    mc.seed = a.seed;
    mc.mutual_check = a.mutual;
    HoughConfig hc;
    hc.b_r = a.bin_rot;
    hc.b_t = a.bin_trans;
    hc.smoothing.enabled = !a.no_smoothing;
    hc.smoothing.sigma_bins = a.smooth_sigma;
    hc.smoothing.radius_bins = a.smooth_radius;
    hc.refit_tau = a.refit_tau;
    result = hough_register(corrs, P, Q, mc, hc);
  } else {
    RansacConfig rc;
    rc.max_iterations = a.ransac_iterations;
    rc.voxel_v = a.voxel;
    rc.inlier_tau = a.ransac_tau;
    rc.seed = a.seed;
    rc.early_exit = !a.ransac_no_early_exit;
    rc.early_exit_confidence = a.ransac_confidence;
    result = ransac_register(corrs, P, Q, rc);
  }

  if (!a.out.empty()) write_file_atomic(a.out, serialize(result, a.timings));
  if (!a.out_transform.empty()) save_transform(result.transform, a.out_transform);
  std::cout << "method=" << result.method;
  if (result.method == "hough") {
    std::cout << " winning_mass=" << fmt(result.winning_mass);
  } else {
    std::cout << " inliers=" << result.n_inliers;
  }
  std::cout << " seed=" << a.seed << " elapsed_s=" << fmt(elapsed_since(t0)) << "\n";
  if (a.out_transform.empty()) std::cout << format_transform(result.transform);
  return kExitOk;
}

// ---- synth --------------------------------------------------------------------

struct SynthArgs {
  SynthConfig cfg;
  OracleConfig oracle;
  std::string out_source, out_target, out_gt, out_correspondences;
  std::string format = "binary";
};

void add_synth(CLI::App& app, SynthArgs& a) {
  auto* sub = app.add_subcommand("synth", "Generate a partially overlapping cloud pair with a known transform");
  sub->add_option("--n-points", a.cfg.n_points, "Points per cloud [count]")->capture_default_str();
  sub->add_option("--overlap", a.cfg.overlap_fraction, "Fraction of points shared by both clouds, in (0, 1]")
      ->capture_default_str();
  sub->add_option("--noise", a.cfg.noise_sigma, "Relative per-axis Gaussian noise between the clouds [m]")
      ->capture_default_str();
  sub->add_option("--rot-mag", a.cfg.rotation_magnitude, "Maximum ground-truth rotation angle [rad]")
      ->capture_default_str();
  sub->add_option("--trans-mag", a.cfg.translation_magnitude, "Maximum ground-truth translation norm [m]")
      ->capture_default_str();
  sub->add_option("--seed", a.cfg.seed, "Generator seed (also seeds the correspondences)")->capture_default_str();
  sub->add_option("--out-source", a.out_source, "Source cloud output")->required();
  sub->add_option("--out-target", a.out_target, "Target cloud output")->required();
  sub->add_option("--out-gt", a.out_gt, "Ground-truth transform output (source -> target)")->required();
  sub->add_option("--out-correspondences", a.out_correspondences, "Optional oracle correspondence output (DHCR)");
  sub->add_option("--inlier-ratio", a.oracle.inlier_ratio, "Oracle correspondence inlier fraction")
      ->capture_default_str();
  sub->add_option("--n-correspondences", a.oracle.n_total, "Oracle correspondence count [count]")
      ->capture_default_str();
  sub->add_option("--inlier-tolerance", a.oracle.tolerance, "Maximum true-match distance for oracle inliers [m]")
      ->capture_default_str();
  sub->add_option("--format", a.format, "Cloud file format")
      ->check(CLI::IsMember({"binary", "ascii"}))
      ->capture_default_str();
}

int run_synth(SynthArgs a) {
  const SynthPair pair = synthesize_pair(a.cfg);
  const CloudFormat format = a.format == "ascii" ? CloudFormat::Ascii : CloudFormat::Binary;
  std::vector<Correspondence> corrs;
  if (!a.out_correspondences.empty()) {
    a.oracle.seed = splitmix64(a.cfg.seed);
    corrs = oracle_correspondences(pair.source, pair.target, pair.gt, a.oracle);
  }
  save_cloud(pair.source, a.out_source, format);
  save_cloud(pair.target, a.out_target, format);
  save_transform(pair.gt, a.out_gt);
  if (!a.out_correspondences.empty()) save_correspondences(corrs, a.out_correspondences);
  std::cout << "synth seed=" << a.cfg.seed << " source=" << pair.source.size() << " target=" << pair.target.size()
            << " shared=" << pair.n_shared;
  if (!a.out_correspondences.empty()) std::cout << " correspondences=" << corrs.size();
  std::cout << "\n";
  return kExitOk;
}

// ---- bench --------------------------------------------------------------------

struct BenchArgs {
  std::string suite;
  std::string out_csv, out_jsonl;
  bool timings = false;
};

void add_bench(CLI::App& app, BenchArgs& a) {
  auto* sub = app.add_subcommand("bench", "Run a synthetic benchmark suite and write per-cell recall statistics");
  sub->add_option("--suite", a.suite, "Suite JSON file (default: the bundled default suite)");
  sub->add_option("--out-csv", a.out_csv, "Per-cell CSV output (default: stdout)");
  sub->add_option("--out-jsonl", a.out_jsonl, "Per-trial JSON-lines output");
  sub->add_flag("--timings", a.timings, "Add wall-clock columns (not reproducible)");
}

int run_bench(const BenchArgs& a) {
  check_not_input(a.out_csv, "--out-csv", {a.suite});
  check_not_input(a.out_jsonl, "--out-jsonl", {a.suite});
  const BenchSuite suite = a.suite.empty() ? default_suite() : parse_suite(read_file(a.suite), a.suite);
  const BenchOutput out = run_suite(suite);
  const std::string csv = to_csv(out.rows, a.timings);
  if (!a.out_jsonl.empty()) write_file_atomic(a.out_jsonl, to_jsonl(suite, out.records, a.timings));
  if (a.out_csv.empty()) {
    std::cout << csv;
  } else {
    write_file_atomic(a.out_csv, csv);
    std::cout << "bench seed=" << suite.seed << " rows=" << out.rows.size() << " trials=" << out.records.size() << "\n";
  }
  return kExitOk;
}

// ---- eval ---------------------------------------------------------------------

struct EvalArgs {
  std::string pred, gt;
  double rre_max = 15.0;
  double rte_max = 0.30;
  std::string preset = "indoor";
  std::string units = "m";
  CLI::Option* rre_opt = nullptr;
  CLI::Option* rte_opt = nullptr;
};

void add_eval(CLI::App& app, EvalArgs& a) {
  auto* sub = app.add_subcommand("eval", "Compare a predicted transform with ground truth");
  sub->add_option("--pred", a.pred, "Predicted transform file")->required();
  sub->add_option("--gt", a.gt, "Ground-truth transform file")->required();
  a.rre_opt = sub->add_option("--rre-max", a.rre_max, "Success threshold on rotation error [deg]")->capture_default_str();
  a.rte_opt = sub->add_option("--rte-max", a.rte_max, "Success threshold on translation error [m]")->capture_default_str();
  sub->add_option("--preset", a.preset, "Threshold preset: indoor = 15 deg / 0.30 m, kitti = 5 deg / 0.6 m")
      ->check(CLI::IsMember({"indoor", "kitti"}))
      ->capture_default_str();
  sub->add_option("--units", a.units, "Units for printed RTE")->check(CLI::IsMember({"m", "cm"}))->capture_default_str();
}

int run_eval(EvalArgs a) {
  if (a.preset == "kitti") {
    if (a.rre_opt->count() == 0) a.rre_max = 5.0;
    if (a.rte_opt->count() == 0) a.rte_max = 0.6;
  }
  if (!(a.rre_max >= 0.0) || !(a.rte_max >= 0.0)) throw UsageError("thresholds must be non-negative");
  const RigidTransform pred = load_transform(a.pred);
  const RigidTransform gt = load_transform(a.gt);
  const ScoreResult s = score(pred, gt, Thresholds{a.rre_max, a.rte_max});
  const double scale = a.units == "cm" ? 100.0 : 1.0;
  std::cout << "rre_deg=" << fmt(rad_to_deg(s.metrics.rre)) << " rte_" << a.units << "=" << fmt(s.metrics.rte * scale)
            << " success=" << (s.success ? "true" : "false") << " rre_max_deg=" << fmt(a.rre_max)
            << " rte_max_m=" << fmt(a.rte_max) << "\n";
  return kExitOk;
}

// ---- downsample ---------------------------------------------------------------

struct DownsampleArgs {
  std::string in, out;
  double voxel = 0.05;
  std::string format = "binary";
};

void add_downsample(CLI::App& app, DownsampleArgs& a) {
  auto* sub = app.add_subcommand("downsample", "Replace each occupied voxel by the centroid of its points");
  sub->add_option("--in", a.in, "Input cloud file")->required();
  sub->add_option("--out", a.out, "Output cloud file")->required();
  sub->add_option("--voxel", a.voxel, "Voxel edge length [m]")->capture_default_str();
  sub->add_option("--format", a.format, "Output format")->check(CLI::IsMember({"binary", "ascii"}))->capture_default_str();
}

int run_downsample(const DownsampleArgs& a) {
  if (!(a.voxel > 0.0) || !std::isfinite(a.voxel)) throw UsageError("--voxel must be a positive finite length");
  check_not_input(a.out, "--out", {a.in});
  const PointCloud in = load_cloud(a.in);
  const PointCloud out = voxel_downsample(in, a.voxel);
  save_cloud(out, a.out, a.format == "ascii" ? CloudFormat::Ascii : CloudFormat::Binary);
  std::cout << "downsample in=" << in.size() << " out=" << out.size() << " voxel_m=" << fmt(a.voxel) << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"houghreg: point cloud registration by Hough voting over rigid transformations"};
  app.require_subcommand(1);
  app.footer("Environment: HOUGHREG_THREADS caps worker threads (unset or 0 = all cores).\n"
             "Exit codes: 0 ok, 2 bad flags/config, 3 I/O or format error, 4 registration failed.");

  RegisterArgs reg;
  SynthArgs syn;
  BenchArgs ben;
  EvalArgs ev;
  DownsampleArgs ds;
  add_register(app, reg);
  add_synth(app, syn);
  add_bench(app, ben);
  add_eval(app, ev);
  add_downsample(app, ds);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    if (!app.get_subcommands().empty()) {
      std::cerr << app.get_subcommands().front()->help();
    } else {
      std::cerr << app.help();
    }
    return kExitUsage;
  }

  const std::string cmd = app.get_subcommands().front()->get_name();
  try {
    if (cmd == "register") return run_register(reg);
    if (cmd == "synth") return run_synth(syn);
    if (cmd == "bench") return run_bench(ben);
    if (cmd == "eval") return run_eval(ev);
    return run_downsample(ds);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  }
}
