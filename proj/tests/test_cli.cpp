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

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "houghreg/io.hpp"

namespace houghreg {
namespace {

namespace fs = std::filesystem;

struct CliRun {
  int code = -1;
  std::string out;  // stdout and stderr interleaved
};

CliRun run(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + (env.empty() ? "" : " ") + "'" + std::string(HOUGHREG_CLI) + "' " + args + " 2>&1";
  CliRun r;
  FILE* p = ::popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = ::pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("houghreg_cli_" + std::to_string(::getpid()) + "_" +
                                        ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }
  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  CliRun synth(const std::string& tag, const std::string& extra) {
    return run("synth --out-source " + path(tag + "_src.bin") + " --out-target " + path(tag + "_tgt.bin") +
               " --out-gt " + path(tag + "_gt.txt") + " --out-correspondences " + path(tag + "_c.bin") + " " + extra);
  }

  fs::path dir_;
};

TEST_F(Cli, MissingRequiredFlagIsUsageError) {
  const auto r = run("register --source a.bin");
  EXPECT_EQ(r.code, 2) << r.out;
  EXPECT_NE(r.out.find("--target"), std::string::npos) << r.out;
}

TEST_F(Cli, UnknownSubcommandIsUsageError) { EXPECT_EQ(run("frobnicate").code, 2); }

TEST_F(Cli, HelpListsDefaults) {
  const auto r = run("register --help");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("--bin-rot"), std::string::npos);
  EXPECT_NE(r.out.find("0.02"), std::string::npos);
  EXPECT_NE(r.out.find("50000"), std::string::npos);
}

TEST_F(Cli, SynthIsDeterministic) {
  ASSERT_EQ(synth("a", "--seed 7 --noise 0.01").code, 0);
  ASSERT_EQ(synth("b", "--seed 7 --noise 0.01").code, 0);
  for (const char* f : {"_src.bin", "_tgt.bin", "_gt.txt", "_c.bin"}) {
    EXPECT_EQ(read_file(path(std::string("a") + f)), read_file(path(std::string("b") + f))) << f;
  }
  ASSERT_EQ(synth("c", "--seed 8 --noise 0.01").code, 0);
  EXPECT_NE(read_file(path("a_src.bin")), read_file(path("c_src.bin")));
}

TEST_F(Cli, NoiselessFullOverlapGroundTruthMapsSourceOntoTarget) {
  ASSERT_EQ(synth("s", "--seed 3 --overlap 1 --noise 0 --n-points 400").code, 0);
  const auto P = load_cloud(path("s_src.bin"));
  const auto Q = load_cloud(path("s_tgt.bin"));
  const auto T = load_transform(path("s_gt.txt"));
  ASSERT_EQ(P.size(), Q.size());
  for (std::size_t i = 0; i < P.size(); ++i) EXPECT_LT((Q[i] - T(P[i])).norm(), 1e-5);  // float32 storage
}

TEST_F(Cli, EvalSelfIsZeroWithIndoorDefaults) {
  ASSERT_EQ(synth("s", "--seed 1").code, 0);
  const auto r = run("eval --pred " + path("s_gt.txt") + " --gt " + path("s_gt.txt"));
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("rre_deg=0 rte_m=0 success=true rre_max_deg=15 rte_max_m=0.3"), std::string::npos) << r.out;
}

TEST_F(Cli, EvalPresetAndUnits) {
  RigidTransform gt, pred;
  pred.translation = Vec3(0.4, 0.0, 0.0);
  save_transform(gt, path("gt.txt"));
  save_transform(pred, path("pred.txt"));
  auto r = run("eval --pred " + path("pred.txt") + " --gt " + path("gt.txt"));
  EXPECT_NE(r.out.find("success=false"), std::string::npos) << r.out;
  r = run("eval --preset kitti --pred " + path("pred.txt") + " --gt " + path("gt.txt"));
  EXPECT_NE(r.out.find("success=true rre_max_deg=5 rte_max_m=0.6"), std::string::npos) << r.out;
  r = run("eval --preset kitti --rte-max 0.1 --pred " + path("pred.txt") + " --gt " + path("gt.txt"));
  EXPECT_NE(r.out.find("success=false rre_max_deg=5 rte_max_m=0.1"), std::string::npos) << r.out;
  r = run("eval --units cm --pred " + path("pred.txt") + " --gt " + path("gt.txt"));
  EXPECT_NE(r.out.find("rte_cm=40"), std::string::npos) << r.out;
}

TEST_F(Cli, DownsampleGridAsciiInBinaryOut) {
  // 5x5x5 points inside a single 1 m voxel collapse to their centroid.
  PointCloud c;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 5; ++k) c.points.emplace_back(0.1 + 0.2 * i, 0.1 + 0.2 * j, 0.1 + 0.2 * k);
  save_cloud(c, path("grid.txt"), CloudFormat::Ascii);
  auto r = run("downsample --in " + path("grid.txt") + " --out " + path("one.bin") + " --voxel 1");
  ASSERT_EQ(r.code, 0) << r.out;
  const auto one = load_cloud(path("one.bin"));
  ASSERT_EQ(one.size(), 1u);
  EXPECT_LT((one[0] - Vec3(0.5, 0.5, 0.5)).norm(), 1e-6);
  r = run("downsample --in " + path("grid.txt") + " --out " + path("all.bin") + " --voxel 0.2");
  ASSERT_EQ(r.code, 0) << r.out;
  EXPECT_EQ(load_cloud(path("all.bin")).size(), 125u);
  EXPECT_EQ(read_file(path("all.bin")).substr(0, 4), "DHPC");
}

TEST_F(Cli, DownsampleRejectsNonPositiveVoxel) {
  save_cloud(PointCloud{{Vec3(0, 0, 0)}}, path("p.txt"), CloudFormat::Ascii);
  EXPECT_EQ(run("downsample --in " + path("p.txt") + " --out " + path("q.bin") + " --voxel 0").code, 2);
  EXPECT_EQ(run("downsample --in " + path("p.txt") + " --out " + path("q.bin") + " --voxel -1").code, 2);
}

TEST_F(Cli, RegisterRecoversNoiselessPose) {
  ASSERT_EQ(synth("s", "--seed 5 --noise 0 --inlier-ratio 0.3").code, 0);
  for (const char* method : {"hough", "ransac"}) {
    const auto r = run("register --source " + path("s_src.bin") + " --target " + path("s_tgt.bin") +
                       " --correspondences " + path("s_c.bin") + " --method " + method + " --out " + path("r.json") +
                       " --out-transform " + path("T.txt"));
    ASSERT_EQ(r.code, 0) << r.out;
    EXPECT_NE(r.out.find(std::string("method=") + method), std::string::npos) << r.out;
    const auto m = metrics(load_transform(path("T.txt")), load_transform(path("s_gt.txt")));
    EXPECT_LT(rad_to_deg(m.rre), 2.0) << method;
    EXPECT_LT(m.rte, 0.05) << method;
    EXPECT_NE(read_file(path("r.json")).find(std::string("\"method\": \"") + method), std::string::npos);
  }
}

TEST_F(Cli, RegisterOnCollinearInputIsRegistrationError) {
  PointCloud line;
  for (int i = 0; i < 50; ++i) line.points.emplace_back(0.02 * i, 0.0, 0.0);
  save_cloud(line, path("line.bin"));
  std::vector<Correspondence> corrs;
  for (std::uint32_t i = 0; i < 50; ++i) corrs.push_back({i, i, 1.0f});
  save_correspondences(corrs, path("c.bin"));
  const auto r = run("register --source " + path("line.bin") + " --target " + path("line.bin") +
                     " --correspondences " + path("c.bin"));
  EXPECT_EQ(r.code, 4) << r.out;
}

TEST_F(Cli, MalformedInputIsIoError) {
  {
    std::FILE* f = std::fopen(path("bad.bin").c_str(), "wb");
    std::fputs("DHPC\x05", f);
    std::fclose(f);
  }
  EXPECT_EQ(run("downsample --in " + path("bad.bin") + " --out " + path("o.bin")).code, 3);
  EXPECT_EQ(run("downsample --in " + path("missing.bin") + " --out " + path("o.bin")).code, 3);
}

TEST_F(Cli, BenchRejectsInvalidSuiteNamingTheField) {
  {
    std::FILE* f = std::fopen(path("suite.json").c_str(), "w");
    std::fputs(R"({"grid": {"inlier_ratios": [0.5, 2.0]}})", f);
    std::fclose(f);
  }
  const auto r = run("bench --suite " + path("suite.json"));
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.out.find("grid.inlier_ratios[1]"), std::string::npos) << r.out;
}

TEST_F(Cli, BenchRerunIsByteIdentical) {
  {
    std::FILE* f = std::fopen(path("suite.json").c_str(), "w");
    std::fputs(R"({"trials": 2, "grid": {"inlier_ratios": [0.5], "n_correspondences": [200]},
                   "synth": {"n_points": 400}, "matching": {"n_triplets": 2000},
                   "ransac": {"max_iterations": 500}})",
               f);
    std::fclose(f);
  }
  for (const char* tag : {"1", "2"}) {
    const auto r = run("bench --suite " + path("suite.json") + " --out-csv " + path(std::string("b") + tag + ".csv") +
                       " --out-jsonl " + path(std::string("b") + tag + ".jsonl"));
    ASSERT_EQ(r.code, 0) << r.out;
  }
  EXPECT_EQ(read_file(path("b1.csv")), read_file(path("b2.csv")));
  EXPECT_EQ(read_file(path("b1.jsonl")), read_file(path("b2.jsonl")));
  EXPECT_EQ(read_file(path("b1.csv")).rfind("method,inlier_ratio,", 0), 0u);
}

TEST_F(Cli, RefusesToOverwriteInput) {
  save_cloud(PointCloud{{Vec3(0, 0, 0)}}, path("p.bin"));
  EXPECT_EQ(run("downsample --in " + path("p.bin") + " --out " + path("p.bin")).code, 2);
}

}  // namespace
}  // namespace houghreg
