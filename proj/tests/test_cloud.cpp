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

#include <algorithm>
#include <cmath>
#include <random>
#include <set>
#include <vector>

#include <gtest/gtest.h>

#include "houghreg/cloud.hpp"

namespace houghreg {
namespace {

PointCloud grid_cloud(int n, double spacing) {
  PointCloud c;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) c.points.emplace_back(i * spacing, j * spacing, k * spacing);
  return c;
}

PointCloud random_cloud(std::size_t n, std::uint64_t seed, double lo = -1.0, double hi = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  PointCloud c;
  for (std::size_t i = 0; i < n; ++i) c.points.emplace_back(u(rng), u(rng), u(rng));
  return c;
}

std::set<VoxelIndex> occupancy(const PointCloud& c, double v) {
  std::set<VoxelIndex> s;
  for (const auto& p : c.points) s.insert(voxel_of(p, v));
  return s;
}

TEST(VoxelDownsample, NearbyPointsMergeToMidpoint) {
  PointCloud c;
  c.points = {Vec3(0.010, 0.02, 0.03), Vec3(0.011, 0.02, 0.03)};
  const PointCloud d = voxel_downsample(c, 0.05);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_LT((d[0] - Vec3(0.0105, 0.02, 0.03)).norm(), 1e-15);
}

TEST(VoxelDownsample, DistantPointsStay) {
  PointCloud c;
  c.points = {Vec3(0.01, 0.01, 0.01), Vec3(1.01, 0.01, 0.01)};
  const PointCloud d = voxel_downsample(c, 0.05);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d[0], c[0]);
  EXPECT_EQ(d[1], c[1]);
}

TEST(VoxelDownsample, GridCountMatchesBruteForce) {
  const PointCloud g = grid_cloud(10, 0.05);
  const PointCloud d = voxel_downsample(g, 0.1);
  EXPECT_EQ(d.size(), 125u);
  EXPECT_EQ(d.size(), occupancy(g, 0.1).size());
}

TEST(VoxelDownsample, NegativeCoordinatesUseFloor) {
  PointCloud c;
  c.points = {Vec3(-0.01, 0, 0), Vec3(0.01, 0, 0)};
  EXPECT_EQ(voxel_downsample(c, 0.05).size(), 2u);
  EXPECT_EQ(voxel_of(Vec3(-0.01, 0, 0), 0.05), (VoxelIndex{-1, 0, 0}));
}

TEST(VoxelDownsample, OutputOrderIsAscendingVoxel) {
  const PointCloud c = random_cloud(2000, 1);
  const PointCloud d = voxel_downsample(c, 0.1);
  for (std::size_t i = 1; i < d.size(); ++i) EXPECT_LT(voxel_of(d[i - 1], 0.1), voxel_of(d[i], 0.1));
}

TEST(VoxelDownsample, Invariants) {
  for (double v : {0.03, 0.1, 0.25}) {
    const PointCloud c = random_cloud(3000, 2);
    const PointCloud d = voxel_downsample(c, v);
    EXPECT_LE(d.size(), c.size());
    EXPECT_EQ(occupancy(d, v), occupancy(c, v));
    EXPECT_EQ(occupancy(voxel_downsample(d, v), v), occupancy(d, v));
    // Each centroid lies inside the cube of the members it replaced.
    for (const auto& p : d.points) {
      const VoxelIndex k = voxel_of(p, v);
      for (int a = 0; a < 3; ++a) {
        EXPECT_GE(p[a], k[a] * v - 1e-12);
        EXPECT_LT(p[a], (k[a] + 1) * v + 1e-12);
      }
    }
  }
}

TEST(VoxelDownsample, RejectsNonPositiveSize) {
  const PointCloud c = random_cloud(10, 3);
  for (double v : {0.0, -0.1, std::nan("")}) {
    try {
      voxel_downsample(c, v);
      FAIL() << "accepted voxel size " << v;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::InvalidVoxelSize);
    }
  }
}

TEST(VoxelDownsample, EmptyCloud) { EXPECT_TRUE(voxel_downsample(PointCloud{}, 0.05).empty()); }

Neighbor linear_scan(const std::vector<double>& data, std::size_t dim, const std::vector<double>& q) {
  Neighbor best{0, std::numeric_limits<double>::infinity()};
  double best_d2 = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i * dim < data.size(); ++i) {
    double d2 = 0.0;
    for (std::size_t k = 0; k < dim; ++k) d2 += (data[i * dim + k] - q[k]) * (data[i * dim + k] - q[k]);
    if (d2 < best_d2) {
      best_d2 = d2;
      best = {i, std::sqrt(d2)};
    }
  }
  return best;
}

TEST(NearestNeighbor, SingleElement) {
  const std::vector<double> data{1.0, 2.0, 3.0};
  NearestNeighborIndex idx(data, 3);
  const Neighbor n = idx.query(Vec3(1.0, 2.0, 5.0));
  EXPECT_EQ(n.id, 0u);
  EXPECT_DOUBLE_EQ(n.distance, 2.0);
}

TEST(NearestNeighbor, ExactHitHasZeroDistance) {
  const PointCloud c = random_cloud(500, 4);
  NearestNeighborIndex idx(c);
  for (std::size_t i = 0; i < c.size(); i += 37) {
    const Neighbor n = idx.query(c[i]);
    EXPECT_EQ(n.id, i);
    EXPECT_EQ(n.distance, 0.0);
  }
}

TEST(NearestNeighbor, MatchesLinearScan) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> g(0.0, 1.0);
  for (std::size_t dim : {1u, 3u, 8u, 32u}) {
    std::vector<double> data(1000 * dim);
    for (auto& x : data) x = g(rng);
    NearestNeighborIndex idx(data, dim);
    for (int q = 0; q < 100; ++q) {
      std::vector<double> query(dim);
      for (auto& x : query) x = g(rng);
      const Neighbor got = idx.query(query);
      const Neighbor want = linear_scan(data, dim, query);
      EXPECT_EQ(got.id, want.id);
      EXPECT_DOUBLE_EQ(got.distance, want.distance);
    }
  }
}

TEST(NearestNeighbor, TiesResolveToSmallestId) {
  // Integer lattice with duplicates: many equal distances.
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> u(0, 3);
  std::vector<double> data;
  for (int i = 0; i < 400; ++i)
    for (int k = 0; k < 3; ++k) data.push_back(u(rng));
  NearestNeighborIndex idx(data, 3);
  for (int q = 0; q < 200; ++q) {
    std::vector<double> query{u(rng) + 0.5, double(u(rng)), u(rng) - 0.5};
    EXPECT_EQ(idx.query(query).id, linear_scan(data, 3, query).id);
  }
}

TEST(NearestNeighbor, Errors) {
  try {
    NearestNeighborIndex idx(std::vector<double>{}, 3);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::EmptyIndex);
  }
  NearestNeighborIndex idx(std::vector<double>{1, 2, 3, 4}, 2);
  try {
    idx.query(Vec3(1, 2, 3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DimensionMismatch);
  }
}

TEST(NearestNeighbor, FeatureSetIndex) {
  FeatureSet f;
  f.descriptors.resize(3, 2);
  f.descriptors << 0, 0,
                   1, 1,
                   5, 5;
  NearestNeighborIndex idx(f);
  EXPECT_EQ(idx.size(), 3u);
  EXPECT_EQ(idx.query(std::vector<double>{0.9, 1.2}).id, 1u);
}

}  // namespace
}  // namespace houghreg
