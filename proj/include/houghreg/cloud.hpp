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
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "houghreg/common.hpp"

namespace houghreg {

struct PointCloud {
  std::vector<Vec3> points;

  std::size_t size() const { return points.size(); }
  bool empty() const { return points.empty(); }
  const Vec3& operator[](std::size_t i) const { return points[i]; }
};

/// One descriptor row per point of the associated cloud.
struct FeatureSet {
  using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Matrix descriptors;

  std::size_t count() const { return static_cast<std::size_t>(descriptors.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(descriptors.cols()); }
};

using VoxelIndex = std::array<std::int64_t, 3>;

inline VoxelIndex voxel_of(const Vec3& p, double v) {
  return {static_cast<std::int64_t>(std::floor(p.x() / v)),
          static_cast<std::int64_t>(std::floor(p.y() / v)),
          static_cast<std::int64_t>(std::floor(p.z() / v))};
}

/// Replaces the members of every occupied origin-anchored cube of side v by
/// their centroid. Output is ordered by ascending voxel index.
inline PointCloud voxel_downsample(const PointCloud& cloud, double v) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw Error(ErrorCode::InvalidVoxelSize, "voxel size must be positive, got " + std::to_string(v));
  }
  struct Acc {
    Vec3 sum = Vec3::Zero();
    std::size_t n = 0;
  };
  std::map<VoxelIndex, Acc> voxels;
  for (const auto& p : cloud.points) {
    auto& a = voxels[voxel_of(p, v)];
    a.sum += p;
    ++a.n;
  }
  PointCloud out;
  out.points.reserve(voxels.size());
  for (const auto& [key, acc] : voxels) {
    out.points.push_back(acc.sum / static_cast<double>(acc.n));
  }
  return out;
}

struct Neighbor {
  std::size_t id = 0;
  double distance = 0.0;
};

/// Exact nearest-neighbor search over fixed-dimension rows (kd-tree).
/// Ties in distance resolve to the smallest id.
class NearestNeighborIndex {
 public:
  NearestNeighborIndex(std::span<const double> data, std::size_t dim) : dim_(dim) {
    if (dim == 0) throw Error(ErrorCode::DimensionMismatch, "index dimension must be >= 1");
    if (data.empty()) throw Error(ErrorCode::EmptyIndex, "cannot build an index over no data");
    if (data.size() % dim != 0) {
      throw Error(ErrorCode::DimensionMismatch, "data length is not a multiple of dim");
    }
    data_.assign(data.begin(), data.end());
    count_ = data_.size() / dim_;
    order_.resize(count_);
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    nodes_.reserve(2 * count_ / kLeafSize + 2);
    build(0, count_);
  }

  explicit NearestNeighborIndex(const FeatureSet& f)
      : NearestNeighborIndex(std::span<const double>(f.descriptors.data(),
                                                     static_cast<std::size_t>(f.descriptors.size())),
                             std::max<std::size_t>(f.dim(), 1)) {}

  explicit NearestNeighborIndex(const PointCloud& cloud)
      : NearestNeighborIndex(flatten(cloud), 3) {}

  std::size_t size() const { return count_; }
  std::size_t dim() const { return dim_; }

  Neighbor query(std::span<const double> q) const {
    if (q.size() != dim_) {
      throw Error(ErrorCode::DimensionMismatch, "query has dimension " + std::to_string(q.size()) +
                                                    ", index has " + std::to_string(dim_));
    }
    Best best;
    search(0, q, best);
    return {best.id, std::sqrt(best.d2)};
  }

  Neighbor query(const Vec3& q) const { return query(std::span<const double>(q.data(), 3)); }

  /// Squared distance between row `id` and q, summed in dimension order.
  double squared_distance(std::size_t id, std::span<const double> q) const {
    const double* row = &data_[id * dim_];
    double s = 0.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      double d = row[k] - q[k];
      s += d * d;
    }
    return s;
  }

 private:
  static constexpr std::size_t kLeafSize = 8;

  struct Node {
    std::size_t begin, end;  // range in order_
    std::size_t axis = 0;
    double split = 0.0;
    std::size_t left = 0, right = 0;  // 0 means leaf
  };

  struct Best {
    std::size_t id = std::numeric_limits<std::size_t>::max();
    double d2 = std::numeric_limits<double>::infinity();
  };

  static std::vector<double> flatten(const PointCloud& cloud) {
    std::vector<double> flat;
    flat.reserve(cloud.size() * 3);
    for (const auto& p : cloud.points) flat.insert(flat.end(), {p.x(), p.y(), p.z()});
    return flat;
  }

  double coord(std::size_t id, std::size_t axis) const { return data_[id * dim_ + axis]; }

  std::size_t build(std::size_t begin, std::size_t end) {
    std::size_t idx = nodes_.size();
    nodes_.push_back({begin, end});
    if (end - begin <= kLeafSize) return idx;

    std::size_t axis = 0;
    double widest = -1.0;
    for (std::size_t k = 0; k < dim_; ++k) {
      double lo = std::numeric_limits<double>::infinity();
      double hi = -lo;
      for (std::size_t i = begin; i < end; ++i) {
        double c = coord(order_[i], k);
        lo = std::min(lo, c);
        hi = std::max(hi, c);
      }
      if (hi - lo > widest) {
        widest = hi - lo;
        axis = k;
      }
    }
    if (widest <= 0.0) return idx;  // all rows identical: keep as leaf

    std::size_t mid = begin + (end - begin) / 2;
    std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                     [&](std::size_t a, std::size_t b) { return coord(a, axis) < coord(b, axis); });
    double split = coord(order_[mid], axis);
    std::size_t left = build(begin, mid);
    std::size_t right = build(mid, end);
    nodes_[idx].axis = axis;
    nodes_[idx].split = split;
    nodes_[idx].left = left;
    nodes_[idx].right = right;
    return idx;
  }

  void search(std::size_t idx, std::span<const double> q, Best& best) const {
    const Node& node = nodes_[idx];
    if (node.left == 0) {
      for (std::size_t i = node.begin; i < node.end; ++i) {
        std::size_t id = order_[i];
        double d2 = squared_distance(id, q);
        if (d2 < best.d2 || (d2 == best.d2 && id < best.id)) {
          best.d2 = d2;
          best.id = id;
        }
      }
      return;
    }
    // Left holds coords <= split, right holds coords >= split.
    double diff = q[node.axis] - node.split;
    std::size_t near = diff < 0.0 ? node.left : node.right;
    std::size_t far = diff < 0.0 ? node.right : node.left;
    search(near, q, best);
    // Non-strict so equal-distance rows with smaller ids are still visited.
    if (diff * diff <= best.d2) search(far, q, best);
  }

  std::size_t dim_ = 0;
  std::size_t count_ = 0;
  std::vector<double> data_;
  std::vector<std::size_t> order_;
  std::vector<Node> nodes_;
};

}  // namespace houghreg
