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
#include <numbers>
#include <span>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <Eigen/LU>
#include <Eigen/SVD>

#include "houghreg/common.hpp"

namespace houghreg {

/// Below this angle conversions take the small-angle branch.
inline constexpr double kSmallAngle = 1e-8;
/// Within this distance of pi the axis comes from the symmetric part.
inline constexpr double kNearPi = 1e-6;

/// Rotation as a 3-vector: direction is the axis, norm the angle in radians,
/// kept in [0, pi].
struct AxisAngle {
  Vec3 r = Vec3::Zero();

  AxisAngle() = default;
  explicit AxisAngle(const Vec3& v) : r(v) {}
  AxisAngle(double x, double y, double z) : r(x, y, z) {}

  double angle() const { return r.norm(); }
};

/// x -> rotation * x + translation.
struct RigidTransform {
  Mat3 rotation = Mat3::Identity();
  Vec3 translation = Vec3::Zero();

  static RigidTransform identity() { return {}; }

  Vec3 operator()(const Vec3& p) const { return rotation * p + translation; }

  Mat4 matrix() const {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = rotation;
    m.topRightCorner<3, 1>() = translation;
    return m;
  }

  static RigidTransform from_matrix(const Mat4& m) {
    RigidTransform t;
    t.rotation = m.topLeftCorner<3, 3>();
    t.translation = m.topRightCorner<3, 1>();
    return t;
  }
};

struct MetricPair {
  double rre = 0.0;  // radians
  double rte = 0.0;  // meters
};

inline bool is_rotation(const Mat3& m, double tol = 1e-9) {
  double ortho = (m.transpose() * m - Mat3::Identity()).cwiseAbs().maxCoeff();
  double det = m.determinant();
  return ortho <= tol && std::abs(det - 1.0) <= tol;
}

inline Mat3 skew(const Vec3& v) {
  Mat3 k;
  k << 0.0, -v.z(), v.y(),
       v.z(), 0.0, -v.x(),
       -v.y(), v.x(), 0.0;
  return k;
}

inline AxisAngle rotation_to_axis_angle(const Mat3& R) {
  const double c = std::clamp((R.trace() - 1.0) / 2.0, -1.0, 1.0);
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  // atan2 keeps theta well conditioned at both ends, where acos(c) is not.
  const double s = w.norm() / 2.0;
  const double theta = std::atan2(s, c);
  if (theta < kSmallAngle) return AxisAngle{};

  if (theta < std::numbers::pi - kNearPi) {
    return AxisAngle(w / (2.0 * s) * theta);
  }

  // Near a half turn the skew part vanishes; (R + R^T)/2 - cos(theta) I equals
  // (1 - cos(theta)) a a^T, so take its dominant column.
  const Mat3 B = (R + R.transpose()) / 2.0 - c * Mat3::Identity();
  Eigen::Index k = 0;
  B.diagonal().maxCoeff(&k);
  Vec3 axis = B.col(k).normalized();
  for (int i = 0; i < 3; ++i) {
    if (std::abs(axis[i]) > 1e-12) {
      if (axis[i] < 0.0) axis = -axis;
      break;
    }
  }
  return AxisAngle(axis * theta);
}

/// Rodrigues formula.
inline Mat3 axis_angle_to_rotation(const AxisAngle& aa) {
  const double theta = aa.angle();
  if (theta < kSmallAngle) return Mat3::Identity();
  const Mat3 K = skew(aa.r / theta);
  return Mat3::Identity() + std::sin(theta) * K + (1.0 - std::cos(theta)) * K * K;
}

/// Least-squares rigid fit mapping src onto dst (Kabsch with the reflection
/// guard). The result always has det(R) = +1.
inline RigidTransform solve_procrustes(std::span<const Vec3> src, std::span<const Vec3> dst) {
  if (src.size() != dst.size()) {
    throw Error(ErrorCode::DegenerateInput, "point lists differ in length (" +
                                                std::to_string(src.size()) + " vs " +
                                                std::to_string(dst.size()) + ")");
  }
  if (src.size() < 3) {
    throw Error(ErrorCode::DegenerateInput,
                "need at least 3 point pairs, got " + std::to_string(src.size()));
  }
  const double n = static_cast<double>(src.size());
  Vec3 p_bar = Vec3::Zero();
  Vec3 q_bar = Vec3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    p_bar += src[i];
    q_bar += dst[i];
  }
  p_bar /= n;
  q_bar /= n;

  Mat3 H = Mat3::Zero();
  for (std::size_t i = 0; i < src.size(); ++i) {
    H += (src[i] - p_bar) * (dst[i] - q_bar).transpose();
  }

  Eigen::JacobiSVD<Mat3> svd(H, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3& U = svd.matrixU();
  const Mat3& V = svd.matrixV();
  Mat3 D = Mat3::Identity();
  D(2, 2) = (V * U.transpose()).determinant() < 0.0 ? -1.0 : 1.0;

  RigidTransform T;
  T.rotation = V * D * U.transpose();
  T.translation = q_bar - T.rotation * p_bar;
  return T;
}

inline std::vector<Vec3> apply_transform(const RigidTransform& T, std::span<const Vec3> points) {
  std::vector<Vec3> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(T(p));
  return out;
}

/// compose(a, b) applies b first, then a.
inline RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  RigidTransform t;
  t.rotation = a.rotation * b.rotation;
  t.translation = a.rotation * b.translation + a.translation;
  return t;
}

inline RigidTransform inverse(const RigidTransform& T) {
  RigidTransform t;
  t.rotation = T.rotation.transpose();
  t.translation = -(t.rotation * T.translation);
  return t;
}

/// Sum of squared residuals |dst_k - T(src_k)|^2.
inline double residual(const RigidTransform& T, std::span<const Vec3> src, std::span<const Vec3> dst) {
  double sum = 0.0;
  for (std::size_t i = 0; i < src.size(); ++i) sum += (dst[i] - T(src[i])).squaredNorm();
  return sum;
}

/// Relative rotation error in radians.
inline double rre(const Mat3& pred, const Mat3& gt) {
  const double c = std::clamp(((pred.transpose() * gt).trace() - 1.0) / 2.0, -1.0, 1.0);
  return std::acos(c);
}

/// Relative translation error in meters (Euclidean norm).
inline double rte(const Vec3& pred_t, const Vec3& gt_t) { return (pred_t - gt_t).norm(); }

inline MetricPair metrics(const RigidTransform& pred, const RigidTransform& gt) {
  return {rre(pred.rotation, gt.rotation), rte(pred.translation, gt.translation)};
}

inline double rad_to_deg(double r) { return r * 180.0 / std::numbers::pi; }
inline double deg_to_rad(double d) { return d * std::numbers::pi / 180.0; }

}  // namespace houghreg
