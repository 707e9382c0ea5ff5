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

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "houghreg/geometry.hpp"

namespace houghreg {
namespace {

constexpr double kPi = std::numbers::pi;

Vec3 random_unit(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vec3 v;
  do {
    v = Vec3(n(rng), n(rng), n(rng));
  } while (v.norm() < 1e-6);
  return v.normalized();
}

// Rotations from Eigen's quaternion-backed AngleAxis, independent of the
// library's Rodrigues path.
Mat3 oracle_rotation(const Vec3& axis, double angle) { return Eigen::AngleAxisd(angle, axis).toRotationMatrix(); }

RigidTransform random_transform(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ang(0.0, kPi), tr(-2.0, 2.0);
  return {oracle_rotation(random_unit(rng), ang(rng)), Vec3(tr(rng), tr(rng), tr(rng))};
}

double max_abs_diff(const Mat3& a, const Mat3& b) { return (a - b).cwiseAbs().maxCoeff(); }

TEST(AxisAngle, IdentityMapsToZero) {
  EXPECT_EQ(rotation_to_axis_angle(Mat3::Identity()).r, Vec3::Zero());
  EXPECT_EQ(axis_angle_to_rotation(AxisAngle{}), Mat3::Identity());
}

TEST(AxisAngle, QuarterTurnAboutZ) {
  Mat3 R;
  R << 0, -1, 0,
       1, 0, 0,
       0, 0, 1;
  const Vec3 r = rotation_to_axis_angle(R).r;
  EXPECT_NEAR(r.x(), 0.0, 1e-15);
  EXPECT_NEAR(r.y(), 0.0, 1e-15);
  EXPECT_NEAR(r.z(), kPi / 2, 1e-15);
}

TEST(AxisAngle, HalfTurnAboutX) {
  const Mat3 R = axis_angle_to_rotation(AxisAngle(kPi, 0, 0));
  EXPECT_LT(max_abs_diff(R, Vec3(1, -1, -1).asDiagonal().toDenseMatrix()), 1e-15);
  const Vec3 r = rotation_to_axis_angle(R).r;
  EXPECT_NEAR(r.x(), kPi, 1e-12);
  EXPECT_NEAR(r.y(), 0.0, 1e-12);
  EXPECT_NEAR(r.z(), 0.0, 1e-12);
}

TEST(AxisAngle, HalfTurnSignIsCanonical) {
  // r and -r are the same half turn; the first nonzero component comes out positive.
  const Vec3 axis = Vec3(-1, 2, -2).normalized();
  const Mat3 R = oracle_rotation(axis, kPi);
  const Vec3 r = rotation_to_axis_angle(R).r;
  EXPECT_GT(r.x(), 0.0);
  EXPECT_NEAR(r.norm(), kPi, 1e-9);
  EXPECT_LT((r.normalized() + axis).norm(), 1e-9);
  EXPECT_LT(max_abs_diff(axis_angle_to_rotation(AxisAngle(r)), R), 1e-9);
}

TEST(AxisAngle, NearHalfTurnRoundTripsMatrix) {
  std::mt19937_64 rng(7);
  for (double eps : {0.0, 1e-9, 1e-7, 5e-7, 2e-6}) {
    for (int k = 0; k < 200; ++k) {
      const Mat3 R = oracle_rotation(random_unit(rng), kPi - eps);
      const AxisAngle aa = rotation_to_axis_angle(R);
      EXPECT_LE(aa.angle(), kPi + 1e-12);  // norm of axis * pi may round up one ulp
      EXPECT_LT(max_abs_diff(axis_angle_to_rotation(aa), R), 1e-6) << "eps " << eps;
    }
  }
}

TEST(AxisAngle, SmallAnglesTakeTheZeroBranch) {
  const Mat3 R = oracle_rotation(Vec3::UnitY(), 1e-10);
  EXPECT_EQ(rotation_to_axis_angle(R).r, Vec3::Zero());
  EXPECT_EQ(axis_angle_to_rotation(AxisAngle(0, 1e-10, 0)), Mat3::Identity());
}

TEST(AxisAngle, RoundTripOnRandomRotations) {
  std::mt19937_64 rng(20210101);
  std::uniform_real_distribution<double> ang(1e-4, kPi - 1e-3);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const Vec3 axis = random_unit(rng);
    const double theta = ang(rng);
    const Mat3 R = oracle_rotation(axis, theta);
    const AxisAngle aa = rotation_to_axis_angle(R);
    EXPECT_NEAR(aa.angle(), theta, 1e-9);
    worst = std::max(worst, max_abs_diff(axis_angle_to_rotation(aa), R));
  }
  EXPECT_LT(worst, 1e-9);
}

TEST(AxisAngle, RodriguesMatchesIndependentRotation) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> ang(0.0, kPi);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 axis = random_unit(rng);
    const double theta = ang(rng);
    EXPECT_LT(max_abs_diff(axis_angle_to_rotation(AxisAngle(axis * theta)), oracle_rotation(axis, theta)), 1e-12);
  }
}

TEST(AxisAngle, CoaxialRotationsAdd) {
  for (double a : {0.1, 0.7, 1.3}) {
    for (double b : {0.2, 0.9, 1.5}) {
      const Mat3 product = axis_angle_to_rotation(AxisAngle(0, 0, a)) * axis_angle_to_rotation(AxisAngle(0, 0, b));
      EXPECT_LT(max_abs_diff(product, axis_angle_to_rotation(AxisAngle(0, 0, a + b))), 1e-12);
    }
  }
}

TEST(AxisAngle, ProducesProperRotations) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> ang(0.0, kPi);
  for (int k = 0; k < 10000; ++k) {
    EXPECT_TRUE(is_rotation(axis_angle_to_rotation(AxisAngle(random_unit(rng) * ang(rng)))));
  }
}

TEST(Procrustes, IdenticalSetsGiveIdentity) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {0, 2, 0.5}};
  const RigidTransform T = solve_procrustes(pts, pts);
  EXPECT_LT(max_abs_diff(T.rotation, Mat3::Identity()), 1e-9);
  EXPECT_LT(T.translation.norm(), 1e-9);
}

TEST(Procrustes, RecoversGeneratingTransform) {
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int k = 0; k < 10000; ++k) {
    const RigidTransform gt = random_transform(rng);
    std::vector<Vec3> src;
    do {
      src = {Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng)), Vec3(u(rng), u(rng), u(rng))};
    } while ((src[1] - src[0]).cross(src[2] - src[0]).norm() < 0.05);
    const std::vector<Vec3> dst = apply_transform(gt, src);
    const RigidTransform T = solve_procrustes(src, dst);
    ASSERT_LT(max_abs_diff(T.rotation, gt.rotation), 1e-9);
    ASSERT_LT((T.translation - gt.translation).cwiseAbs().maxCoeff(), 1e-9);
    ASSERT_TRUE(is_rotation(T.rotation));
    ASSERT_LE(residual(T, src, dst), residual(gt, src, dst) + 1e-9);
  }
}

TEST(Procrustes, MirrorStillReturnsProperRotation) {
  const std::vector<Vec3> src{{1, 0, 0}, {0, 1, 0}, {0, 0, 1}, {1, 1, 1}};
  std::vector<Vec3> dst;
  for (const auto& p : src) dst.emplace_back(-p.x(), p.y(), p.z());
  const RigidTransform T = solve_procrustes(src, dst);
  EXPECT_NEAR(T.rotation.determinant(), 1.0, 1e-12);
  EXPECT_GT(residual(T, src, dst), 1e-3);
}

TEST(Procrustes, NoisyFitBeatsPerturbedPoses) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::normal_distribution<double> noise(0.0, 0.02);
  const RigidTransform gt = random_transform(rng);
  std::vector<Vec3> src, dst;
  for (int i = 0; i < 30; ++i) {
    src.emplace_back(u(rng), u(rng), u(rng));
    dst.push_back(gt(src.back()) + Vec3(noise(rng), noise(rng), noise(rng)));
  }
  const RigidTransform T = solve_procrustes(src, dst);
  const double best = residual(T, src, dst);
  std::normal_distribution<double> jitter(0.0, 0.05);
  for (int k = 0; k < 1000; ++k) {
    RigidTransform P;
    P.rotation = oracle_rotation(random_unit(rng), std::abs(jitter(rng))) * T.rotation;
    P.translation = T.translation + Vec3(jitter(rng), jitter(rng), jitter(rng));
    EXPECT_LE(best, residual(P, src, dst) + 1e-12);
  }
}

TEST(Procrustes, RejectsBadInput) {
  const std::vector<Vec3> two{{0, 0, 0}, {1, 0, 0}};
  const std::vector<Vec3> three{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}};
  EXPECT_THROW(solve_procrustes(two, two), Error);
  EXPECT_THROW(solve_procrustes(three, two), Error);
  try {
    solve_procrustes(two, two);
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateInput);
  }
}

TEST(Transform, ApplyIdentityAndTranslation) {
  const std::vector<Vec3> pts{{1, 2, 3}, {-4, 5, 0.5}};
  EXPECT_EQ(apply_transform(RigidTransform::identity(), pts), pts);
  RigidTransform up;
  up.translation = Vec3(0, 0, 1);
  EXPECT_EQ(apply_transform(up, std::vector<Vec3>{Vec3::Zero()})[0], Vec3(0, 0, 1));
}

TEST(Transform, RigidityAndInverse) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  for (int k = 0; k < 100; ++k) {
    const RigidTransform T = random_transform(rng);
    std::vector<Vec3> pts;
    for (int i = 0; i < 20; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
    const auto moved = apply_transform(T, pts);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (std::size_t j = i + 1; j < pts.size(); ++j) {
        EXPECT_NEAR((moved[i] - moved[j]).norm(), (pts[i] - pts[j]).norm(), 1e-9);
      }
    }
    const auto back = apply_transform(inverse(T), moved);
    for (std::size_t i = 0; i < pts.size(); ++i) EXPECT_LT((back[i] - pts[i]).norm(), 1e-9);
  }
}

TEST(Transform, Algebra) {
  std::mt19937_64 rng(13);
  EXPECT_EQ(inverse(RigidTransform::identity()).matrix(), Mat4::Identity());
  for (int k = 0; k < 1000; ++k) {
    const RigidTransform T = random_transform(rng);
    const RigidTransform I = compose(T, inverse(T));
    EXPECT_LT((I.matrix() - Mat4::Identity()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_LT((inverse(inverse(T)).matrix() - T.matrix()).cwiseAbs().maxCoeff(), 1e-9);
    EXPECT_EQ(compose(RigidTransform::identity(), T).matrix(), T.matrix());
    const RigidTransform U = random_transform(rng);
    EXPECT_LT((compose(T, U).matrix() - T.matrix() * U.matrix()).cwiseAbs().maxCoeff(), 1e-12);
  }
}

TEST(Metrics, RreCases) {
  std::mt19937_64 rng(17);
  const Mat3 gt = oracle_rotation(random_unit(rng), 1.1);
  EXPECT_NEAR(rre(gt, gt), 0.0, 1e-7);
  const Mat3 further = gt * oracle_rotation(random_unit(rng), 0.3);
  EXPECT_NEAR(rre(further, gt), 0.3, 1e-9);
  const Mat3 flipped = gt * Vec3(1, -1, -1).asDiagonal().toDenseMatrix();
  EXPECT_NEAR(rre(flipped, gt), kPi, 1e-7);
}

TEST(Metrics, RreSymmetricAndBounded) {
  std::mt19937_64 rng(19);
  for (int k = 0; k < 1000; ++k) {
    const Mat3 a = random_transform(rng).rotation;
    const Mat3 b = random_transform(rng).rotation;
    EXPECT_DOUBLE_EQ(rre(a, b), rre(b, a));
    EXPECT_GE(rre(a, b), 0.0);
    EXPECT_LE(rre(a, b), kPi);
  }
}

TEST(Metrics, RteIsEuclideanNorm) {
  EXPECT_EQ(rte(Vec3(1, 2, 3), Vec3(1, 2, 3)), 0.0);
  EXPECT_DOUBLE_EQ(rte(Vec3::Zero(), Vec3(0, 3, 4)), 5.0);
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(-10.0, 10.0);
  for (int k = 0; k < 1000; ++k) {
    const Vec3 a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
    const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
    EXPECT_NEAR(rte(a, b), std::sqrt(dx * dx + dy * dy + dz * dz), 1e-12);
  }
}

TEST(Metrics, DegreeConversion) {
  EXPECT_DOUBLE_EQ(rad_to_deg(kPi), 180.0);
  EXPECT_DOUBLE_EQ(deg_to_rad(90.0), kPi / 2);
}

}  // namespace
}  // namespace houghreg
