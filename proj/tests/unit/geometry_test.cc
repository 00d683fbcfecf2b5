#include <cmath>
#include <random>

#include <Eigen/Geometry>
#include <gtest/gtest.h>

#include "keyrep/error.h"
#include "keyrep/geometry.h"
#include "keyrep/synthetic.h"

namespace keyrep {
namespace {

Pose random_pose(std::mt19937& rng, double t_scale = 1.0) {
  std::normal_distribution<double> n(0.0, 1.0);
  const Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
  return Pose(q.normalized().toRotationMatrix(),
              Vec3(n(rng), n(rng), n(rng)) * t_scale);
}

TEST(Intrinsics, Validation) {
  EXPECT_THROW(CameraIntrinsics(0, 1, 0, 0), ParameterError);
  EXPECT_THROW(CameraIntrinsics(1, -1, 0, 0), ParameterError);
  EXPECT_THROW(CameraIntrinsics(1, 1, NAN, 0), ParameterError);
  const CameraIntrinsics k(100, 120, 50, 40);
  EXPECT_TRUE((k.matrix() * k.inverse_matrix()).isApprox(Mat3::Identity(), 1e-15));
}

TEST(Pose, RejectsNonRotation) {
  Mat3 r = Mat3::Identity();
  r(0, 1) = 1e-6;
  EXPECT_THROW(Pose(r, Vec3::Zero()), ParameterError);
  EXPECT_THROW(Pose(-Mat3::Identity(), Vec3::Zero()), ParameterError);
  const Pose p = Pose::from_approximate(r, Vec3::Zero());
  EXPECT_LT(orthonormality_error(p.rotation()), 1e-12);
}

TEST(Backproject, Examples) {
  const CameraIntrinsics k(100, 100, 50, 50);
  EXPECT_EQ(backproject({50, 50}, 5.0, k), Vec3(0, 0, 5));
  EXPECT_EQ(backproject({150, 50}, 2.0, k), Vec3(2, 0, 2));
  EXPECT_THROW(backproject({1, 1}, 0.0, k), InvalidDepth);
  EXPECT_THROW(backproject({1, 1}, -2.0, k), InvalidDepth);
  EXPECT_THROW(backproject({1, 1}, NAN, k), InvalidDepth);
}

TEST(Project, Examples) {
  const CameraIntrinsics k(100, 100, 50, 50);
  EXPECT_EQ(project({0, 0, 5}, k), Vec2(50, 50));
  EXPECT_EQ(project({1, 1, 2}, k), Vec2(100, 100));
  EXPECT_THROW(project({0, 0, -1}, k), BehindCamera);
  EXPECT_THROW(project({0, 0, 0}, k), BehindCamera);
}

TEST(Project, RoundTripRandom) {
  std::mt19937 rng(1);
  std::uniform_real_distribution<double> px(0.0, 640.0), d(0.1, 100.0), f(50.0, 1000.0);
  for (int i = 0; i < 1000; ++i) {
    const CameraIntrinsics k(f(rng), f(rng), px(rng), px(rng));
    const Vec2 p(px(rng), px(rng));
    EXPECT_LT((project(backproject(p, d(rng), k), k) - p).norm(), 1e-9);
  }
}

TEST(RelativePose, Examples) {
  std::mt19937 rng(2);
  const Pose a = random_pose(rng);
  const Pose same = relative_pose(a, a);
  EXPECT_LT((same.rotation() - Mat3::Identity()).norm(), 1e-12);
  EXPECT_LT(same.translation().norm(), 1e-12);

  // Camera 2 one meter along camera 1's x axis.
  const Pose b(a.rotation(), a * Vec3(1, 0, 0));
  const Pose t = relative_pose(a, b);
  EXPECT_LT((t.translation() - Vec3(-1, 0, 0)).norm(), 1e-12);

  for (int i = 0; i < 100; ++i) {
    const Pose p1 = random_pose(rng), p2 = random_pose(rng);
    const Pose rel = relative_pose(p1, p2);
    const Pose id = rel * rel.inverse();
    EXPECT_LT((id.rotation() - Mat3::Identity()).norm(), 1e-9);
    EXPECT_LT(id.translation().norm(), 1e-9);
    EXPECT_LT(orthonormality_error(rel.rotation()), 1e-9);
    EXPECT_NEAR(rel.rotation().determinant(), 1.0, 1e-9);
    // X_cam2 = T(X_cam1)
    const Vec3 x1(0.3, -0.2, 4.0);
    EXPECT_LT((rel * x1 - p2.inverse() * (p1 * x1)).norm(), 1e-9);
  }
}

TEST(SampleDepth, BilinearOverValidNeighbours) {
  DepthMap d(4, 4, 2.0);
  EXPECT_EQ(sample_depth(d, 1.0, 1.0), 2.0);
  d(2, 1) = 4.0;
  EXPECT_NEAR(*sample_depth(d, 1.5, 1.0), 3.0, 1e-15);
  d(1, 1) = 0.0;  // missing: renormalize over the rest
  EXPECT_NEAR(*sample_depth(d, 1.5, 1.5), (4.0 + 2.0 + 2.0) / 3.0, 1e-12);
  EXPECT_FALSE(sample_depth(d, 1.0, 1.0));
  d(2, 1) = NAN;
  EXPECT_FALSE(sample_depth(d, 1.5, 1.0));  // only one of two weighted corners valid
  EXPECT_FALSE(sample_depth(d, -0.1, 1.0));
}

TEST(Reproject, IdentityAndMissing) {
  const CameraIntrinsics k(100, 100, 31.5, 23.5);
  DepthMap d(64, 48, 3.0);
  const auto r = reproject_keypoint({10.25, 20.5}, d, Pose(), k, k, {64, 48});
  ASSERT_TRUE(r);
  EXPECT_LT((r->pixel - Vec2(10.25, 20.5)).norm(), 1e-9);
  EXPECT_NEAR(r->depth, 3.0, 1e-12);
  d(10, 20) = 0.0;
  EXPECT_FALSE(reproject_keypoint({10, 20}, d, Pose(), k, k, {64, 48}));
  EXPECT_THROW(reproject_keypoint({64, 20}, d, Pose(), k, k, {64, 48}), ParameterError);
}

TEST(Reproject, DisparityOracle) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> fx_d(50.0, 800.0), b_d(0.05, 2.0), d_d(1.0, 80.0);
  for (int i = 0; i < 1000; ++i) {
    const double fx = fx_d(rng), b = b_d(rng), depth = d_d(rng);
    const CameraIntrinsics k(fx, fx, 1000, 500);
    const DepthMap dm(2000, 1000, depth);
    // Camera 2 sits b meters to the right of camera 1.
    const Pose t = relative_pose(Pose(), Pose(Mat3::Identity(), Vec3(b, 0, 0)));
    const Vec2 p1(1500, 400);
    const auto r = reproject_keypoint(p1, dm, t, k, k, {4000, 1000});
    ASSERT_TRUE(r);
    EXPECT_NEAR(p1.x() - r->pixel.x(), fx * b / depth, 1e-9);
    EXPECT_NEAR(r->pixel.y(), p1.y(), 1e-9);
  }
}

TEST(Reproject, BehindOrOutside) {
  const CameraIntrinsics k(100, 100, 31.5, 23.5);
  const DepthMap d(64, 48, 2.0);
  const Pose turned(euler_rotation({0, M_PI, 0}), Vec3::Zero());
  EXPECT_FALSE(reproject_keypoint({30, 20}, d, turned, k, k, {64, 48}));
  const Pose shifted(Mat3::Identity(), Vec3(5, 0, 0));
  EXPECT_FALSE(reproject_keypoint({30, 20}, d, shifted, k, k, {64, 48}));
}

TEST(Homography, ApplyExamples) {
  EXPECT_EQ(apply_homography(Homography(), Vec2(3, 4)), Vec2(3, 4));
  Mat3 m = Mat3::Identity();
  m(0, 2) = 3;
  m(1, 2) = 4;
  EXPECT_EQ(apply_homography(Homography(m), Vec2(1, 1)), Vec2(4, 5));
  EXPECT_THROW(Homography(Mat3::Zero()), DegenerateMapping);
  Mat3 vanish = Mat3::Identity();
  vanish(2, 0) = 1.0;
  vanish(2, 2) = -1.0;
  EXPECT_THROW(apply_homography(Homography(vanish), Vec2(1, 0)), DegenerateMapping);
}

TEST(Homography, InverseRoundTrip) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    Mat3 m = Mat3::Identity();
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) m(r, c) += 0.3 * u(rng);
    }
    m(2, 0) *= 0.01;
    m(2, 1) *= 0.01;
    const Homography h(m);
    const Vec2 p(50 * u(rng), 50 * u(rng));
    EXPECT_LT((apply_homography(h.inverse(), apply_homography(h, p)) - p).norm(), 1e-9);
  }
}

TEST(PlaneHomography, IdentityAndRotation) {
  const CameraIntrinsics k(200, 200, 79.5, 59.5);
  const Plane plane{Vec3(0, 0, -1), 5.0};
  const Homography id = plane_induced_homography(Pose(), plane, k, k);
  EXPECT_LT((id.matrix() - Mat3::Identity()).norm(), 1e-15);

  const Mat3 r = euler_rotation({0.05, -0.1, 0.2});
  const Pose rot(r, Vec3::Zero());
  const Homography h = plane_induced_homography(rot, plane, k, k);
  Mat3 krk = k.matrix() * r * k.inverse_matrix();
  krk /= krk(2, 2);
  EXPECT_LT((h.matrix() - krk).norm(), 1e-12);
  // Pure rotation: any depth maps the same way.
  for (double depth : {0.5, 3.0, 40.0}) {
    const Vec2 p(30, 70);
    const Vec2 q = project(rot * backproject(p, depth, k), k);
    EXPECT_LT((apply_homography(h, p) - q).norm(), 1e-9);
  }
}

TEST(PlaneHomography, AgreesWithRayPlaneIntersection) {
  std::mt19937 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0), px(0.0, 160.0);
  const CameraIntrinsics k1(200, 210, 80, 60), k2(180, 180, 70, 65);
  int checked = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const Vec3 n = Vec3(0.2 * u(rng), 0.2 * u(rng), -1).normalized();
    const Plane plane{n, 4.0 + u(rng)};
    const Pose t(euler_rotation({0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng)}),
                 Vec3(0.5 * u(rng), 0.5 * u(rng), 0.5 * u(rng)));
    const Homography h = plane_induced_homography(t, plane, k1, k2);
    for (int i = 0; i < 100; ++i) {
      const Vec2 p(px(rng), px(rng) * 0.75);
      // Ray X = s * K^-1 p hits n.X + d = 0.
      const Vec3 ray = k1.inverse_matrix() * Vec3(p.x(), p.y(), 1);
      const double s = -plane.distance / n.dot(ray);
      if (!(s > 0)) continue;
      const Vec3 x2 = t * (s * ray);
      if (!(x2.z() > 0)) continue;
      EXPECT_LT((apply_homography(h, p) - project(x2, k2)).norm(), 1e-6);
      ++checked;
    }
  }
  EXPECT_GT(checked, 1000);
}

TEST(PlaneHomography, Preconditions) {
  const CameraIntrinsics k;
  EXPECT_THROW(plane_induced_homography(Pose(), {Vec3(0, 0, -1), 0.0}, k, k), ParameterError);
  EXPECT_THROW(plane_induced_homography(Pose(), {Vec3(0, 0, -2), 1.0}, k, k), ParameterError);
}

}  // namespace
}  // namespace keyrep
