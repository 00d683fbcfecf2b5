#pragma once

#include <cmath>
#include <optional>

#include <Eigen/Core>

#include "keyrep/image.h"

namespace keyrep {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

// Pinhole intrinsics; no distortion.
class CameraIntrinsics {
 public:
  CameraIntrinsics() = default;  // unit focal length, principal point at 0
  CameraIntrinsics(double fx, double fy, double cx, double cy);

  double fx() const noexcept { return fx_; }
  double fy() const noexcept { return fy_; }
  double cx() const noexcept { return cx_; }
  double cy() const noexcept { return cy_; }

  Mat3 matrix() const;
  Mat3 inverse_matrix() const;

  friend bool operator==(const CameraIntrinsics&,
                         const CameraIntrinsics&) = default;

 private:
  double fx_ = 1.0, fy_ = 1.0, cx_ = 0.0, cy_ = 0.0;
};

// Rigid transform. Frame poses are stored camera-to-world:
// X_world = rotation * X_cam + translation.
class Pose {
 public:
  static constexpr double kOrthonormalTolerance = 1e-9;

  Pose();  // identity
  // Throws ParameterError unless R is a rotation to kOrthonormalTolerance.
  Pose(const Mat3& rotation, const Vec3& translation);

  static Pose identity() { return Pose(); }
  // Projects a nearly-orthonormal matrix onto SO(3) before constructing.
  static Pose from_approximate(const Mat3& rotation, const Vec3& translation);

  const Mat3& rotation() const noexcept { return rotation_; }
  const Vec3& translation() const noexcept { return translation_; }

  Vec3 operator*(const Vec3& p) const { return rotation_ * p + translation_; }
  // (a * b)(x) == a(b(x))
  Pose operator*(const Pose& other) const;
  Pose inverse() const;

  friend bool operator==(const Pose& a, const Pose& b) {
    return a.rotation_ == b.rotation_ && a.translation_ == b.translation_;
  }

 private:
  Mat3 rotation_;
  Vec3 translation_;
};

// Max-abs deviation of R^T R from identity.
double orthonormality_error(const Mat3& r);

// Z-depth raster. 0 or NaN marks a missing sample.
class DepthMap {
 public:
  DepthMap() = default;
  DepthMap(int width, int height, double fill = 0.0);
  DepthMap(int width, int height, std::vector<double> meters);

  int width() const noexcept { return values_.width(); }
  int height() const noexcept { return values_.height(); }
  ImageSize size() const noexcept { return values_.size(); }

  double operator()(int x, int y) const noexcept { return values_(x, y); }
  double& operator()(int x, int y) noexcept { return values_(x, y); }
  bool valid(int x, int y) const noexcept;
  std::span<const double> data() const noexcept { return values_.data(); }

  friend bool operator==(const DepthMap&, const DepthMap&) = default;

 private:
  Raster<double> values_;
};

inline bool is_valid_depth(double d) noexcept { return std::isfinite(d) && d > 0.0; }

// Bilinear depth over the 4 neighbours of (x, y), using only valid neighbours
// and renormalizing their weights. Neighbours whose bilinear weight is zero
// are not consulted. Missing when fewer than min(2, weighted neighbours)
// samples are valid, or when (x, y) lies outside the raster.
std::optional<double> sample_depth(const DepthMap& depth, double x, double y);

class Homography {
 public:
  static constexpr double kMinDeterminant = 1e-12;

  Homography();  // identity
  // Normalizes h33 to 1 when nonzero; throws DegenerateMapping if singular.
  explicit Homography(const Mat3& m);

  const Mat3& matrix() const noexcept { return m_; }
  Homography inverse() const;

 private:
  Mat3 m_;
};

// Camera-frame point (d*x~, d*y~, d) for pixel p at z-depth d.
Vec3 backproject(const Vec2& p, double depth, const CameraIntrinsics& k);

// Sub-pixel projection of a camera-frame point. Throws BehindCamera if z <= 0.
Vec2 project(const Vec3& p, const CameraIntrinsics& k);

// Transform taking camera-1 coordinates to camera-2 coordinates, given
// camera-to-world poses of both cameras.
Pose relative_pose(const Pose& pose1, const Pose& pose2);

struct Reprojection {
  Vec2 pixel;
  double depth = 0.0;  // z in camera 2
};

// Lifts p1 with the depth sampled from depth1, moves it into camera 2 and
// projects. Empty when depth is missing, the point is behind camera 2 or
// lands outside `size2`. Throws ParameterError when p1 is outside depth1.
std::optional<Reprojection> reproject_keypoint(const Vec2& p1,
                                               const DepthMap& depth1,
                                               const Pose& t_1to2,
                                               const CameraIntrinsics& k1,
                                               const CameraIntrinsics& k2,
                                               const ImageSize& size2);

Vec2 apply_homography(const Homography& h, const Vec2& p);

// Plane {X : normal . X + distance = 0} expressed in camera-1 coordinates.
struct Plane {
  Vec3 normal = Vec3(0, 0, -1);
  double distance = 1.0;
};

// H = K2 (R - t n^T / d) K1^-1 for the plane in camera-1 coordinates.
Homography plane_induced_homography(const Pose& t_1to2, const Plane& plane,
                                    const CameraIntrinsics& k1,
                                    const CameraIntrinsics& k2);

}  // namespace keyrep
