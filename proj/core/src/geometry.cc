#include "keyrep/geometry.h"

#include <cmath>
#include <string>

#include <Eigen/LU>
#include <Eigen/SVD>

#include "keyrep/error.h"

namespace keyrep {

CameraIntrinsics::CameraIntrinsics(double fx, double fy, double cx, double cy)
    : fx_(fx), fy_(fy), cx_(cx), cy_(cy) {
  if (!(std::isfinite(fx) && std::isfinite(fy) && std::isfinite(cx) &&
        std::isfinite(cy))) {
    throw ParameterError("camera intrinsics must be finite");
  }
  if (!(fx > 0.0 && fy > 0.0)) {
    throw ParameterError("focal lengths must be positive");
  }
}

Mat3 CameraIntrinsics::matrix() const {
  Mat3 k;
  k << fx_, 0, cx_, 0, fy_, cy_, 0, 0, 1;
  return k;
}

Mat3 CameraIntrinsics::inverse_matrix() const {
  Mat3 k;
  k << 1.0 / fx_, 0, -cx_ / fx_, 0, 1.0 / fy_, -cy_ / fy_, 0, 0, 1;
  return k;
}

double orthonormality_error(const Mat3& r) {
  return (r.transpose() * r - Mat3::Identity()).cwiseAbs().maxCoeff();
}

Pose::Pose() : rotation_(Mat3::Identity()), translation_(Vec3::Zero()) {}

Pose::Pose(const Mat3& rotation, const Vec3& translation)
    : rotation_(rotation), translation_(translation) {
  if (!rotation.allFinite() || !translation.allFinite()) {
    throw ParameterError("pose must be finite");
  }
  const double err = orthonormality_error(rotation);
  if (err > kOrthonormalTolerance) {
    throw ParameterError("rotation is not orthonormal (error " +
                         std::to_string(err) + ")");
  }
  if (std::abs(rotation.determinant() - 1.0) > kOrthonormalTolerance) {
    throw ParameterError("rotation determinant must be +1");
  }
}

Pose Pose::from_approximate(const Mat3& rotation, const Vec3& translation) {
  if (orthonormality_error(rotation) <= kOrthonormalTolerance &&
      std::abs(rotation.determinant() - 1.0) <= kOrthonormalTolerance) {
    return Pose(rotation, translation);
  }
  Eigen::JacobiSVD<Mat3> svd(rotation, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Mat3 u = svd.matrixU();
  const Mat3& v = svd.matrixV();
  if ((u * v.transpose()).determinant() < 0.0) u.col(2) *= -1.0;
  return Pose(u * v.transpose(), translation);
}

Pose Pose::operator*(const Pose& other) const {
  Pose out;
  out.rotation_ = rotation_ * other.rotation_;
  out.translation_ = rotation_ * other.translation_ + translation_;
  return out;
}

Pose Pose::inverse() const {
  Pose out;
  out.rotation_ = rotation_.transpose();
  out.translation_ = -(out.rotation_ * translation_);
  return out;
}

DepthMap::DepthMap(int width, int height, double fill)
    : values_(width, height, fill) {}

DepthMap::DepthMap(int width, int height, std::vector<double> meters)
    : values_(width, height, std::move(meters)) {}

bool DepthMap::valid(int x, int y) const noexcept {
  return is_valid_depth(values_(x, y));
}

std::optional<double> sample_depth(const DepthMap& depth, double x, double y) {
  if (!(x >= 0.0 && y >= 0.0 && x <= depth.width() - 1 &&
        y <= depth.height() - 1)) {
    return std::nullopt;
  }
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const double fx = x - x0;
  const double fy = y - y0;
  const double weights[4] = {(1 - fx) * (1 - fy), fx * (1 - fy), (1 - fx) * fy,
                             fx * fy};
  const int offsets[4][2] = {{0, 0}, {1, 0}, {0, 1}, {1, 1}};

  int weighted = 0;
  int valid = 0;
  double acc = 0.0;
  double wsum = 0.0;
  for (int i = 0; i < 4; ++i) {
    if (weights[i] <= 0.0) continue;
    ++weighted;
    const double d = depth(x0 + offsets[i][0], y0 + offsets[i][1]);
    if (!is_valid_depth(d)) continue;
    ++valid;
    acc += weights[i] * d;
    wsum += weights[i];
  }
  if (valid == 0 || valid < std::min(2, weighted)) return std::nullopt;
  return acc / wsum;
}

Homography::Homography() : m_(Mat3::Identity()) {}

Homography::Homography(const Mat3& m) : m_(m) {
  if (!m.allFinite()) throw DegenerateMapping("homography must be finite");
  if (std::abs(m_(2, 2)) > 1e-12) m_ /= m_(2, 2);
  if (std::abs(m_.determinant()) <= kMinDeterminant) {
    throw DegenerateMapping("homography is singular");
  }
}

Homography Homography::inverse() const { return Homography(m_.inverse()); }

Vec3 backproject(const Vec2& p, double depth, const CameraIntrinsics& k) {
  if (!is_valid_depth(depth)) {
    throw InvalidDepth("backprojection needs a positive finite depth");
  }
  const double xn = (p.x() - k.cx()) / k.fx();
  const double yn = (p.y() - k.cy()) / k.fy();
  return {depth * xn, depth * yn, depth};
}

Vec2 project(const Vec3& p, const CameraIntrinsics& k) {
  if (!(p.z() > 0.0)) throw BehindCamera("point is not in front of the camera");
  return {k.fx() * p.x() / p.z() + k.cx(), k.fy() * p.y() / p.z() + k.cy()};
}

Pose relative_pose(const Pose& pose1, const Pose& pose2) {
  return pose2.inverse() * pose1;
}

std::optional<Reprojection> reproject_keypoint(const Vec2& p1,
                                               const DepthMap& depth1,
                                               const Pose& t_1to2,
                                               const CameraIntrinsics& k1,
                                               const CameraIntrinsics& k2,
                                               const ImageSize& size2) {
  if (!depth1.size().contains(p1.x(), p1.y())) {
    throw ParameterError("keypoint lies outside the depth map");
  }
  const auto d = sample_depth(depth1, p1.x(), p1.y());
  if (!d) return std::nullopt;
  const Vec3 in_cam2 = t_1to2 * backproject(p1, *d, k1);
  if (!(in_cam2.z() > 0.0)) return std::nullopt;
  const Vec2 px = project(in_cam2, k2);
  if (!size2.contains(px.x(), px.y())) return std::nullopt;
  return Reprojection{px, in_cam2.z()};
}

Vec2 apply_homography(const Homography& h, const Vec2& p) {
  const Vec3 q = h.matrix() * Vec3(p.x(), p.y(), 1.0);
  if (!(std::abs(q.z()) >= 1e-12)) {
    throw DegenerateMapping("homography maps point to infinity");
  }
  return {q.x() / q.z(), q.y() / q.z()};
}

Homography plane_induced_homography(const Pose& t_1to2, const Plane& plane,
                                    const CameraIntrinsics& k1,
                                    const CameraIntrinsics& k2) {
  if (!(plane.distance > 0.0) || !std::isfinite(plane.distance)) {
    throw ParameterError("plane distance must be positive");
  }
  if (std::abs(plane.normal.norm() - 1.0) > 1e-9) {
    throw ParameterError("plane normal must be unit length");
  }
  const Mat3 euclidean =
      t_1to2.rotation() -
      t_1to2.translation() * plane.normal.transpose() / plane.distance;
  return Homography(k2.matrix() * euclidean * k1.inverse_matrix());
}

}  // namespace keyrep
