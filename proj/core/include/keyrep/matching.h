#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "keyrep/detectors.h"
#include "keyrep/frame.h"
#include "keyrep/geometry.h"

namespace keyrep {

enum class CorrespondenceMode { kDepth, kHomography };

std::string_view to_string(CorrespondenceMode mode);
CorrespondenceMode parse_correspondence_mode(std::string_view name);

struct EvalParams {
  double theta = 2.5;                 // pixels
  double occlusion_tolerance = 0.05;  // relative depth
  CorrespondenceMode mode = CorrespondenceMode::kDepth;

  void validate() const;
};

struct Match {
  int index1 = 0;
  int index2 = 0;
  double distance = 0.0;

  friend bool operator==(const Match&, const Match&) = default;
};

struct PairResult {
  std::vector<Match> matches;
  // Indices of keypoints in the common region of each image.
  std::vector<int> d1;
  std::vector<int> d2;
  std::optional<double> repeatability;  // absent when min(|d1|, |d2|) == 0
  double camera_distance = 0.0;         // meters

  std::size_t n_d1() const noexcept { return d1.size(); }
  std::size_t n_d2() const noexcept { return d2.size(); }
};

// Ground-truth mapping of a pixel in one image to the other; empty when the
// point has no visible counterpart there.
using PointMap = std::function<std::optional<Vec2>(const Vec2&)>;

// Reprojection through depth and the relative pose, followed by the
// occlusion check against the target depth map.
PointMap depth_point_map(const FrameBundle& from, const FrameBundle& to,
                         double occlusion_tolerance);

// Perspective mapping; empty when the result leaves `target` or the point
// maps to infinity.
PointMap homography_point_map(const Homography& h, const ImageSize& target);

struct VisibilitySets {
  std::vector<int> d1;
  std::vector<int> d2;
};

VisibilitySets visibility_sets(const KeypointSet& kps1, const KeypointSet& kps2,
                               const PointMap& map_1to2,
                               const PointMap& map_2to1);

// Depth mode uses the bundles' depth and poses; homography mode needs
// `h_1to2`. Throws ConfigError when the required ground truth is absent.
VisibilitySets visibility_sets(const KeypointSet& kps1, const KeypointSet& kps2,
                               const FrameBundle& bundle1,
                               const FrameBundle& bundle2,
                               const EvalParams& params,
                               const std::optional<Homography>& h_1to2 = {});

// Greedy one-to-one matching in ascending distance order (ties by (i, j)).
std::vector<Match> find_correspondences(const KeypointSet& kps1,
                                        const KeypointSet& kps2,
                                        std::span<const int> d1,
                                        std::span<const int> d2,
                                        const PointMap& map_1to2, double theta);

// Same, with the mapped image-1 positions already computed (parallel to d1).
std::vector<Match> find_correspondences(const KeypointSet& kps2,
                                        std::span<const int> d1,
                                        std::span<const Vec2> mapped_d1,
                                        std::span<const int> d2, double theta);

std::optional<double> repeatability(std::size_t n_matches, std::size_t n_d1,
                                    std::size_t n_d2);

double camera_distance(const Pose& a, const Pose& b);

// Evaluation of already-detected keypoints.
PairResult evaluate_keypoints(const FrameBundle& bundle1, const KeypointSet& kps1,
                              const FrameBundle& bundle2, const KeypointSet& kps2,
                              const EvalParams& params,
                              const std::optional<Homography>& h_1to2 = {});

PairResult evaluate_pair(const FrameBundle& bundle1, const FrameBundle& bundle2,
                         const DetectorConfig& cfg, const EvalParams& params,
                         const std::optional<Homography>& h_1to2 = {});

}  // namespace keyrep
