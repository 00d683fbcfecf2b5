#include "keyrep/matching.h"

#include <algorithm>
#include <cmath>
#include <string>
#include <tuple>

#include "keyrep/error.h"

namespace keyrep {

std::string_view to_string(CorrespondenceMode mode) {
  return mode == CorrespondenceMode::kDepth ? "depth" : "homography";
}

CorrespondenceMode parse_correspondence_mode(std::string_view name) {
  if (name == "depth") return CorrespondenceMode::kDepth;
  if (name == "homography") return CorrespondenceMode::kHomography;
  throw ParameterError("unknown correspondence mode '" + std::string(name) + "'");
}

void EvalParams::validate() const {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw ParameterError("eval.theta must be positive");
  }
  if (!(occlusion_tolerance > 0.0 && occlusion_tolerance < 1.0)) {
    throw ParameterError("eval.occlusion_tolerance must lie in (0,1)");
  }
}

PointMap depth_point_map(const FrameBundle& from, const FrameBundle& to,
                         double occlusion_tolerance) {
  if (!from.depth || !to.depth) {
    throw ConfigError("depth correspondence needs depth maps for frames '" +
                      from.frame_id + "' and '" + to.frame_id + "'");
  }
  const Pose t = relative_pose(from.pose, to.pose);
  // Captured by reference: the bundles outlive every use within one pair
  // evaluation.
  return [&from, &to, t, occlusion_tolerance](const Vec2& p) -> std::optional<Vec2> {
    const auto hit = reproject_keypoint(p, *from.depth, t, from.intrinsics,
                                        to.intrinsics, to.size());
    if (!hit) return std::nullopt;
    // Nearest target pixel, like a z-buffer read; interpolating here would
    // blend surfaces across depth edges.
    const int x = static_cast<int>(std::lround(hit->pixel.x()));
    const int y = static_cast<int>(std::lround(hit->pixel.y()));
    if (!to.depth->valid(x, y)) return std::nullopt;
    const double observed = (*to.depth)(x, y);
    if (std::abs(hit->depth - observed) > occlusion_tolerance * observed) {
      return std::nullopt;
    }
    return hit->pixel;
  };
}

PointMap homography_point_map(const Homography& h, const ImageSize& target) {
  return [h, target](const Vec2& p) -> std::optional<Vec2> {
    const Vec3 q = h.matrix() * Vec3(p.x(), p.y(), 1.0);
    if (!(std::abs(q.z()) >= 1e-12)) return std::nullopt;
    const Vec2 m(q.x() / q.z(), q.y() / q.z());
    if (!target.contains(m.x(), m.y())) return std::nullopt;
    return m;
  };
}

namespace {

struct MappedSet {
  std::vector<int> indices;
  std::vector<Vec2> positions;
};

MappedSet map_all(const KeypointSet& kps, const PointMap& map) {
  MappedSet out;
  for (std::size_t i = 0; i < kps.size(); ++i) {
    if (auto m = map(Vec2(kps[i].x, kps[i].y))) {
      out.indices.push_back(static_cast<int>(i));
      out.positions.push_back(*m);
    }
  }
  return out;
}

struct MappedPair {
  MappedSet forward;   // image 1 -> image 2
  MappedSet backward;  // image 2 -> image 1
};

MappedPair map_pair(const KeypointSet& kps1, const KeypointSet& kps2,
                    const FrameBundle& bundle1, const FrameBundle& bundle2,
                    const EvalParams& params,
                    const std::optional<Homography>& h_1to2) {
  params.validate();
  if (params.mode == CorrespondenceMode::kDepth) {
    const PointMap f = depth_point_map(bundle1, bundle2, params.occlusion_tolerance);
    const PointMap b = depth_point_map(bundle2, bundle1, params.occlusion_tolerance);
    return {map_all(kps1, f), map_all(kps2, b)};
  }
  if (!h_1to2) {
    throw ConfigError("homography mode needs a ground-truth homography");
  }
  const PointMap f = homography_point_map(*h_1to2, bundle2.size());
  const PointMap b = homography_point_map(h_1to2->inverse(), bundle1.size());
  return {map_all(kps1, f), map_all(kps2, b)};
}

}  // namespace

VisibilitySets visibility_sets(const KeypointSet& kps1, const KeypointSet& kps2,
                               const PointMap& map_1to2,
                               const PointMap& map_2to1) {
  return {map_all(kps1, map_1to2).indices, map_all(kps2, map_2to1).indices};
}

VisibilitySets visibility_sets(const KeypointSet& kps1, const KeypointSet& kps2,
                               const FrameBundle& bundle1,
                               const FrameBundle& bundle2,
                               const EvalParams& params,
                               const std::optional<Homography>& h_1to2) {
  MappedPair m = map_pair(kps1, kps2, bundle1, bundle2, params, h_1to2);
  return {std::move(m.forward.indices), std::move(m.backward.indices)};
}

std::vector<Match> find_correspondences(const KeypointSet& kps2,
                                        std::span<const int> d1,
                                        std::span<const Vec2> mapped_d1,
                                        std::span<const int> d2, double theta) {
  if (d1.size() != mapped_d1.size()) {
    throw ParameterError("mapped positions must parallel d1");
  }
  if (!(theta > 0.0)) throw ParameterError("theta must be positive");
  if (d1.empty() || d2.empty()) return {};

  // Uniform grid over the image-2 keypoints with cells of size theta, so
  // candidates for a mapped point live in its 3x3 cell neighbourhood.
  double min_x = kps2[d2[0]].x, min_y = kps2[d2[0]].y;
  double max_x = min_x, max_y = min_y;
  for (int j : d2) {
    min_x = std::min(min_x, kps2[j].x);
    min_y = std::min(min_y, kps2[j].y);
    max_x = std::max(max_x, kps2[j].x);
    max_y = std::max(max_y, kps2[j].y);
  }
  const int gw = static_cast<int>((max_x - min_x) / theta) + 1;
  const int gh = static_cast<int>((max_y - min_y) / theta) + 1;
  std::vector<std::vector<int>> cells(static_cast<std::size_t>(gw) * gh);
  for (int j : d2) {
    const int cx = static_cast<int>((kps2[j].x - min_x) / theta);
    const int cy = static_cast<int>((kps2[j].y - min_y) / theta);
    cells[static_cast<std::size_t>(cy) * gw + cx].push_back(j);
  }

  std::vector<Match> candidates;
  for (std::size_t a = 0; a < d1.size(); ++a) {
    const Vec2& p = mapped_d1[a];
    const double fx = std::floor((p.x() - min_x) / theta);
    const double fy = std::floor((p.y() - min_y) / theta);
    if (fx < -1.0 || fy < -1.0 || fx > gw || fy > gh) continue;
    const int cx = static_cast<int>(fx);
    const int cy = static_cast<int>(fy);
    for (int yy = std::max(cy - 1, 0); yy <= std::min(cy + 1, gh - 1); ++yy) {
      for (int xx = std::max(cx - 1, 0); xx <= std::min(cx + 1, gw - 1); ++xx) {
        for (int j : cells[static_cast<std::size_t>(yy) * gw + xx]) {
          const double dist = std::hypot(p.x() - kps2[j].x, p.y() - kps2[j].y);
          if (dist < theta) candidates.push_back({d1[a], j, dist});
        }
      }
    }
  }

  std::sort(candidates.begin(), candidates.end(), [](const Match& a, const Match& b) {
    return std::tie(a.distance, a.index1, a.index2) <
           std::tie(b.distance, b.index1, b.index2);
  });

  int max1 = 0, max2 = 0;
  for (int i : d1) max1 = std::max(max1, i);
  for (int j : d2) max2 = std::max(max2, j);
  std::vector<char> used1(max1 + 1, 0), used2(max2 + 1, 0);
  std::vector<Match> matches;
  for (const Match& c : candidates) {
    if (used1[c.index1] || used2[c.index2]) continue;
    used1[c.index1] = used2[c.index2] = 1;
    matches.push_back(c);
  }
  return matches;
}

std::vector<Match> find_correspondences(const KeypointSet& kps1,
                                        const KeypointSet& kps2,
                                        std::span<const int> d1,
                                        std::span<const int> d2,
                                        const PointMap& map_1to2, double theta) {
  std::vector<Vec2> mapped;
  mapped.reserve(d1.size());
  for (int i : d1) {
    const auto m = map_1to2(Vec2(kps1[i].x, kps1[i].y));
    if (!m) throw ParameterError("map_1to2 undefined on a member of d1");
    mapped.push_back(*m);
  }
  return find_correspondences(kps2, d1, mapped, d2, theta);
}

std::optional<double> repeatability(std::size_t n_matches, std::size_t n_d1,
                                    std::size_t n_d2) {
  const std::size_t denom = std::min(n_d1, n_d2);
  if (denom == 0) return std::nullopt;
  return static_cast<double>(n_matches) / static_cast<double>(denom);
}

double camera_distance(const Pose& a, const Pose& b) {
  return (a.translation() - b.translation()).norm();
}

PairResult evaluate_keypoints(const FrameBundle& bundle1, const KeypointSet& kps1,
                              const FrameBundle& bundle2, const KeypointSet& kps2,
                              const EvalParams& params,
                              const std::optional<Homography>& h_1to2) {
  MappedPair m = map_pair(kps1, kps2, bundle1, bundle2, params, h_1to2);
  PairResult out;
  out.matches = find_correspondences(kps2, m.forward.indices, m.forward.positions,
                                     m.backward.indices, params.theta);
  out.d1 = std::move(m.forward.indices);
  out.d2 = std::move(m.backward.indices);
  out.repeatability = repeatability(out.matches.size(), out.d1.size(), out.d2.size());
  out.camera_distance = camera_distance(bundle1.pose, bundle2.pose);
  return out;
}

PairResult evaluate_pair(const FrameBundle& bundle1, const FrameBundle& bundle2,
                         const DetectorConfig& cfg, const EvalParams& params,
                         const std::optional<Homography>& h_1to2) {
  params.validate();
  if (params.mode == CorrespondenceMode::kDepth && (!bundle1.depth || !bundle2.depth)) {
    throw ConfigError("depth mode needs depth maps for frames '" + bundle1.frame_id +
                      "' and '" + bundle2.frame_id + "'");
  }
  const KeypointSet kps1 = detect(bundle1.image, cfg);
  const KeypointSet kps2 = detect(bundle2.image, cfg);
  return evaluate_keypoints(bundle1, kps1, bundle2, kps2, params, h_1to2);
}

}  // namespace keyrep
