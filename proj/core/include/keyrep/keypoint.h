#pragma once

#include <optional>
#include <vector>

namespace keyrep {

struct Keypoint {
  double x = 0.0;
  double y = 0.0;
  double response = 0.0;
  // Detection scale (Gaussian sigma in base-image pixels); DoG only.
  std::optional<double> scale;

  friend bool operator==(const Keypoint&, const Keypoint&) = default;
};

struct KeypointSet {
  std::vector<Keypoint> points;
  int width = 0;
  int height = 0;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  const Keypoint& operator[](std::size_t i) const { return points[i]; }

  friend bool operator==(const KeypointSet&, const KeypointSet&) = default;
};

}  // namespace keyrep
