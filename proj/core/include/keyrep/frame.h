#pragma once

#include <optional>
#include <string>

#include "keyrep/geometry.h"
#include "keyrep/image.h"
#include "keyrep/labels.h"

namespace keyrep {

// Everything known about one frame: the image, its ground truth and the
// camera that took it. Depth and labels are optional so that homography-only
// and unlabelled datasets flow through the same type.
struct FrameBundle {
  std::string frame_id;
  ImageGray image;
  std::optional<DepthMap> depth;
  Pose pose;  // camera-to-world
  CameraIntrinsics intrinsics;
  std::optional<LabelMap> labels;

  ImageSize size() const noexcept { return image.size(); }
  // Throws ParameterError when the rasters disagree in shape.
  void validate() const;
};

}  // namespace keyrep
