#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "keyrep/image.h"
#include "keyrep/keypoint.h"

namespace keyrep {

enum class DetectorKind { kFast, kHarris, kDog };

std::string_view to_string(DetectorKind kind);
// Accepts "fast", "harris", "dog". Throws ParameterError otherwise.
DetectorKind parse_detector_kind(std::string_view name);

struct FastParams {
  double threshold = 0.08;  // intensity units, ~20/255
  int arc = 9;
};

struct HarrisParams {
  double sigma_i = 2.0;  // integration scale
  double sigma_d = 1.0;  // differentiation scale
  double k = 0.04;
  double threshold = 1e-8;
};

struct DogParams {
  int octaves = 3;
  int scales_per_octave = 3;
  double contrast_threshold = 0.01;
  double edge_ratio = 10.0;
};

struct DetectorConfig {
  DetectorKind kind = DetectorKind::kFast;
  // Report label; defaults to the kind name when empty.
  std::string name;
  FastParams fast;
  HarrisParams harris;
  DogParams dog;
  std::size_t max_points = 10000;

  std::string label() const;
  // Throws ParameterError on any invariant violation.
  void validate() const;
};

// FAST segment test on the 16-pixel Bresenham circle of radius 3.
// Keypoints are integer pixel positions; response is the excess contrast
// summed over the qualifying arc.
KeypointSet detect_fast(const ImageGray& img, const FastParams& params = {});

// Per-pixel FAST score before non-maximum suppression; zero for non-corners
// and inside the 3 px border.
ResponseMap fast_response(const ImageGray& img, const FastParams& params);

// The 16 circle offsets in clockwise order starting at 12 o'clock.
extern const std::array<std::array<int, 2>, 16> kFastCircle;

KeypointSet detect_harris(const ImageGray& img, const HarrisParams& params = {});

// det(M) - k trace(M)^2 of the smoothed structure tensor.
ResponseMap harris_response(const ImageGray& img, const HarrisParams& params);

int harris_border(const HarrisParams& params);

// Difference-of-Gaussians scale space. Level i of an octave holds the blur at
// sigma = base_sigma * 2^(i / scales_per_octave) in that octave's pixels;
// dog[i] = gauss[i + 1] - gauss[i].
struct DogOctave {
  std::vector<ResponseMap> gauss;
  std::vector<ResponseMap> dog;
};

struct DogPyramid {
  static constexpr double kBaseSigma = 1.6;
  int scales_per_octave = 3;
  std::vector<DogOctave> octaves;

  // Absolute scale (base-image pixels) of DoG level `level` in `octave`.
  double sigma(int octave, double level) const;
};

DogPyramid build_dog_pyramid(const ImageGray& img, int octaves,
                             int scales_per_octave);

struct ScaleSpaceExtremum {
  int octave = 0;
  int level = 0;  // DoG level, 1..scales_per_octave
  int x = 0;
  int y = 0;
  double value = 0.0;

  friend bool operator==(const ScaleSpaceExtremum&,
                         const ScaleSpaceExtremum&) = default;
};

// Strict 26-neighbour maxima and minima, 1 px border per level, before any
// contrast/edge filtering or refinement. Ordered by (octave, level, y, x).
std::vector<ScaleSpaceExtremum> find_scale_space_extrema(const DogPyramid& pyr);

KeypointSet detect_dog(const ImageGray& img, const DogParams& params = {});

// Runs the configured detector, then keeps the cfg.max_points strongest.
KeypointSet detect(const ImageGray& img, const DetectorConfig& cfg);

}  // namespace keyrep
