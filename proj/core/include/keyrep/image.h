#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "keyrep/keypoint.h"

namespace keyrep {

struct ImageSize {
  int width = 0;
  int height = 0;

  bool contains(double x, double y) const noexcept {
    return x >= 0.0 && y >= 0.0 && x <= width - 1 && y <= height - 1;
  }
  friend bool operator==(const ImageSize&, const ImageSize&) = default;
};

// Dense row-major single-channel raster.
template <typename T>
class Raster {
 public:
  using value_type = T;

  Raster() = default;
  Raster(int width, int height, T fill = T{});
  Raster(int width, int height, std::vector<T> data);

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  ImageSize size() const noexcept { return {width_, height_}; }
  bool empty() const noexcept { return data_.empty(); }

  T operator()(int x, int y) const noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  T& operator()(int x, int y) noexcept {
    return data_[static_cast<std::size_t>(y) * width_ + x];
  }
  T clamped(int x, int y) const noexcept;

  std::span<const T> data() const noexcept { return data_; }
  std::span<T> data() noexcept { return data_; }
  std::span<const T> row(int y) const noexcept {
    return std::span<const T>(data_).subspan(
        static_cast<std::size_t>(y) * width_, width_);
  }

  friend bool operator==(const Raster&, const Raster&) = default;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<T> data_;
};

extern template class Raster<int>;
extern template class Raster<float>;
extern template class Raster<double>;

// Grayscale intensities in [0,1] stored as 32-bit floats. The constructor
// rejects non-finite or out-of-range samples.
class ImageGray {
 public:
  ImageGray() = default;
  ImageGray(int width, int height, float fill = 0.0f);
  ImageGray(int width, int height, std::vector<float> data);

  int width() const noexcept { return pixels_.width(); }
  int height() const noexcept { return pixels_.height(); }
  ImageSize size() const noexcept { return pixels_.size(); }
  bool empty() const noexcept { return pixels_.empty(); }

  float operator()(int x, int y) const noexcept { return pixels_(x, y); }
  float clamped(int x, int y) const noexcept { return pixels_.clamped(x, y); }
  std::span<const float> data() const noexcept { return pixels_.data(); }
  const Raster<float>& raster() const noexcept { return pixels_; }

  friend bool operator==(const ImageGray&, const ImageGray&) = default;

 private:
  Raster<float> pixels_;
};

// Detector response, same shape as the source image. Double precision so
// that cascaded filtering (structure tensor, DoG stacks) does not accumulate
// single-precision rounding.
using ResponseMap = Raster<double>;

ResponseMap to_response_map(const ImageGray& img);

// Separable Gaussian blur, kernel radius ceil(3*sigma), edge-clamp borders.
ImageGray gaussian_blur(const ImageGray& img, double sigma);
ResponseMap gaussian_blur(const ResponseMap& map, double sigma);

// Normalized 1D kernel of length 2*ceil(3*sigma)+1.
std::vector<double> gaussian_kernel(double sigma);

struct Gradients {
  ResponseMap gx;  // d/dx, along columns
  ResponseMap gy;  // d/dy, along rows
};

// Central differences on the interior, one-sided differences on the border.
Gradients gradients(const ImageGray& img);
Gradients gradients(const ResponseMap& map);

struct Peak {
  int x = 0;
  int y = 0;
  double response = 0.0;

  friend bool operator==(const Peak&, const Peak&) = default;
};

// Strict local maxima within a Chebyshev window of the given radius, with
// response >= threshold. Pixels closer than `radius` to the border are never
// reported. Output is in row-major order.
std::vector<Peak> nms_2d(const ResponseMap& resp, int radius, double threshold);

// Keeps the n strongest keypoints, ordered by descending response then
// ascending (y, x).
KeypointSet select_top_n(const KeypointSet& kps, std::size_t n);

}  // namespace keyrep
