#include "keyrep/image.h"

#include <algorithm>
#include <cmath>
#include <string>

#include "keyrep/error.h"

namespace keyrep {

template <typename T>
Raster<T>::Raster(int width, int height, T fill) {
  if (width <= 0 || height <= 0) {
    throw ParameterError("raster dimensions must be positive");
  }
  width_ = width;
  height_ = height;
  data_.assign(static_cast<std::size_t>(width) * height, fill);
}

template <typename T>
Raster<T>::Raster(int width, int height, std::vector<T> data) {
  if (width <= 0 || height <= 0) {
    throw ParameterError("raster dimensions must be positive");
  }
  if (data.size() != static_cast<std::size_t>(width) * height) {
    throw ParameterError("raster data length " + std::to_string(data.size()) +
                         " does not match " + std::to_string(width) + "x" +
                         std::to_string(height));
  }
  width_ = width;
  height_ = height;
  data_ = std::move(data);
}

template <typename T>
T Raster<T>::clamped(int x, int y) const noexcept {
  x = std::clamp(x, 0, width_ - 1);
  y = std::clamp(y, 0, height_ - 1);
  return (*this)(x, y);
}

template class Raster<int>;
template class Raster<float>;
template class Raster<double>;

namespace {

void check_intensities(std::span<const float> data) {
  for (float v : data) {
    if (!std::isfinite(v) || v < 0.0f || v > 1.0f) {
      throw ParameterError("image intensities must be finite and in [0,1]");
    }
  }
}

// Blurs rows then columns with a clamped border. Works in double regardless
// of the storage type.
template <typename T>
std::vector<double> blur_separable(const Raster<T>& src,
                                   std::span<const double> kernel) {
  const int w = src.width();
  const int h = src.height();
  const int radius = static_cast<int>(kernel.size() / 2);
  std::vector<double> tmp(static_cast<std::size_t>(w) * h);
  std::vector<double> out(tmp.size());

  std::vector<double> line(static_cast<std::size_t>(w + 2 * radius));
  for (int y = 0; y < h; ++y) {
    auto row = src.row(y);
    for (int i = -radius; i < w + radius; ++i) {
      line[i + radius] = row[std::clamp(i, 0, w - 1)];
    }
    double* dst = tmp.data() + static_cast<std::size_t>(y) * w;
    for (int x = 0; x < w; ++x) {
      double acc = 0.0;
      const double* base = line.data() + x;
      for (std::size_t k = 0; k < kernel.size(); ++k) acc += kernel[k] * base[k];
      dst[x] = acc;
    }
  }

  // Column pass accumulates whole rows at a time for cache friendliness.
  std::vector<double> acc(w);
  for (int y = 0; y < h; ++y) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int k = -radius; k <= radius; ++k) {
      const int yy = std::clamp(y + k, 0, h - 1);
      const double wgt = kernel[k + radius];
      const double* srow = tmp.data() + static_cast<std::size_t>(yy) * w;
      for (int x = 0; x < w; ++x) acc[x] += wgt * srow[x];
    }
    std::copy(acc.begin(), acc.end(),
              out.begin() + static_cast<std::ptrdiff_t>(y) * w);
  }
  return out;
}

template <typename T>
Gradients gradients_impl(const Raster<T>& img) {
  const int w = img.width();
  const int h = img.height();
  if (w < 3 || h < 3) {
    throw ParameterError("gradients require an image of at least 3x3");
  }
  Gradients g{ResponseMap(w, h), ResponseMap(w, h)};
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double dx;
      if (x == 0) {
        dx = double(img(1, y)) - double(img(0, y));
      } else if (x == w - 1) {
        dx = double(img(w - 1, y)) - double(img(w - 2, y));
      } else {
        dx = 0.5 * (double(img(x + 1, y)) - double(img(x - 1, y)));
      }
      double dy;
      if (y == 0) {
        dy = double(img(x, 1)) - double(img(x, 0));
      } else if (y == h - 1) {
        dy = double(img(x, h - 1)) - double(img(x, h - 2));
      } else {
        dy = 0.5 * (double(img(x, y + 1)) - double(img(x, y - 1)));
      }
      g.gx(x, y) = dx;
      g.gy(x, y) = dy;
    }
  }
  return g;
}

bool stronger(const Keypoint& a, const Keypoint& b) {
  if (a.response != b.response) return a.response > b.response;
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}

}  // namespace

ImageGray::ImageGray(int width, int height, float fill)
    : pixels_(width, height, fill) {
  check_intensities(pixels_.data());
}

ImageGray::ImageGray(int width, int height, std::vector<float> data)
    : pixels_(width, height, std::move(data)) {
  check_intensities(pixels_.data());
}

ResponseMap to_response_map(const ImageGray& img) {
  auto src = img.data();
  return ResponseMap(img.width(), img.height(),
                     std::vector<double>(src.begin(), src.end()));
}

std::vector<double> gaussian_kernel(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw ParameterError("gaussian sigma must be positive, got " +
                         std::to_string(sigma));
  }
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (double& v : k) v /= sum;
  return k;
}

ImageGray gaussian_blur(const ImageGray& img, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  const auto blurred = blur_separable(img.raster(), kernel);
  std::vector<float> out(blurred.size());
  std::transform(blurred.begin(), blurred.end(), out.begin(), [](double v) {
    return static_cast<float>(std::clamp(v, 0.0, 1.0));
  });
  return ImageGray(img.width(), img.height(), std::move(out));
}

ResponseMap gaussian_blur(const ResponseMap& map, double sigma) {
  const auto kernel = gaussian_kernel(sigma);
  return ResponseMap(map.width(), map.height(), blur_separable(map, kernel));
}

Gradients gradients(const ImageGray& img) { return gradients_impl(img.raster()); }

Gradients gradients(const ResponseMap& map) { return gradients_impl(map); }

std::vector<Peak> nms_2d(const ResponseMap& resp, int radius, double threshold) {
  if (radius < 1) throw ParameterError("nms radius must be >= 1");
  std::vector<Peak> peaks;
  const int w = resp.width();
  const int h = resp.height();
  for (int y = radius; y < h - radius; ++y) {
    for (int x = radius; x < w - radius; ++x) {
      const double v = resp(x, y);
      if (!(v >= threshold)) continue;
      // Cheap rejection against the 8-neighbourhood before the full window.
      bool is_max = v > resp(x - 1, y - 1) && v > resp(x, y - 1) &&
                    v > resp(x + 1, y - 1) && v > resp(x - 1, y) &&
                    v > resp(x + 1, y) && v > resp(x - 1, y + 1) &&
                    v > resp(x, y + 1) && v > resp(x + 1, y + 1);
      for (int dy = -radius; is_max && dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (std::max(std::abs(dx), std::abs(dy)) <= 1) continue;
          if (!(v > resp(x + dx, y + dy))) {
            is_max = false;
            break;
          }
        }
      }
      if (is_max) peaks.push_back({x, y, v});
    }
  }
  return peaks;
}

KeypointSet select_top_n(const KeypointSet& kps, std::size_t n) {
  KeypointSet out;
  out.width = kps.width;
  out.height = kps.height;
  out.points = kps.points;
  if (n < out.points.size()) {
    std::nth_element(out.points.begin(),
                     out.points.begin() + static_cast<std::ptrdiff_t>(n),
                     out.points.end(), stronger);
    out.points.resize(n);
  }
  std::sort(out.points.begin(), out.points.end(), stronger);
  return out;
}

}  // namespace keyrep
