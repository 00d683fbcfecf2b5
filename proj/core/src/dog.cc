#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "keyrep/detectors.h"
#include "keyrep/error.h"

namespace keyrep {
namespace {

constexpr int kMinTopOctaveSize = 16;

ResponseMap downsample(const ResponseMap& src) {
  const int w = (src.width() + 1) / 2;
  const int h = (src.height() + 1) / 2;
  ResponseMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out(x, y) = src(2 * x, 2 * y);
  }
  return out;
}

ResponseMap subtract(const ResponseMap& a, const ResponseMap& b) {
  ResponseMap out(a.width(), a.height());
  auto pa = a.data();
  auto pb = b.data();
  auto po = out.data();
  for (std::size_t i = 0; i < po.size(); ++i) po[i] = pa[i] - pb[i];
  return out;
}

bool is_extremum(const std::vector<ResponseMap>& dog, int level, int x, int y) {
  const double v = dog[level](x, y);
  const ResponseMap& mid = dog[level];
  // Same-level ring first; it rejects most pixels.
  const bool maybe_max = v > mid(x - 1, y) && v > mid(x + 1, y);
  const bool maybe_min = v < mid(x - 1, y) && v < mid(x + 1, y);
  if (!maybe_max && !maybe_min) return false;
  for (int l = level - 1; l <= level + 1; ++l) {
    const ResponseMap& m = dog[l];
    for (int dy = -1; dy <= 1; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (l == level && dx == 0 && dy == 0) continue;
        const double n = m(x + dx, y + dy);
        if (maybe_max ? !(v > n) : !(v < n)) return false;
      }
    }
  }
  return true;
}

}  // namespace

double DogPyramid::sigma(int octave, double level) const {
  return kBaseSigma * std::exp2(octave + level / scales_per_octave);
}

DogPyramid build_dog_pyramid(const ImageGray& img, int octaves,
                             int scales_per_octave) {
  if (octaves < 1) throw ParameterError("DoG needs at least one octave");
  if (scales_per_octave < 1) {
    throw ParameterError("DoG needs at least one scale per octave");
  }
  int w = img.width();
  int h = img.height();
  for (int o = 1; o < octaves; ++o) {
    w = (w + 1) / 2;
    h = (h + 1) / 2;
  }
  if (std::min(w, h) < kMinTopOctaveSize) {
    throw ParameterError("image too small for " + std::to_string(octaves) +
                         " DoG octaves (top octave " + std::to_string(w) + "x" +
                         std::to_string(h) + ")");
  }

  DogPyramid pyr;
  pyr.scales_per_octave = scales_per_octave;
  const int levels = scales_per_octave + 3;
  const double step = std::exp2(1.0 / scales_per_octave);

  ResponseMap base = gaussian_blur(to_response_map(img), DogPyramid::kBaseSigma);
  for (int o = 0; o < octaves; ++o) {
    DogOctave oct;
    oct.gauss.reserve(levels);
    oct.gauss.push_back(std::move(base));
    double prev = DogPyramid::kBaseSigma;
    for (int i = 1; i < levels; ++i) {
      const double next = prev * step;
      oct.gauss.push_back(gaussian_blur(oct.gauss.back(),
                                        std::sqrt(next * next - prev * prev)));
      prev = next;
    }
    for (int i = 0; i + 1 < levels; ++i) {
      oct.dog.push_back(subtract(oct.gauss[i + 1], oct.gauss[i]));
    }
    // gauss[s] has twice the base blur, so it seeds the next octave.
    if (o + 1 < octaves) base = downsample(oct.gauss[scales_per_octave]);
    pyr.octaves.push_back(std::move(oct));
  }
  return pyr;
}

std::vector<ScaleSpaceExtremum> find_scale_space_extrema(const DogPyramid& pyr) {
  std::vector<ScaleSpaceExtremum> out;
  for (int o = 0; o < static_cast<int>(pyr.octaves.size()); ++o) {
    const auto& dog = pyr.octaves[o].dog;
    for (int l = 1; l + 1 < static_cast<int>(dog.size()); ++l) {
      const int w = dog[l].width();
      const int h = dog[l].height();
      for (int y = 1; y < h - 1; ++y) {
        for (int x = 1; x < w - 1; ++x) {
          if (is_extremum(dog, l, x, y)) out.push_back({o, l, x, y, dog[l](x, y)});
        }
      }
    }
  }
  return out;
}

KeypointSet detect_dog(const ImageGray& img, const DogParams& params) {
  if (!(params.contrast_threshold > 0.0)) {
    throw ParameterError("DoG contrast threshold must be positive");
  }
  if (!(params.edge_ratio > 0.0)) {
    throw ParameterError("DoG edge ratio must be positive");
  }
  const DogPyramid pyr =
      build_dog_pyramid(img, params.octaves, params.scales_per_octave);
  const double r = params.edge_ratio;
  const double edge_limit = (r + 1.0) * (r + 1.0) / r;

  KeypointSet out;
  out.width = img.width();
  out.height = img.height();
  for (const ScaleSpaceExtremum& e : find_scale_space_extrema(pyr)) {
    if (std::abs(e.value) < params.contrast_threshold) continue;
    const auto& dog = pyr.octaves[e.octave].dog;
    const ResponseMap& d = dog[e.level];
    const ResponseMap& below = dog[e.level - 1];
    const ResponseMap& above = dog[e.level + 1];
    const int x = e.x;
    const int y = e.y;
    const double c = d(x, y);

    const double dxx = d(x + 1, y) - 2.0 * c + d(x - 1, y);
    const double dyy = d(x, y + 1) - 2.0 * c + d(x, y - 1);
    const double dxy =
        0.25 * (d(x + 1, y + 1) - d(x + 1, y - 1) - d(x - 1, y + 1) + d(x - 1, y - 1));
    const double tr = dxx + dyy;
    const double det = dxx * dyy - dxy * dxy;
    if (!(det > 0.0) || tr * tr / det > edge_limit) continue;

    Eigen::Vector3d grad(0.5 * (d(x + 1, y) - d(x - 1, y)),
                         0.5 * (d(x, y + 1) - d(x, y - 1)),
                         0.5 * (above(x, y) - below(x, y)));
    const double dss = above(x, y) - 2.0 * c + below(x, y);
    const double dxs = 0.25 * (above(x + 1, y) - above(x - 1, y) -
                               below(x + 1, y) + below(x - 1, y));
    const double dys = 0.25 * (above(x, y + 1) - above(x, y - 1) -
                               below(x, y + 1) + below(x, y - 1));
    Eigen::Matrix3d hess;
    hess << dxx, dxy, dxs, dxy, dyy, dys, dxs, dys, dss;
    Eigen::Vector3d offset = Eigen::Vector3d::Zero();
    if (std::abs(hess.determinant()) > 1e-300) {
      offset = -hess.fullPivLu().solve(grad);
      if (!offset.allFinite()) offset.setZero();
    }
    offset = offset.cwiseMax(-0.5).cwiseMin(0.5);

    const double scale = std::exp2(e.octave);
    Keypoint kp;
    kp.x = (x + offset.x()) * scale;
    kp.y = (y + offset.y()) * scale;
    kp.response = std::abs(c);
    kp.scale = pyr.sigma(e.octave, e.level + offset.z());
    if (kp.x < 0.0 || kp.y < 0.0 || kp.x > img.width() - 1 ||
        kp.y > img.height() - 1) {
      continue;
    }
    out.points.push_back(kp);
  }
  return out;
}

}  // namespace keyrep
