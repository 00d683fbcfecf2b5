#include <algorithm>
#include <cmath>

#include "keyrep/detectors.h"
#include "keyrep/error.h"

namespace keyrep {
namespace {

void check_params(const HarrisParams& p) {
  if (!(p.sigma_i > 0.0 && p.sigma_d > 0.0)) {
    throw ParameterError("Harris sigmas must be positive");
  }
  if (!(p.k > 0.0 && p.k < 0.25)) {
    throw ParameterError("Harris k must lie in (0,0.25)");
  }
  if (!(p.threshold > 0.0)) {
    throw ParameterError("Harris threshold must be positive");
  }
}

struct Offset {
  double dx = 0.0;
  double dy = 0.0;
};

// Stationary point of the quadratic fitted to the 3x3 neighbourhood,
// clamped to half a pixel per axis.
Offset quadratic_offset(const ResponseMap& r, int x, int y) {
  const double c = r(x, y);
  const double gx = 0.5 * (r(x + 1, y) - r(x - 1, y));
  const double gy = 0.5 * (r(x, y + 1) - r(x, y - 1));
  const double hxx = r(x + 1, y) - 2.0 * c + r(x - 1, y);
  const double hyy = r(x, y + 1) - 2.0 * c + r(x, y - 1);
  const double hxy = 0.25 * (r(x + 1, y + 1) - r(x + 1, y - 1) -
                             r(x - 1, y + 1) + r(x - 1, y - 1));
  const double det = hxx * hyy - hxy * hxy;
  if (!(std::abs(det) > 1e-300)) return {};
  Offset o;
  o.dx = -(hyy * gx - hxy * gy) / det;
  o.dy = -(hxx * gy - hxy * gx) / det;
  if (!std::isfinite(o.dx) || !std::isfinite(o.dy)) return {};
  o.dx = std::clamp(o.dx, -0.5, 0.5);
  o.dy = std::clamp(o.dy, -0.5, 0.5);
  return o;
}

}  // namespace

int harris_border(const HarrisParams& params) {
  return static_cast<int>(std::ceil(3.0 * params.sigma_i)) + 1;
}

ResponseMap harris_response(const ImageGray& img, const HarrisParams& params) {
  check_params(params);
  const ResponseMap smooth = gaussian_blur(to_response_map(img), params.sigma_d);
  const Gradients g = gradients(smooth);

  const int w = img.width();
  const int h = img.height();
  ResponseMap ixx(w, h), iyy(w, h), ixy(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double dx = g.gx(x, y);
      const double dy = g.gy(x, y);
      ixx(x, y) = dx * dx;
      iyy(x, y) = dy * dy;
      ixy(x, y) = dx * dy;
    }
  }
  ixx = gaussian_blur(ixx, params.sigma_i);
  iyy = gaussian_blur(iyy, params.sigma_i);
  ixy = gaussian_blur(ixy, params.sigma_i);

  ResponseMap r(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double a = ixx(x, y);
      const double b = iyy(x, y);
      const double c = ixy(x, y);
      const double tr = a + b;
      r(x, y) = (a * b - c * c) - params.k * tr * tr;
    }
  }
  return r;
}

KeypointSet detect_harris(const ImageGray& img, const HarrisParams& params) {
  check_params(params);
  const int border = harris_border(params);
  KeypointSet out;
  out.width = img.width();
  out.height = img.height();
  if (img.width() < 3 || img.height() < 3) {
    throw ParameterError("Harris needs an image of at least 3x3");
  }
  if (img.width() <= 2 * border || img.height() <= 2 * border) return out;

  const ResponseMap r = harris_response(img, params);
  for (const Peak& p : nms_2d(r, 2, params.threshold)) {
    if (p.x < border || p.y < border || p.x > img.width() - 1 - border ||
        p.y > img.height() - 1 - border) {
      continue;
    }
    const Offset o = quadratic_offset(r, p.x, p.y);
    out.points.push_back({p.x + o.dx, p.y + o.dy, p.response, std::nullopt});
  }
  return out;
}

}  // namespace keyrep
