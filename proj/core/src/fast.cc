#include <cmath>
#include <limits>

#include "keyrep/detectors.h"
#include "keyrep/error.h"

namespace keyrep {

const std::array<std::array<int, 2>, 16> kFastCircle = {{
    {0, -3}, {1, -3}, {2, -2}, {3, -1}, {3, 0}, {3, 1}, {2, 2}, {1, 3},
    {0, 3}, {-1, 3}, {-2, 2}, {-3, 1}, {-3, 0}, {-3, -1}, {-2, -2}, {-1, -3},
}};

namespace {

constexpr int kBorder = 3;

void check_params(const ImageGray& img, const FastParams& p) {
  if (img.width() < 7 || img.height() < 7) {
    throw ParameterError("FAST needs an image of at least 7x7");
  }
  if (!(p.threshold > 0.0 && p.threshold < 1.0)) {
    throw ParameterError("FAST threshold must lie in (0,1)");
  }
  if (p.arc < 9 || p.arc > 16) {
    throw ParameterError("FAST arc length must lie in [9,16]");
  }
}

// Score of the longest circular run of pixels sharing `sign`, or 0 when that
// run is shorter than `arc`. At most one qualifying run can exist for
// arc >= 9.
double run_score(const std::array<int, 16>& sign, const std::array<double, 16>& excess,
                 int want, int arc) {
  int start = -1;
  for (int i = 0; i < 16; ++i) {
    if (sign[i] != want) {
      start = i;
      break;
    }
  }
  if (start < 0) {
    double sum = 0.0;
    for (double e : excess) sum += e;
    return sum;
  }
  // Walk once around the circle beginning just after a non-member so that no
  // run wraps past the starting point.
  int len = 0;
  double sum = 0.0;
  for (int n = 1; n <= 16; ++n) {
    const int i = (start + n) % 16;
    if (sign[i] == want) {
      ++len;
      sum += excess[i];
    } else {
      if (len >= arc) return sum;
      len = 0;
      sum = 0.0;
    }
  }
  return len >= arc ? sum : 0.0;
}

}  // namespace

ResponseMap fast_response(const ImageGray& img, const FastParams& params) {
  check_params(img, params);
  const int w = img.width();
  const int h = img.height();
  const double t = params.threshold;
  ResponseMap score(w, h, 0.0);

  std::array<int, 16> sign{};
  std::array<double, 16> excess{};
  for (int y = kBorder; y < h - kBorder; ++y) {
    for (int x = kBorder; x < w - kBorder; ++x) {
      const double c = img(x, y);
      const double hi = c + t;
      const double lo = c - t;

      // Any run of >= 9 covers two adjacent compass points.
      int n_hi = 0, n_lo = 0;
      for (int q = 0; q < 16; q += 4) {
        const double v = img(x + kFastCircle[q][0], y + kFastCircle[q][1]);
        n_hi += v > hi;
        n_lo += v < lo;
      }
      if (n_hi < 2 && n_lo < 2) continue;

      for (int i = 0; i < 16; ++i) {
        const double v = img(x + kFastCircle[i][0], y + kFastCircle[i][1]);
        sign[i] = v > hi ? 1 : (v < lo ? -1 : 0);
        excess[i] = std::abs(v - c) - t;
      }
      double s = 0.0;
      if (n_hi >= 2) s = run_score(sign, excess, 1, params.arc);
      if (s == 0.0 && n_lo >= 2) s = run_score(sign, excess, -1, params.arc);
      score(x, y) = s;
    }
  }
  return score;
}

KeypointSet detect_fast(const ImageGray& img, const FastParams& params) {
  const ResponseMap score = fast_response(img, params);
  KeypointSet out;
  out.width = img.width();
  out.height = img.height();
  for (const Peak& p :
       nms_2d(score, 1, std::numeric_limits<double>::denorm_min())) {
    out.points.push_back({double(p.x), double(p.y), p.response, std::nullopt});
  }
  return out;
}

}  // namespace keyrep
