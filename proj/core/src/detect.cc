#include <string>

#include "keyrep/detectors.h"
#include "keyrep/error.h"

namespace keyrep {

std::string_view to_string(DetectorKind kind) {
  switch (kind) {
    case DetectorKind::kFast:
      return "fast";
    case DetectorKind::kHarris:
      return "harris";
    case DetectorKind::kDog:
      return "dog";
  }
  return "unknown";
}

DetectorKind parse_detector_kind(std::string_view name) {
  if (name == "fast") return DetectorKind::kFast;
  if (name == "harris") return DetectorKind::kHarris;
  if (name == "dog") return DetectorKind::kDog;
  throw ParameterError("unknown detector '" + std::string(name) + "'");
}

std::string DetectorConfig::label() const {
  return name.empty() ? std::string(to_string(kind)) : name;
}

void DetectorConfig::validate() const {
  if (max_points < 1) throw ParameterError("max_points must be >= 1");
  switch (kind) {
    case DetectorKind::kFast:
      if (!(fast.threshold > 0.0 && fast.threshold < 1.0)) {
        throw ParameterError("fast.threshold must lie in (0,1)");
      }
      if (fast.arc < 9 || fast.arc > 16) {
        throw ParameterError("fast.arc must lie in [9,16]");
      }
      break;
    case DetectorKind::kHarris:
      if (!(harris.sigma_i > 0.0 && harris.sigma_d > 0.0)) {
        throw ParameterError("harris sigmas must be positive");
      }
      if (!(harris.k > 0.0 && harris.k < 0.25)) {
        throw ParameterError("harris.k must lie in (0,0.25)");
      }
      if (!(harris.threshold > 0.0)) {
        throw ParameterError("harris.threshold must be positive");
      }
      break;
    case DetectorKind::kDog:
      if (dog.octaves < 1 || dog.scales_per_octave < 1) {
        throw ParameterError("dog octaves and scales must be >= 1");
      }
      if (!(dog.contrast_threshold > 0.0 && dog.edge_ratio > 0.0)) {
        throw ParameterError("dog thresholds must be positive");
      }
      break;
  }
}

KeypointSet detect(const ImageGray& img, const DetectorConfig& cfg) {
  cfg.validate();
  KeypointSet raw;
  switch (cfg.kind) {
    case DetectorKind::kFast:
      raw = detect_fast(img, cfg.fast);
      break;
    case DetectorKind::kHarris:
      raw = detect_harris(img, cfg.harris);
      break;
    case DetectorKind::kDog:
      raw = detect_dog(img, cfg.dog);
      break;
  }
  return select_top_n(raw, cfg.max_points);
}

}  // namespace keyrep
