#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "keyrep/config.h"
#include "keyrep/dataset_io.h"
#include "keyrep/detectors.h"
#include "keyrep/matching.h"
#include "keyrep/semantics.h"
#include "keyrep/synthetic.h"

namespace keyrep {

struct ProtocolConfig {
  int base_stride = 20;
  int window = 19;  // subsequent frames paired with each base
  std::vector<DetectorConfig> detectors;
  EvalParams eval;
  double distance_bucket = 1.0;  // meters
  int workers = 1;
  // Also pairs each base frame with itself (k = 0). Diagnostic only.
  bool self_pairs = false;

  void validate() const;
};

// Reads protocol.*, eval.*, detectors, detector.*, fast.*, harris.* and
// dog.* keys. Unknown keys are a ConfigError.
ProtocolConfig protocol_from_config(const KeyValueConfig& cfg);

// Ordered frames plus whatever ground truth the source can supply.
class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual std::size_t size() const = 0;
  virtual FrameBundle load(std::size_t index) const = 0;
  // Exact homography between two frames, for homography-mode evaluation.
  virtual std::optional<Homography> homography(std::size_t i, std::size_t j) const;
  virtual std::string description() const = 0;
};

class ManifestSource final : public FrameSource {
 public:
  explicit ManifestSource(DatasetManifest manifest) : manifest_(std::move(manifest)) {}
  std::size_t size() const override { return manifest_.size(); }
  FrameBundle load(std::size_t index) const override { return manifest_.load_frame(index); }
  std::string description() const override;

 private:
  DatasetManifest manifest_;
};

// Renders frames on demand; planar scenes also provide homographies.
class SceneSource final : public FrameSource {
 public:
  explicit SceneSource(SceneSpec spec);
  std::size_t size() const override { return spec_.trajectory.size(); }
  FrameBundle load(std::size_t index) const override { return render(spec_, index); }
  std::optional<Homography> homography(std::size_t i, std::size_t j) const override;
  std::string description() const override;

 private:
  SceneSpec spec_;
};

struct PairRecord {
  std::size_t base = 0;
  std::size_t other = 0;
  std::string base_id;
  std::string other_id;
  std::size_t n_d1 = 0;
  std::size_t n_d2 = 0;
  std::size_t n_matches = 0;
  std::optional<double> repeatability;
  double camera_distance = 0.0;
};

struct CurvePoint {
  long bucket = 0;
  double distance_m = 0.0;  // bucket * distance_bucket
  double mean_repeatability = 0.0;
  std::size_t pairs = 0;  // pairs with defined repeatability
};

struct DetectorReport {
  DetectorConfig config;
  std::vector<PairRecord> pairs;  // every evaluated pair, in (base, other) order
  std::vector<CurvePoint> curve;  // ascending bucket
  double mean_repeatability = 0.0;
  std::size_t defined_pairs = 0;
  ClassReport classes;  // pairs whose base frame is labelled
};

struct SequenceReport {
  ProtocolConfig config;
  std::string source;
  std::size_t frames = 0;
  std::vector<std::size_t> base_frames;
  std::vector<std::string> base_ids;
  // Sorted by mean repeatability, best first; ties keep config order.
  std::vector<DetectorReport> detectors;
};

// Base frames are every base_stride-th frame that has at least one
// subsequent frame. Throws RunError when nothing can be evaluated.
std::vector<std::size_t> base_frames(std::size_t frames, const ProtocolConfig& cfg);

SequenceReport run_sequence(const FrameSource& source, const ProtocolConfig& cfg);
SequenceReport run_sequence(const DatasetManifest& manifest, const ProtocolConfig& cfg);

// Curve from pair records: mean of defined repeatability per rounded
// distance bucket.
std::vector<CurvePoint> bucket_curve(const std::vector<PairRecord>& pairs, double bucket);

// 6 significant digits, '.' decimal point, independent of locale.
std::string format_number(double value);

std::string curve_csv(const DetectorReport& det);
std::string summary_csv(const SequenceReport& report);
std::string per_class_csv(const DetectorReport& det);
std::string run_json(const SequenceReport& report);

// Writes curve_<detector>.csv, per_class_<detector>.csv, summary.csv and
// run.json. Returns the paths written.
std::vector<std::filesystem::path> emit_reports(const SequenceReport& report,
                                                const std::filesystem::path& out_dir);

}  // namespace keyrep
