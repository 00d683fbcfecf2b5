#include "keyrep/protocol.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "keyrep/error.h"

namespace keyrep {
namespace fs = std::filesystem;

void ProtocolConfig::validate() const {
  if (base_stride < 1) throw ConfigError("protocol.base_stride must be >= 1");
  if (window < 1) throw ConfigError("protocol.window must be >= 1");
  if (!(distance_bucket > 0.0)) throw ConfigError("protocol.distance_bucket must be > 0");
  if (workers < 1) throw ConfigError("protocol.workers must be >= 1");
  if (detectors.empty()) throw ConfigError("no detectors configured");
  std::vector<std::string> labels;
  for (const DetectorConfig& d : detectors) {
    try {
      d.validate();
    } catch (const ParameterError& e) {
      throw ConfigError(d.label() + ": " + e.what());
    }
    labels.push_back(d.label());
  }
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) {
    throw ConfigError("detector labels must be unique");
  }
  try {
    eval.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
}

ProtocolConfig protocol_from_config(const KeyValueConfig& cfg) {
  ProtocolConfig p;
  try {
    p.base_stride = static_cast<int>(cfg.get_int("protocol.base_stride", p.base_stride));
    p.window = static_cast<int>(cfg.get_int("protocol.window", p.window));
    p.distance_bucket = cfg.get_double("protocol.distance_bucket", p.distance_bucket);
    p.workers = static_cast<int>(cfg.get_int("protocol.workers", p.workers));
    p.self_pairs = cfg.get_bool("protocol.self_pairs", p.self_pairs);

    p.eval.theta = cfg.get_double("eval.theta", p.eval.theta);
    p.eval.occlusion_tolerance =
        cfg.get_double("eval.occlusion_tolerance", p.eval.occlusion_tolerance);
    p.eval.mode = parse_correspondence_mode(
        cfg.get_string("eval.mode", std::string(to_string(p.eval.mode))));

    DetectorConfig base;
    base.max_points =
        static_cast<std::size_t>(cfg.get_int("detector.max_points", 10000));
    base.fast.threshold = cfg.get_double("fast.threshold", base.fast.threshold);
    base.fast.arc = static_cast<int>(cfg.get_int("fast.arc", base.fast.arc));
    base.harris.sigma_i = cfg.get_double("harris.sigma_i", base.harris.sigma_i);
    base.harris.sigma_d = cfg.get_double("harris.sigma_d", base.harris.sigma_d);
    base.harris.k = cfg.get_double("harris.k", base.harris.k);
    base.harris.threshold = cfg.get_double("harris.threshold", base.harris.threshold);
    base.dog.octaves = static_cast<int>(cfg.get_int("dog.octaves", base.dog.octaves));
    base.dog.scales_per_octave =
        static_cast<int>(cfg.get_int("dog.scales_per_octave", base.dog.scales_per_octave));
    base.dog.contrast_threshold =
        cfg.get_double("dog.contrast_threshold", base.dog.contrast_threshold);
    base.dog.edge_ratio = cfg.get_double("dog.edge_ratio", base.dog.edge_ratio);

    for (const std::string& name : cfg.get_list("detectors", {"fast", "harris", "dog"})) {
      DetectorConfig d = base;
      d.kind = parse_detector_kind(name);
      p.detectors.push_back(d);
    }
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  const auto unused = cfg.unused_keys();
  if (!unused.empty()) throw ConfigError("unknown config key '" + unused.front() + "'");
  p.validate();
  return p;
}

std::optional<Homography> FrameSource::homography(std::size_t, std::size_t) const {
  return std::nullopt;
}

std::string ManifestSource::description() const {
  return "manifest:" + manifest_.root.generic_string();
}

SceneSource::SceneSource(SceneSpec spec) : spec_(std::move(spec)) { spec_.validate(); }

std::optional<Homography> SceneSource::homography(std::size_t i, std::size_t j) const {
  if (spec_.kind != SceneKind::kPlane) return std::nullopt;
  return ground_truth_homography(spec_, i, j);
}

std::string SceneSource::description() const {
  return "synthetic:" + std::string(to_string(spec_.kind));
}

namespace {

// Runs fn(0..n-1) on up to `workers` threads. Each index writes only its own
// slot, so the result never depends on scheduling. The exception of the
// lowest failing index is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, int workers, Fn&& fn) {
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto body = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t threads = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  if (threads <= 1) {
    body();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(body);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

struct PairJob {
  std::size_t detector = 0;
  std::size_t base_slot = 0;
  std::size_t other_slot = 0;
};

struct PairOutcome {
  PairRecord record;
  std::optional<ClassReport> classes;
};

}  // namespace

std::vector<std::size_t> base_frames(std::size_t frames, const ProtocolConfig& cfg) {
  if (frames == 0) throw RunError("the sequence has no frames");
  if (frames < static_cast<std::size_t>(cfg.base_stride) + 1) {
    throw RunError("the sequence has " + std::to_string(frames) +
                   " frames; base_stride " + std::to_string(cfg.base_stride) +
                   " needs at least " + std::to_string(cfg.base_stride + 1));
  }
  std::vector<std::size_t> out;
  for (std::size_t b = 0; b + 1 < frames; b += cfg.base_stride) out.push_back(b);
  return out;
}

std::vector<CurvePoint> bucket_curve(const std::vector<PairRecord>& pairs, double bucket) {
  std::map<long, std::pair<double, std::size_t>> acc;
  for (const PairRecord& p : pairs) {
    if (!p.repeatability) continue;
    auto& [sum, count] = acc[std::lround(p.camera_distance / bucket)];
    sum += *p.repeatability;
    ++count;
  }
  std::vector<CurvePoint> out;
  for (const auto& [b, sc] : acc) {
    out.push_back({b, static_cast<double>(b) * bucket,
                   sc.first / static_cast<double>(sc.second), sc.second});
  }
  return out;
}

SequenceReport run_sequence(const FrameSource& source, const ProtocolConfig& cfg) {
  cfg.validate();
  SequenceReport report;
  report.config = cfg;
  report.source = source.description();
  report.frames = source.size();
  report.base_frames = base_frames(source.size(), cfg);

  const std::size_t n_det = cfg.detectors.size();
  std::vector<std::vector<PairOutcome>> outcomes(n_det);

  for (std::size_t base : report.base_frames) {
    const std::size_t first = cfg.self_pairs ? 0 : 1;
    const std::size_t last = std::min<std::size_t>(cfg.window, source.size() - 1 - base);

    // Slot s holds frame base + s; detections are shared by every pair.
    const std::size_t slots = last + 1;
    std::vector<FrameBundle> frames(slots);
    std::vector<std::vector<KeypointSet>> kps(slots, std::vector<KeypointSet>(n_det));
    parallel_for(slots, cfg.workers, [&](std::size_t s) {
      frames[s] = source.load(base + s);
      for (std::size_t d = 0; d < n_det; ++d) kps[s][d] = detect(frames[s].image, cfg.detectors[d]);
    });
    report.base_ids.push_back(frames[0].frame_id);

    std::vector<PairJob> jobs;
    for (std::size_t d = 0; d < n_det; ++d) {
      for (std::size_t k = first; k <= last; ++k) jobs.push_back({d, 0, k});
    }
    std::vector<PairOutcome> results(jobs.size());
    parallel_for(jobs.size(), cfg.workers, [&](std::size_t j) {
      const PairJob& job = jobs[j];
      const std::size_t other = base + job.other_slot;
      std::optional<Homography> h;
      if (cfg.eval.mode == CorrespondenceMode::kHomography) {
        h = source.homography(base, other);
        if (!h) throw ConfigError("homography mode needs a source with exact homographies");
      }
      const FrameBundle& b1 = frames[job.base_slot];
      const FrameBundle& b2 = frames[job.other_slot];
      const KeypointSet& k1 = kps[job.base_slot][job.detector];
      const PairResult pr = evaluate_keypoints(b1, k1, b2, kps[job.other_slot][job.detector],
                                               cfg.eval, h);
      PairOutcome& out = results[j];
      out.record = {base,          other,          b1.frame_id,       b2.frame_id,
                    pr.n_d1(),     pr.n_d2(),      pr.matches.size(), pr.repeatability,
                    pr.camera_distance};
      if (b1.labels && pr.repeatability) {
        out.classes = per_class_repeatability(pr, k1, *b1.labels);
      }
    });
    for (std::size_t j = 0; j < jobs.size(); ++j) {
      outcomes[jobs[j].detector].push_back(std::move(results[j]));
    }
  }

  for (std::size_t d = 0; d < n_det; ++d) {
    DetectorReport rep;
    rep.config = cfg.detectors[d];
    double sum = 0.0;
    for (PairOutcome& o : outcomes[d]) {
      if (o.record.repeatability) {
        sum += *o.record.repeatability;
        ++rep.defined_pairs;
      }
      if (o.classes) rep.classes.merge(*o.classes);
      rep.pairs.push_back(std::move(o.record));
    }
    if (rep.defined_pairs == 0) {
      throw RunError(rep.config.label() + ": no pair has a defined repeatability (" +
                     std::to_string(rep.pairs.size()) + " pairs evaluated)");
    }
    rep.mean_repeatability = sum / static_cast<double>(rep.defined_pairs);
    rep.curve = bucket_curve(rep.pairs, cfg.distance_bucket);
    report.detectors.push_back(std::move(rep));
  }
  std::stable_sort(report.detectors.begin(), report.detectors.end(),
                   [](const DetectorReport& a, const DetectorReport& b) {
                     return a.mean_repeatability > b.mean_repeatability;
                   });
  return report;
}

SequenceReport run_sequence(const DatasetManifest& manifest, const ProtocolConfig& cfg) {
  return run_sequence(ManifestSource(manifest), cfg);
}

std::string format_number(double value) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value,
                                       std::chars_format::general, 6);
  return std::string(buf, ptr);
}

std::string curve_csv(const DetectorReport& det) {
  std::string out = "distance_m,mean_repeatability,pairs\n";
  for (const CurvePoint& c : det.curve) {
    out += format_number(c.distance_m) + ',' + format_number(c.mean_repeatability) + ',' +
           std::to_string(c.pairs) + '\n';
  }
  return out;
}

std::string summary_csv(const SequenceReport& report) {
  std::string out = "detector,mean_repeatability,pairs,defined_pairs\n";
  for (const DetectorReport& d : report.detectors) {
    out += d.config.label() + ',' + format_number(d.mean_repeatability) + ',' +
           std::to_string(d.pairs.size()) + ',' + std::to_string(d.defined_pairs) + '\n';
  }
  return out;
}

std::string per_class_csv(const DetectorReport& det) {
  std::string out = "class,n_d1,matches,repeatability\n";
  for (const ClassRow& row : det.classes.rows()) {
    const auto r = row.stats.repeatability();
    out += row.name + ',' + std::to_string(row.stats.n_d1) + ',' +
           std::to_string(row.stats.n_matches) + ',' + (r ? format_number(*r) : "") + '\n';
  }
  return out;
}

namespace {

nlohmann::json detector_json(const DetectorConfig& d) {
  nlohmann::json j = {{"name", d.label()},
                      {"kind", std::string(to_string(d.kind))},
                      {"max_points", d.max_points}};
  switch (d.kind) {
    case DetectorKind::kFast:
      j["threshold"] = d.fast.threshold;
      j["arc"] = d.fast.arc;
      break;
    case DetectorKind::kHarris:
      j["sigma_i"] = d.harris.sigma_i;
      j["sigma_d"] = d.harris.sigma_d;
      j["k"] = d.harris.k;
      j["threshold"] = d.harris.threshold;
      break;
    case DetectorKind::kDog:
      j["octaves"] = d.dog.octaves;
      j["scales_per_octave"] = d.dog.scales_per_octave;
      j["contrast_threshold"] = d.dog.contrast_threshold;
      j["edge_ratio"] = d.dog.edge_ratio;
      break;
  }
  return j;
}

std::string file_label(const std::string& label) {
  std::string out = label;
  for (char& c : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    if (!ok) c = '_';
  }
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

std::string run_json(const SequenceReport& report) {
  const ProtocolConfig& c = report.config;
  nlohmann::json detectors = nlohmann::json::array();
  for (const DetectorConfig& d : c.detectors) detectors.push_back(detector_json(d));

  nlohmann::json results = nlohmann::json::array();
  for (const DetectorReport& d : report.detectors) {
    nlohmann::json top = nlohmann::json::array();
    nlohmann::json bottom = nlohmann::json::array();
    for (const ClassRow& r : d.classes.top(5)) top.push_back({r.name, *r.stats.repeatability()});
    for (const ClassRow& r : d.classes.bottom(5)) {
      bottom.push_back({r.name, *r.stats.repeatability()});
    }
    results.push_back({{"detector", d.config.label()},
                       {"mean_repeatability", d.mean_repeatability},
                       {"pairs", d.pairs.size()},
                       {"defined_pairs", d.defined_pairs},
                       {"buckets", d.curve.size()},
                       {"top_classes", top},
                       {"bottom_classes", bottom}});
  }

  nlohmann::json j = {
      {"protocol",
       {{"base_stride", c.base_stride},
        {"window", c.window},
        {"distance_bucket", c.distance_bucket},
        {"self_pairs", c.self_pairs}}},
      {"eval",
       {{"theta", c.eval.theta},
        {"occlusion_tolerance", c.eval.occlusion_tolerance},
        {"mode", std::string(to_string(c.eval.mode))}}},
      {"detectors", detectors},
      {"source", {{"description", report.source}, {"frames", report.frames}}},
      {"base_frames", report.base_ids},
      {"results", results},
  };
  return j.dump(2) + '\n';
}

std::vector<fs::path> emit_reports(const SequenceReport& report, const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create " + out_dir.string() + ": " + ec.message());
  std::vector<fs::path> written;
  auto put = [&](const fs::path& name, const std::string& text) {
    write_text(out_dir / name, text);
    written.push_back(out_dir / name);
  };
  for (const DetectorReport& d : report.detectors) {
    const std::string label = file_label(d.config.label());
    put("curve_" + label + ".csv", curve_csv(d));
    put("per_class_" + label + ".csv", per_class_csv(d));
  }
  put("summary.csv", summary_csv(report));
  put("run.json", run_json(report));
  return written;
}

}  // namespace keyrep
