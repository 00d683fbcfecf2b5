// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any fails. Tolerances are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cli.h"
#include "keyrep/dataset_io.h"
#include "keyrep/detectors.h"
#include "keyrep/geometry.h"
#include "keyrep/matching.h"
#include "keyrep/protocol.h"
#include "keyrep/semantics.h"
#include "keyrep/synthetic.h"
#include "oracles.h"

namespace keyrep {
namespace {
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr double kRoundTripTolerance = 1e-9;     // pixels
constexpr double kDisparityTolerance = 1e-9;     // pixels
constexpr double kHarrisOracleRadius = 1.0;      // pixels
constexpr double kOcclusionAgreement = 0.99;     // fraction of keypoints
constexpr double kClassRepeatabilityTol = 1e-12;
constexpr double kDetectorBudgetSeconds = 60.0;
constexpr double kTrendBudgetSeconds = 300.0;

struct Outcome {
  bool pass = true;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(const char* f, double a) {
  char buf[128];
  std::snprintf(buf, sizeof(buf), f, a);
  return buf;
}

std::vector<DetectorConfig> all_detectors() {
  std::vector<DetectorConfig> out;
  for (DetectorKind k : {DetectorKind::kFast, DetectorKind::kHarris, DetectorKind::kDog}) {
    DetectorConfig d;
    d.kind = k;
    out.push_back(d);
  }
  return out;
}

std::vector<oracle::Pixel> pixels_of(const KeypointSet& kps) {
  std::vector<oracle::Pixel> out;
  for (const Keypoint& k : kps.points) {
    out.push_back({static_cast<int>(k.x), static_cast<int>(k.y)});
  }
  std::sort(out.begin(), out.end());
  return out;
}

Outcome detector_oracles() {
  const auto t0 = Clock::now();
  Outcome o;
  int fast_bad = 0, dog_bad = 0, harris_bad = 0;
  std::size_t fast_n = 0, dog_n = 0, harris_n = 0;

  const FastParams fp;
  for (std::uint32_t seed = 0; seed < 100; ++seed) {
    const ImageGray img = oracle::random_image(64, 64, 1000 + seed);
    const auto got = pixels_of(detect_fast(img, fp));
    auto expect = oracle::fast_corners(img, fp.threshold, fp.arc);
    std::sort(expect.begin(), expect.end());
    fast_n += expect.size();
    if (got != expect) ++fast_bad;
  }

  // Two octaves is the most a 48 px image allows (16 px top-octave minimum).
  DogParams dp;
  dp.octaves = 2;
  for (std::uint32_t seed = 0; seed < 20; ++seed) {
    const ImageGray img = oracle::random_image(48, 48, 2000 + seed);
    const DogPyramid pyr = build_dog_pyramid(img, dp.octaves, dp.scales_per_octave);
    const auto got = find_scale_space_extrema(pyr);
    const auto expect = oracle::dog_extrema(pyr);
    dog_n += expect.size();
    if (got != expect) ++dog_bad;
  }

  const HarrisParams hp;
  for (int cell : {6, 8, 10}) {
    for (int offset : {2, 3, 5}) {
      const ImageGray img = oracle::checkerboard(80, 72, cell, offset);
      const auto expect = oracle::local_maxima(oracle::harris_response_dense(img, hp), 2,
                                               hp.threshold, harris_border(hp));
      const KeypointSet kps = detect_harris(img, hp);
      harris_n += expect.size();
      bool ok = kps.size() == expect.size() && !expect.empty();
      for (const Keypoint& k : kps.points) {
        ok = ok && std::any_of(expect.begin(), expect.end(), [&](const oracle::Pixel& e) {
               return std::hypot(k.x - e.x, k.y - e.y) <= kHarrisOracleRadius;
             });
      }
      if (!ok) ++harris_bad;
    }
  }
  const double secs = seconds_since(t0);
  o.pass = fast_bad == 0 && dog_bad == 0 && harris_bad == 0 && fast_n > 0 && dog_n > 0 &&
           secs < kDetectorBudgetSeconds;
  o.detail = "fast mismatches " + std::to_string(fast_bad) + "/100 (" + std::to_string(fast_n) +
             " corners), dog " + std::to_string(dog_bad) + "/20 (" + std::to_string(dog_n) +
             " extrema), harris " + std::to_string(harris_bad) + "/9 (" +
             std::to_string(harris_n) + " maxima), " + fmt("%.1f s", secs);
  return o;
}

Outcome geometry_round_trips() {
  std::mt19937 rng(42);
  std::uniform_real_distribution<double> f(50, 2000), c(0, 1000), px(-500, 2500), d(0.1, 500);
  double worst = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const CameraIntrinsics k(f(rng), f(rng), c(rng), c(rng));
    const Vec2 p(px(rng), px(rng));
    const Vec2 back = project(backproject(p, d(rng), k), k);
    worst = std::max(worst, (back - p).norm());
  }
  std::uniform_real_distribution<double> fx_d(50, 2000), b_d(0.01, 5), dd(0.5, 200);
  double worst_disp = 0.0;
  for (int i = 0; i < 1000; ++i) {
    const double fx = fx_d(rng), b = b_d(rng), depth = dd(rng);
    const CameraIntrinsics k(fx, fx, 2000, 500);
    const Pose t = relative_pose(Pose(), Pose(Mat3::Identity(), Vec3(b, 0, 0)));
    const Vec2 p1(3000, 400);
    const Vec2 p2 = project(t * backproject(p1, depth, k), k);
    worst_disp = std::max(worst_disp, std::abs((p1.x() - p2.x()) - fx * b / depth));
  }
  return {worst <= kRoundTripTolerance && worst_disp <= kDisparityTolerance,
          fmt("round trip max %.3g px", worst) + fmt(", disparity max %.3g px", worst_disp)};
}

Outcome planar_cross_validation() {
  const SceneSpec spec = oracle::plane_scene(10);
  const SceneSource src(spec);
  std::vector<FrameBundle> frames;
  for (std::size_t i = 0; i < spec.trajectory.size(); ++i) frames.push_back(src.load(i));
  EvalParams depth_mode;
  EvalParams homography_mode;
  homography_mode.mode = CorrespondenceMode::kHomography;
  int pairs = 0, bad = 0;
  std::size_t matches = 0;
  for (const DetectorConfig& det : all_detectors()) {
    std::vector<KeypointSet> kps;
    for (const FrameBundle& f : frames) kps.push_back(detect(f.image, det));
    for (std::size_t i = 0; i < frames.size(); ++i) {
      for (std::size_t j = i + 1; j < frames.size(); ++j) {
        const PairResult a = evaluate_keypoints(frames[i], kps[i], frames[j], kps[j], depth_mode);
        const PairResult b = evaluate_keypoints(frames[i], kps[i], frames[j], kps[j],
                                                homography_mode, src.homography(i, j));
        std::set<std::pair<int, int>> ma, mb;
        for (const Match& m : a.matches) ma.insert({m.index1, m.index2});
        for (const Match& m : b.matches) mb.insert({m.index1, m.index2});
        ++pairs;
        matches += ma.size();
        if (ma != mb || a.repeatability != b.repeatability) {
          ++bad;
          std::fprintf(stderr, "  plane %s %zu-%zu: depth %zu matches, homography %zu\n",
                       det.label().c_str(), i, j, ma.size(), mb.size());
        }
      }
    }
  }
  return {bad == 0 && matches > 0, std::to_string(bad) + " of " + std::to_string(pairs) +
                                       " pairs differ, " + std::to_string(matches) + " matches"};
}

Outcome identity_pairs() {
  int checked = 0, bad = 0;
  std::string worst;
  const std::vector<SceneSpec> scenes = {oracle::plane_scene(1), oracle::corridor_scene(1),
                                         oracle::two_box_scene()};
  for (const SceneSpec& s : scenes) {
    const FrameBundle f = render(s, 0);
    for (const DetectorConfig& det : all_detectors()) {
      const KeypointSet k = detect(f.image, det);
      const bool any_depth = std::any_of(k.points.begin(), k.points.end(), [&](const Keypoint& p) {
        return sample_depth(*f.depth, p.x, p.y).has_value();
      });
      if (!any_depth) continue;
      const PairResult r = evaluate_keypoints(f, k, f, k, EvalParams{});
      ++checked;
      if (!(r.repeatability && *r.repeatability == 1.0)) {
        ++bad;
        worst = det.label() + fmt(" r=%.17g", r.repeatability.value_or(-1));
      }
    }
  }
  return {bad == 0 && checked == 9,
          std::to_string(checked) + " scene/detector cases, " + std::to_string(bad) +
              " below 1" + (worst.empty() ? "" : " (" + worst + ")")};
}

Outcome occlusion_agreement() {
  const SceneSpec spec = oracle::two_box_scene();
  std::vector<FrameBundle> frames;
  for (std::size_t i = 0; i < spec.trajectory.size(); ++i) frames.push_back(render(spec, i));
  std::size_t total = 0, agree = 0, hidden = 0;
  for (const DetectorConfig& det : all_detectors()) {
    std::vector<KeypointSet> kps;
    for (const FrameBundle& f : frames) kps.push_back(detect(f.image, det));
    for (std::size_t i = 0; i < frames.size(); ++i) {
      for (std::size_t j = 0; j < frames.size(); ++j) {
        if (i == j) continue;
        const VisibilitySets v = visibility_sets(kps[i], kps[j], frames[i], frames[j], {});
        const std::set<int> in_d1(v.d1.begin(), v.d1.end());
        for (std::size_t n = 0; n < kps[i].size(); ++n) {
          const Vec2 p(kps[i][n].x, kps[i][n].y);
          const bool truth = oracle::ray_cast_visible(spec, i, j, p);
          const bool got = in_d1.count(static_cast<int>(n)) > 0;
          ++total;
          agree += truth == got;
          hidden += !truth;
        }
      }
    }
  }
  const double frac = total ? static_cast<double>(agree) / total : 0.0;
  return {total > 0 && hidden > 0 && frac >= kOcclusionAgreement,
          fmt("agreement %.4f", frac) + " over " + std::to_string(total) + " keypoints (" +
              std::to_string(hidden) + " not visible)"};
}

Outcome distance_trend() {
  const auto t0 = Clock::now();
  ProtocolConfig cfg;
  cfg.detectors = all_detectors();
  cfg.workers = 4;
  const SequenceReport rep = run_sequence(SceneSource(oracle::corridor_scene(21, 1.0)), cfg);
  bool ok = true;
  std::string detail;
  for (const DetectorConfig& want : cfg.detectors) {
    const auto it = std::find_if(rep.detectors.begin(), rep.detectors.end(),
                                 [&](const DetectorReport& d) {
                                   return d.config.label() == want.label();
                                 });
    std::optional<double> at1, at10;
    for (const CurvePoint& c : it->curve) {
      if (c.bucket == 1) at1 = c.mean_repeatability;
      if (c.bucket == 10) at10 = c.mean_repeatability;
    }
    const bool d_ok = at1 && at10 && *at1 > *at10;
    ok = ok && d_ok;
    detail += want.label() + fmt(" %.3f", at1.value_or(NAN)) + fmt(">%.3f", at10.value_or(NAN)) +
              (d_ok ? "" : "(no)") + ", ";
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < kTrendBudgetSeconds;
  return {ok, detail + fmt("%.1f s", secs)};
}

Outcome semantic_partition() {
  const SceneSpec spec = oracle::corridor_scene(6, 1.0);
  std::vector<FrameBundle> frames;
  for (std::size_t i = 0; i < spec.trajectory.size(); ++i) frames.push_back(render(spec, i));
  int pairs = 0, bad = 0;
  std::set<std::string> names;
  for (const DetectorConfig& det : all_detectors()) {
    std::vector<KeypointSet> kps;
    for (const FrameBundle& f : frames) kps.push_back(detect(f.image, det));
    ClassReport merged;
    std::size_t matches = 0, denom = 0;
    for (std::size_t j = 1; j < frames.size(); ++j) {
      const PairResult pr = evaluate_keypoints(frames[0], kps[0], frames[j], kps[j], {});
      if (!pr.repeatability) continue;
      const ClassReport cr = per_class_repeatability(pr, kps[0], *frames[0].labels);
      ++pairs;
      bool ok = cr.total_d1() == pr.n_d1() && cr.total_matches() == pr.matches.size();
      const auto overall = cr.overall_repeatability();
      ok = ok && overall && std::abs(*overall - *pr.repeatability) <= kClassRepeatabilityTol;
      if (!ok) ++bad;
      for (const ClassRow& r : cr.rows()) names.insert(r.name);
      merged.merge(cr);
      matches += pr.matches.size();
      denom += std::min(pr.n_d1(), pr.n_d2());
    }
    const auto micro = merged.overall_repeatability();
    if (!micro || std::abs(*micro - static_cast<double>(matches) / denom) > kClassRepeatabilityTol) {
      ++bad;
    }
  }
  std::string classes;
  for (const std::string& n : names) classes += (classes.empty() ? "" : ",") + n;
  // Sky carries no depth, so it is labelled but never in a common region.
  const auto& ids = frames[0].labels->ids().data();
  const bool sky = std::find(ids.begin(), ids.end(), kClassSky) != ids.end();
  const bool have = names.count("floor") && names.count("wall") && sky;
  return {bad == 0 && pairs > 0 && have,
          std::to_string(pairs) + " pairs, " + std::to_string(bad) + " mismatches, classes " +
              classes + (sky ? " (+sky labelled, no depth)" : "")};
}

Outcome matching_bound() {
  std::mt19937 rng(17);
  std::uniform_int_distribution<int> count(0, 10);
  std::uniform_real_distribution<double> pos(0, 12);
  const double theta = 2.5;
  int bad = 0;
  std::size_t greedy_total = 0, optimal_total = 0;
  for (int inst = 0; inst < 200; ++inst) {
    const int n1 = count(rng), n2 = count(rng);
    std::vector<Vec2> mapped(n1);
    KeypointSet k2;
    k2.width = k2.height = 16;
    for (Vec2& m : mapped) m = Vec2(pos(rng), pos(rng));
    for (int j = 0; j < n2; ++j) k2.points.push_back({pos(rng), pos(rng), 1.0, {}});
    std::vector<int> d1(n1), d2(n2);
    for (int i = 0; i < n1; ++i) d1[i] = i;
    for (int j = 0; j < n2; ++j) d2[j] = j;
    const auto m = find_correspondences(k2, d1, mapped, d2, theta);
    std::vector<Vec2> p2;
    for (const Keypoint& k : k2.points) p2.emplace_back(k.x, k.y);
    const std::size_t opt = oracle::optimal_match_count(mapped, p2, theta);
    greedy_total += m.size();
    optimal_total += opt;
    bool ok = m.size() <= opt;
    std::set<int> used1, used2;
    for (const Match& x : m) {
      ok = ok && used1.insert(x.index1).second && used2.insert(x.index2).second;
      ok = ok && (mapped[x.index1] - p2[x.index2]).norm() < theta;
    }
    const auto r = repeatability(m.size(), d1.size(), d2.size());
    ok = ok && (r.has_value() == (std::min(n1, n2) > 0));
    if (r) ok = ok && *r >= 0.0 && *r <= 1.0;
    if (!ok) ++bad;
  }
  return {bad == 0, std::to_string(bad) + " violations, greedy " + std::to_string(greedy_total) +
                        " vs optimal " + std::to_string(optimal_total) + " matches"};
}

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "keyrep");
  std::vector<const char*> argv;
  for (const std::string& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::cli_main(static_cast<int>(argv.size()), argv.data(), out, err);
  if (code != 0) std::fprintf(stderr, "%s", err.str().c_str());
  return code;
}

Outcome end_to_end_determinism() {
  const fs::path dir = fs::temp_directory_path() / "keyrep_acceptance_determinism";
  fs::remove_all(dir);
  const SceneSpec spec = oracle::corridor_scene(13, 0.5);
  write_synthetic_dataset(spec, dir / "data");
  const std::string manifest = (dir / "data" / "manifest.txt").string();
  const std::vector<std::string> common = {"--set", "protocol.base_stride=6", "--set",
                                           "protocol.window=6"};
  std::vector<std::pair<std::string, int>> runs = {{"w1a", 1}, {"w1b", 1}, {"w4", 4}, {"w8", 8}};
  for (const auto& [name, workers] : runs) {
    std::vector<std::string> args = {"eval-sequence", "--manifest", manifest, "--out",
                                     (dir / name).string(), "--workers",
                                     std::to_string(workers)};
    args.insert(args.end(), common.begin(), common.end());
    if (run_cli(args) != 0) return {false, "eval-sequence failed for " + name};
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(dir / "w1a")) files.push_back(e.path().filename());
  std::sort(files.begin(), files.end());
  int differ = 0;
  for (const auto& [name, workers] : runs) {
    std::vector<fs::path> here;
    for (const auto& e : fs::directory_iterator(dir / name)) here.push_back(e.path().filename());
    std::sort(here.begin(), here.end());
    if (here != files) ++differ;
    for (const fs::path& f : files) {
      if (read_file(dir / "w1a" / f) != read_file(dir / name / f)) ++differ;
    }
  }
  fs::remove_all(dir);
  return {differ == 0 && files.size() == 3 * 2 + 2,
          std::to_string(files.size()) + " files x 4 runs (workers 1,1,4,8), " +
              std::to_string(differ) + " differences"};
}

Outcome protocol_shape() {
  ProtocolConfig cfg;  // stride 20, window 19
  cfg.detectors = all_detectors();
  cfg.workers = 4;
  const SequenceReport rep = run_sequence(SceneSource(oracle::corridor_scene(41, 0.25)), cfg);
  bool ok = cfg.base_stride == 20 && cfg.window == 19 && rep.base_frames.size() == 2 &&
            rep.base_frames[0] == 0 && rep.base_frames[1] == 20;
  std::string counts;
  for (const DetectorReport& d : rep.detectors) {
    ok = ok && d.pairs.size() == 38;
    counts += " " + d.config.label() + "=" + std::to_string(d.pairs.size());
  }
  return {ok && rep.detectors.size() == 3,
          std::to_string(rep.base_frames.size()) + " base frames, pairs" + counts};
}

}  // namespace
}  // namespace keyrep

int main() {
  using namespace keyrep;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"C1 detector-oracle equivalence", detector_oracles},
      {"C2 geometry round trips", geometry_round_trips},
      {"C3 planar depth/homography agreement", planar_cross_validation},
      {"C4 identity pair repeatability", identity_pairs},
      {"C5 occlusion vs ray casting", occlusion_agreement},
      {"C6 repeatability falls with distance", distance_trend},
      {"C7 semantic partition", semantic_partition},
      {"C8 greedy matching bound", matching_bound},
      {"C9 end-to-end determinism", end_to_end_determinism},
      {"C10 protocol shape", protocol_shape},
  };
  int failed = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
