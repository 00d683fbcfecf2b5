#include "cli.h"

#include <unistd.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "keyrep/config.h"
#include "keyrep/dataset_io.h"
#include "keyrep/detectors.h"
#include "keyrep/error.h"
#include "keyrep/matching.h"
#include "keyrep/protocol.h"
#include "keyrep/synthetic.h"

namespace keyrep::cli {
namespace fs = std::filesystem;

namespace {

class Console {
 public:
  Console(std::ostream& out, std::ostream& err) : out_(out), err_(err) {
    const char* no_color = std::getenv("NO_COLOR");
    color_ = (no_color == nullptr || *no_color == '\0') && &err == &std::cerr &&
             ::isatty(STDERR_FILENO) == 1;
  }

  std::ostream& out() { return out_; }
  void warn(const std::string& msg) { line("warning", "\033[33m", msg); }
  void error(const std::string& msg) { line("error", "\033[31m", msg); }

 private:
  void line(const char* tag, const char* code, const std::string& msg) {
    if (color_) {
      err_ << code << tag << "\033[0m: " << msg << '\n';
    } else {
      err_ << tag << ": " << msg << '\n';
    }
  }

  std::ostream& out_;
  std::ostream& err_;
  bool color_ = false;
};

struct ConfigArgs {
  std::string file;
  std::vector<std::string> overrides;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--config", file, "key = value configuration file")
        ->check(CLI::ExistingFile);
    cmd->add_option("--set", overrides, "override a config key (key=value), repeatable");
  }

  // Malformed configuration is a usage error, not a data error.
  KeyValueConfig load() const {
    try {
      KeyValueConfig cfg = file.empty() ? KeyValueConfig{} : KeyValueConfig::load(file);
      for (const std::string& a : overrides) cfg.set_assignment(a);
      return cfg;
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
  }
};

void write_output(const std::string& path, const std::string& text, Console& con) {
  if (path.empty() || path == "-") {
    con.out() << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write " + path);
  f << text;
  if (!f) throw IoError("failed writing " + path);
}

DetectorConfig single_detector(KeyValueConfig cfg, const std::string& name) {
  if (!name.empty()) {
    cfg.set("detectors", name);
  } else if (!cfg.has("detectors")) {
    cfg.set("detectors", "fast");
  }
  ProtocolConfig p = protocol_from_config(cfg);
  if (p.detectors.size() != 1) {
    throw ConfigError("exactly one detector is needed here; use --detector");
  }
  return p.detectors.front();
}

std::string keypoints_csv(const KeypointSet& kps) {
  std::string out = "x,y,response,scale\n";
  for (const Keypoint& k : kps.points) {
    out += format_number(k.x) + ',' + format_number(k.y) + ',' + format_number(k.response) +
           ',' + (k.scale ? format_number(*k.scale) : "") + '\n';
  }
  return out;
}

std::string pair_json(const FrameBundle& b1, const FrameBundle& b2, const DetectorConfig& det,
                      const EvalParams& eval, std::size_t n_kps1, std::size_t n_kps2,
                      const PairResult& r) {
  nlohmann::json matches = nlohmann::json::array();
  for (const Match& m : r.matches) matches.push_back({m.index1, m.index2, m.distance});
  nlohmann::json j = {
      {"frame1", b1.frame_id},
      {"frame2", b2.frame_id},
      {"detector", det.label()},
      {"mode", std::string(to_string(eval.mode))},
      {"theta", eval.theta},
      {"keypoints1", n_kps1},
      {"keypoints2", n_kps2},
      {"n_d1", r.n_d1()},
      {"n_d2", r.n_d2()},
      {"matches", matches},
      {"repeatability", r.repeatability ? nlohmann::json(*r.repeatability) : nlohmann::json()},
      {"camera_distance", r.camera_distance},
  };
  return j.dump(2) + '\n';
}

ApolloAdapterConfig apollo_config(const KeyValueConfig& cfg) {
  ApolloAdapterConfig a;
  if (!cfg.has("intrinsics")) throw ConfigError("adapt-apollo needs 'intrinsics = fx fy cx cy'");
  const auto k = cfg.get_doubles("intrinsics");
  if (k.size() != 4) throw ConfigError("intrinsics: expected fx fy cx cy");
  try {
    a.intrinsics = CameraIntrinsics(k[0], k[1], k[2], k[3]);
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  a.depth_scale = cfg.get_double("depth_scale", a.depth_scale);
  if (!(a.depth_scale > 0.0)) throw ConfigError("depth_scale must be positive");
  a.road = cfg.get_string("road", "");
  a.record = cfg.get_string("record", "");
  a.camera = cfg.get_string("camera", "");
  const std::string conv = cfg.get_string("pose_convention", "camera_to_world");
  if (conv == "world_to_camera") {
    a.world_to_camera = true;
  } else if (conv != "camera_to_world") {
    throw ConfigError("pose_convention must be camera_to_world or world_to_camera");
  }
  for (const auto& [key, value] : cfg.entries()) {
    if (key.rfind("class.", 0) != 0) continue;
    a.class_names[static_cast<ClassId>(parse_int(key.substr(6), key))] = cfg.raw(key);
  }
  const auto unused = cfg.unused_keys();
  if (!unused.empty()) throw ConfigError("unknown config key '" + unused.front() + "'");
  return a;
}

SceneSpec load_scene(const KeyValueConfig& cfg) {
  SceneSpec spec;
  try {
    spec = scene_from_config(cfg);
  } catch (const ParseError& e) {
    throw ConfigError(e.what());
  }
  const auto unused = cfg.unused_keys();
  if (!unused.empty()) throw ConfigError("unknown scene key '" + unused.front() + "'");
  return spec;
}

void print_summary(const SequenceReport& rep, Console& con) {
  con.out() << "frames " << rep.frames << ", base frames " << rep.base_frames.size() << '\n';
  for (const DetectorReport& d : rep.detectors) {
    con.out() << d.config.label() << ": mean repeatability "
              << format_number(d.mean_repeatability) << " over " << d.defined_pairs << '/'
              << d.pairs.size() << " pairs\n";
  }
}

}  // namespace

int cli_main(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Console con(out, err);
  CLI::App app{"Interest point repeatability evaluation", "keyrep"};
  app.require_subcommand(1);

  // detect
  auto* detect_cmd = app.add_subcommand("detect", "detect keypoints in one image (CSV)");
  std::string image_path, detector_name, out_path;
  ConfigArgs detect_cfg;
  detect_cmd->add_option("--image", image_path, "PGM or PNG image")->required();
  detect_cmd->add_option("--detector", detector_name, "fast, harris or dog (default fast)");
  detect_cmd->add_option("--out", out_path, "output CSV (default stdout)");
  detect_cfg.add_to(detect_cmd);

  // eval-pair
  auto* pair_cmd = app.add_subcommand("eval-pair", "evaluate one frame pair (JSON)");
  std::string manifest_path, frame1, frame2;
  ConfigArgs pair_cfg;
  pair_cmd->add_option("--manifest", manifest_path, "dataset manifest")
      ->required()
      ->check(CLI::ExistingFile);
  pair_cmd->add_option("--frame1", frame1, "first frame id")->required();
  pair_cmd->add_option("--frame2", frame2, "second frame id")->required();
  pair_cmd->add_option("--detector", detector_name, "fast, harris or dog (default fast)");
  pair_cmd->add_option("--out", out_path, "output JSON (default stdout)");
  pair_cfg.add_to(pair_cmd);

  // eval-sequence
  auto* seq_cmd = app.add_subcommand("eval-sequence", "run the sequence protocol");
  std::string scene_path, out_dir;
  int workers = 0;
  ConfigArgs seq_cfg;
  auto* seq_manifest = seq_cmd->add_option("--manifest", manifest_path, "dataset manifest")
                           ->check(CLI::ExistingFile);
  auto* seq_scene =
      seq_cmd->add_option("--scene", scene_path, "synthetic scene file, rendered in memory")
          ->check(CLI::ExistingFile);
  seq_manifest->excludes(seq_scene);
  seq_cmd->add_option("--out", out_dir, "report directory")->required();
  seq_cmd->add_option("--workers", workers, "worker threads (overrides protocol.workers)")
      ->check(CLI::PositiveNumber);
  seq_cfg.add_to(seq_cmd);

  // synth
  auto* synth_cmd = app.add_subcommand("synth", "render a synthetic dataset to disk");
  ConfigArgs synth_cfg;
  synth_cmd->add_option("--spec", synth_cfg.file, "scene file")->check(CLI::ExistingFile);
  synth_cmd->add_option("--set", synth_cfg.overrides, "override a scene key (key=value)");
  synth_cmd->add_option("--out", out_dir, "output directory")->required();

  // adapt-apollo
  auto* apollo_cmd = app.add_subcommand("adapt-apollo", "build a manifest from an Apollo tree");
  std::string apollo_root;
  ConfigArgs apollo_cfg;
  apollo_cmd->add_option("--root", apollo_root, "dataset root")->required()->check(
      CLI::ExistingDirectory);
  apollo_cmd->add_option("--out", out_path, "manifest to write")->required();
  apollo_cfg.add_to(apollo_cmd);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*detect_cmd) {
      const DetectorConfig det = single_detector(detect_cfg.load(), detector_name);
      const ImageGray img = load_image(image_path);
      write_output(out_path, keypoints_csv(detect(img, det)), con);
    } else if (*pair_cmd) {
      KeyValueConfig cfg = pair_cfg.load();
      const DetectorConfig det = single_detector(cfg, detector_name);
      const EvalParams eval = protocol_from_config(cfg).eval;
      if (eval.mode != CorrespondenceMode::kDepth) {
        throw ConfigError("eval-pair on a manifest supports depth mode only");
      }
      const DatasetManifest m = load_manifest(manifest_path);
      const FrameBundle b1 = m.load_frame(m.index_of(frame1));
      const FrameBundle b2 = m.load_frame(m.index_of(frame2));
      for (const FrameBundle* b : {&b1, &b2}) {
        if (!b->depth) {
          con.error("frame '" + b->frame_id + "' has no depth map; depth mode needs one");
          return kExitData;
        }
      }
      const KeypointSet k1 = detect(b1.image, det);
      const KeypointSet k2 = detect(b2.image, det);
      const PairResult r = evaluate_keypoints(b1, k1, b2, k2, eval);
      write_output(out_path, pair_json(b1, b2, det, eval, k1.size(), k2.size(), r), con);
    } else if (*seq_cmd) {
      if (manifest_path.empty() && scene_path.empty()) {
        err << seq_cmd->help();
        con.error("eval-sequence needs --manifest or --scene");
        return kExitUsage;
      }
      KeyValueConfig cfg = seq_cfg.load();
      if (workers > 0) cfg.set("protocol.workers", std::to_string(workers));
      const ProtocolConfig proto = protocol_from_config(cfg);
      SequenceReport rep;
      if (!scene_path.empty()) {
        ConfigArgs scene_args;
        scene_args.file = scene_path;
        rep = run_sequence(SceneSource(load_scene(scene_args.load())), proto);
      } else {
        rep = run_sequence(load_manifest(manifest_path), proto);
      }
      emit_reports(rep, out_dir);
      print_summary(rep, con);
    } else if (*synth_cmd) {
      const KeyValueConfig cfg = synth_cfg.load();
      const SceneSpec spec = load_scene(cfg);
      const DatasetManifest m = write_synthetic_dataset(spec, out_dir);
      con.out() << "wrote " << m.size() << " frames to " << out_dir << '\n';
    } else if (*apollo_cmd) {
      const ApolloAdapterResult res = apollo_adapter(apollo_root, apollo_config(apollo_cfg.load()));
      for (const std::string& w : res.warnings) con.warn(w);
      write_manifest(res.manifest, out_path);
      con.out() << "wrote " << res.manifest.size() << " frames to " << out_path << '\n';
    }
  } catch (const ConfigError& e) {
    con.error(e.what());
    return kExitUsage;
  } catch (const ParameterError& e) {
    con.error(e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    con.error(e.what());
    return kExitData;
  }
  return kExitOk;
}

}  // namespace keyrep::cli
