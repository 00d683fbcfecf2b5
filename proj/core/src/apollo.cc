#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <Eigen/LU>

#include "keyrep/config.h"
#include "keyrep/dataset_io.h"
#include "keyrep/error.h"

namespace keyrep {
namespace fs = std::filesystem;

namespace {

constexpr double kApolloRotationTolerance = 1e-3;
constexpr const char* kImageExtensions[] = {".png", ".pgm", ".jpg", ".jpeg"};

std::vector<fs::path> sorted_subdirs(const fs::path& dir, const std::string& only) {
  std::vector<fs::path> out;
  if (!fs::is_directory(dir)) return out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_directory()) continue;
    if (!only.empty() && e.path().filename() != only) continue;
    out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<fs::path> find_with_stem(const fs::path& dir, const std::string& stem) {
  for (const char* ext : kImageExtensions) {
    fs::path p = dir / (stem + ext);
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

std::optional<fs::path> find_label(const fs::path& dir, const std::string& stem) {
  for (const std::string& name : {stem + ".png", stem + "_bin.png", stem + ".pgm"}) {
    fs::path p = dir / name;
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

ApolloAdapterResult apollo_adapter(const fs::path& root, const ApolloAdapterConfig& cfg) {
  if (!fs::is_directory(root)) throw IoError("not a directory: " + root.string());
  ApolloAdapterResult result;
  DatasetManifest& m = result.manifest;
  m.root = root;
  m.intrinsics = cfg.intrinsics;
  m.depth_scale = cfg.depth_scale;
  m.class_names = cfg.class_names;
  std::set<std::string> ids;

  auto warn = [&](const fs::path& file, int line, const std::string& what) {
    result.warnings.push_back(file.string() + ":" + std::to_string(line) + ": " + what +
                              "; frame skipped");
  };

  for (const fs::path& road : sorted_subdirs(root, cfg.road)) {
    for (const fs::path& record : sorted_subdirs(road / "Pose", cfg.record)) {
      for (const fs::path& camera : sorted_subdirs(record, cfg.camera)) {
        const fs::path pose_file = camera / "pose.txt";
        if (!fs::is_regular_file(pose_file)) continue;
        const fs::path rel_tail = fs::relative(camera, road / "Pose");
        const fs::path image_dir = road / "ColorImage" / rel_tail;
        const fs::path depth_dir = road / "Depth" / rel_tail;
        const fs::path label_dir = road / "Label" / rel_tail;

        std::ifstream in(pose_file);
        int line_no = 0;
        for (std::string line; std::getline(in, line);) {
          ++line_no;
          std::istringstream ss(line);
          std::vector<std::string> tok;
          for (std::string t; ss >> t;) tok.push_back(t);
          if (tok.empty()) continue;
          if (tok.size() != 17) {
            warn(pose_file, line_no, "expected 16 numbers and an image name");
            continue;
          }
          Eigen::Matrix4d mat;
          bool numeric = true;
          for (int i = 0; i < 16 && numeric; ++i) {
            try {
              mat(i / 4, i % 4) = parse_double(tok[i], "pose");
            } catch (const ParseError&) {
              numeric = false;
            }
          }
          if (!numeric) {
            warn(pose_file, line_no, "unparseable pose value");
            continue;
          }
          const Eigen::RowVector4d bottom(0, 0, 0, 1);
          if ((mat.row(3) - bottom).cwiseAbs().maxCoeff() > 1e-9) {
            warn(pose_file, line_no, "last matrix row is not 0 0 0 1");
            continue;
          }
          const Mat3 r = mat.topLeftCorner<3, 3>();
          if (orthonormality_error(r) > kApolloRotationTolerance ||
              std::abs(r.determinant() - 1.0) > kApolloRotationTolerance) {
            warn(pose_file, line_no, "rotation is not orthonormal");
            continue;
          }
          Pose pose = Pose::from_approximate(r, mat.topRightCorner<3, 1>());
          if (cfg.world_to_camera) pose = pose.inverse();

          const std::string stem = fs::path(tok[16]).stem().string();
          const auto image = find_with_stem(image_dir, stem);
          if (!image) {
            warn(pose_file, line_no, "no image for '" + tok[16] + "'");
            continue;
          }
          const fs::path depth = depth_dir / (stem + ".png");
          if (!fs::is_regular_file(depth)) {
            warn(pose_file, line_no, "no depth map for '" + tok[16] + "'");
            continue;
          }
          if (!ids.insert(stem).second) {
            warn(pose_file, line_no, "duplicate frame '" + stem + "'");
            continue;
          }
          FrameRecord rec;
          rec.frame_id = stem;
          rec.image_path = fs::relative(*image, root).generic_string();
          rec.depth_path = fs::relative(depth, root).generic_string();
          if (const auto label = find_label(label_dir, stem)) {
            rec.label_path = fs::relative(*label, root).generic_string();
          }
          rec.pose = pose;
          m.frames.push_back(std::move(rec));
        }
      }
    }
  }
  if (m.frames.empty()) {
    throw ParseError("no usable frames found under " + root.string());
  }
  return result;
}

}  // namespace keyrep
