#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "keyrep/frame.h"
#include "keyrep/geometry.h"
#include "keyrep/labels.h"

namespace keyrep {

// One line of the manifest. Paths are relative to the manifest root.
struct FrameRecord {
  std::string frame_id;
  std::string image_path;
  std::optional<std::string> depth_path;  // written as "-" when absent
  std::optional<std::string> label_path;
  Pose pose;  // camera-to-world

  friend bool operator==(const FrameRecord&, const FrameRecord&) = default;
};

// Plain-text dataset description:
//
//   # comment
//   intrinsics <fx> <fy> <cx> <cy>
//   depth_scale <meters per unit>
//   class <id> <name>                      (any number)
//   <frame_id> image <path> depth <path|-> [label <path>] pose <r11 r12 r13 t1
//       r21 r22 r23 t2 r31 r32 r33 t3>
//
// Tokens are whitespace separated; double quotes allow spaces inside a token.
struct DatasetManifest {
  std::filesystem::path root;
  CameraIntrinsics intrinsics;
  double depth_scale = 1.0;
  ClassNames class_names;
  std::vector<FrameRecord> frames;

  std::size_t size() const noexcept { return frames.size(); }
  // Index of the frame with this id; throws ParameterError if unknown.
  std::size_t index_of(const std::string& frame_id) const;
  // Reads the frame's rasters from disk.
  FrameBundle load_frame(std::size_t index) const;

  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

// Parses manifest text. When `check_files` is set every referenced file must
// exist under `root`.
DatasetManifest parse_manifest(const std::string& text,
                               const std::filesystem::path& root,
                               bool check_files = true);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Serializes with round-trip precision. Paths are emitted relative to
// `relative_to` (the directory the manifest will live in).
std::string format_manifest(const DatasetManifest& manifest,
                            const std::filesystem::path& relative_to);
// Writes to `path`, rebasing file paths onto the manifest's directory.
void write_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

// 8-bit PGM (P5) or 8/16-bit single-channel PNG, scaled to [0,1].
ImageGray load_image(const std::filesystem::path& path);
// 16-bit PNG (value * depth_scale, 0 = missing) or raw DPTH float grid.
DepthMap load_depth(const std::filesystem::path& path, double depth_scale);
// 8-bit PNG or PGM of class ids.
LabelMap load_labels(const std::filesystem::path& path, ClassNames names = {});

// Writers used by the synthetic dataset exporter and test fixtures.
void write_pgm(const std::filesystem::path& path, const ImageGray& img);
void write_pgm(const std::filesystem::path& path, const Raster<int>& values);
void write_depth_raw(const std::filesystem::path& path, const DepthMap& depth);
// Single-channel PNG; `bit_depth` 8 or 16, values are clamped to range.
void write_png(const std::filesystem::path& path, const Raster<int>& values,
               int bit_depth);

// Raw depth layout: "DPTH", u32 width, u32 height, u32 reserved, then
// width*height little-endian float32 meters.
inline constexpr char kDepthMagic[4] = {'D', 'P', 'T', 'H'};

struct ApolloAdapterConfig {
  CameraIntrinsics intrinsics;
  double depth_scale = 1.0 / 200.0;
  // Empty strings select every road / record / camera directory.
  std::string road;
  std::string record;
  std::string camera;
  // Pose files hold world-to-camera matrices when set.
  bool world_to_camera = false;
  ClassNames class_names;
};

struct ApolloAdapterResult {
  DatasetManifest manifest;
  std::vector<std::string> warnings;
};

// Walks <root>/<road>/{ColorImage,Depth,Label,Pose}/<record>/<camera>/.
// Each Pose/<record>/<camera>/pose.txt line holds a row-major 4x4 matrix
// followed by the image file name. Frames with unusable poses or missing
// depth are skipped with a warning; throws ParseError if nothing survives.
ApolloAdapterResult apollo_adapter(const std::filesystem::path& root,
                                   const ApolloAdapterConfig& cfg);

}  // namespace keyrep
