#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string_view>
#include <vector>

#include "keyrep/config.h"
#include "keyrep/dataset_io.h"
#include "keyrep/frame.h"
#include "keyrep/geometry.h"

namespace keyrep {

enum class SceneKind { kPlane, kCorridor, kBoxes };

std::string_view to_string(SceneKind kind);
SceneKind parse_scene_kind(std::string_view name);

// Surface classes written into synthetic label maps.
enum SceneClass : ClassId {
  kClassSky = 0,
  kClassFloor = 1,
  kClassWall = 2,
  kClassBox = 3,
  kClassPlane = 4,
};

ClassNames scene_class_names();

struct Texture {
  enum class Kind { kCheckerboard, kValueNoise };
  Kind kind = Kind::kValueNoise;
  // Checker cell, or the coarsest noise lattice spacing, in texels. The
  // noise default spans 2 m down to 3 cm at 64 texels per meter.
  int cell = 128;
  std::uint64_t seed = 1;
  int octaves = 7;
  double texels_per_meter = 64.0;
};

struct Box {
  Vec3 min;
  Vec3 max;
};

// Analytic scene in world coordinates (camera convention: x right, y down,
// z forward).
struct SceneSpec {
  SceneKind kind = SceneKind::kPlane;
  Texture texture;
  std::vector<Pose> trajectory;  // camera-to-world, one per frame
  CameraIntrinsics intrinsics{200.0, 200.0, 79.5, 59.5};
  int width = 160;
  int height = 120;

  // kPlane: {X : plane_normal . X + plane_offset = 0}
  Vec3 plane_normal = Vec3(0, 0, -1);
  double plane_offset = 5.0;

  // kCorridor: floor at y = floor_y between walls at x = +-half_width; walls
  // rise wall_height above the floor. Open above (sky).
  double half_width = 2.0;
  double floor_y = 1.5;
  double wall_height = 3.0;

  // kBoxes: boxes in front of a back wall at z = back_wall_z.
  std::vector<Box> boxes;
  double back_wall_z = 20.0;

  double max_range = 1000.0;

  void validate() const;
};

struct SurfaceHit {
  double depth = 0.0;  // z-depth in the casting camera
  Vec3 point;          // world coordinates
  ClassId label = kClassSky;
  double intensity = 0.0;
};

// Casts the ray through the (sub-pixel) position `pixel` of a camera at
// `pose`. Empty when no surface is hit within max_range.
std::optional<SurfaceHit> cast_ray(const SceneSpec& spec, const Pose& pose,
                                   const Vec2& pixel);

// Nearest positive ray parameter along world-space `dir` from `origin`,
// over all scene surfaces; `dir` need not be normalized.
std::optional<double> first_hit_distance(const SceneSpec& spec, const Vec3& origin,
                                         const Vec3& dir);

FrameBundle render(const SceneSpec& spec, std::size_t frame_index);

// Exact plane-induced homography from frame i to frame j. Throws
// Unsupported for non-planar scenes.
Homography ground_truth_homography(const SceneSpec& spec, std::size_t i, std::size_t j);

// Rotation R = Rz(z) * Ry(y) * Rx(x), angles in radians.
Mat3 euler_rotation(const Vec3& angles);

// Pose k has center start + k * step and rotation euler(angles0 + k * dangles).
std::vector<Pose> linear_trajectory(const Vec3& start, const Vec3& step, int frames,
                                    const Vec3& angles0 = Vec3::Zero(),
                                    const Vec3& dangles = Vec3::Zero());

// Scene description from `key = value` text (see README for the keys).
SceneSpec scene_from_config(const KeyValueConfig& cfg);

// Renders every frame and writes images (PGM), depth (raw DPTH), labels (PGM)
// and manifest.txt into out_dir. Returns the written manifest.
DatasetManifest write_synthetic_dataset(const SceneSpec& spec,
                                        const std::filesystem::path& out_dir);

}  // namespace keyrep
