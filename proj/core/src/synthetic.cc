#include "keyrep/synthetic.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <string>

#include <Eigen/Geometry>

#include "keyrep/error.h"

namespace keyrep {
namespace fs = std::filesystem;

namespace {

constexpr double kMinHit = 1e-9;
constexpr float kSkyIntensity = 0.6f;

std::uint64_t splitmix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

double lattice_noise(std::uint64_t seed, std::uint64_t salt, int octave, long i, long j) {
  std::uint64_t h = splitmix(seed);
  h = splitmix(h ^ salt);
  h = splitmix(h ^ static_cast<std::uint64_t>(octave));
  h = splitmix(h ^ static_cast<std::uint64_t>(i));
  h = splitmix(h ^ static_cast<std::uint64_t>(j));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

long floordiv(long a, long b) {
  const long q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

template <typename Lattice>
double bilinear(double s, double t, Lattice&& lattice) {
  const double fs = std::floor(s);
  const double ft = std::floor(t);
  const long i = static_cast<long>(fs);
  const long j = static_cast<long>(ft);
  const double a = s - fs;
  const double b = t - ft;
  return (1 - a) * (1 - b) * lattice(i, j) + a * (1 - b) * lattice(i + 1, j) +
         (1 - a) * b * lattice(i, j + 1) + a * b * lattice(i + 1, j + 1);
}

// Detail with lattice spacing below one pixel footprint cannot be resolved;
// it fades to its mean between one and two footprints so distant surfaces
// do not alias into pixel noise.
double detail_weight(double spacing, double footprint) {
  return std::clamp(spacing / footprint - 1.0, 0.0, 1.0);
}

// `footprint` is the pixel size on the surface, in texels.
double texture_value(const Texture& tex, std::uint64_t salt, double u, double v,
                     double footprint) {
  const double s = u * tex.texels_per_meter;
  const double t = v * tex.texels_per_meter;
  if (tex.kind == Texture::Kind::kCheckerboard) {
    const long cell = tex.cell;
    const double c = bilinear(s, t, [cell](long i, long j) {
      return ((floordiv(i, cell) + floordiv(j, cell)) & 1) ? 0.85 : 0.15;
    });
    return 0.5 + detail_weight(tex.cell, footprint) * (c - 0.5);
  }
  double sum = 0.0;
  double norm = 0.0;
  double amplitude = 1.0;
  for (int o = 0; o < tex.octaves; ++o) {
    const double spacing = tex.cell / std::exp2(o);
    const double w = detail_weight(spacing, footprint);
    if (w > 0.0) {
      sum += amplitude * w *
             (bilinear(s / spacing, t / spacing,
                       [&](long i, long j) { return lattice_noise(tex.seed, salt, o, i, j); }) -
              0.5);
    }
    norm += amplitude;
    amplitude *= 0.5;
  }
  sum += 0.5 * norm;
  return std::clamp(0.5 + 1.8 * (sum / norm - 0.5), 0.0, 1.0);
}

struct Candidate {
  double lambda = 0.0;
  ClassId label = kClassSky;
  std::uint64_t salt = 0;
  double u = 0.0;
  double v = 0.0;
  Vec3 normal = Vec3::UnitZ();
};

void consider(std::optional<Candidate>& best, const Candidate& c) {
  if (!(c.lambda > kMinHit)) return;
  if (!best || c.lambda < best->lambda) best = c;
}

// Axis-aligned plane coordinate[axis] == value; the caller filters the hit.
std::optional<double> axis_plane(const Vec3& o, const Vec3& d, int axis, double value) {
  if (d(axis) == 0.0) return std::nullopt;
  const double lambda = (value - o(axis)) / d(axis);
  if (!(lambda > kMinHit)) return std::nullopt;
  return lambda;
}

std::optional<Candidate> intersect(const SceneSpec& spec, const Vec3& o, const Vec3& d) {
  std::optional<Candidate> best;
  switch (spec.kind) {
    case SceneKind::kPlane: {
      const double denom = spec.plane_normal.dot(d);
      if (denom != 0.0) {
        const double lambda = -(spec.plane_normal.dot(o) + spec.plane_offset) / denom;
        const Vec3 p = o + lambda * d;
        // In-plane basis from the normal.
        const Vec3 n = spec.plane_normal;
        const Vec3 helper = std::abs(n.x()) < 0.9 ? Vec3::UnitX() : Vec3::UnitY();
        const Vec3 e1 = n.cross(helper).normalized();
        const Vec3 e2 = n.cross(e1);
        consider(best, {lambda, kClassPlane, 0, p.dot(e1), p.dot(e2), n});
      }
      break;
    }
    case SceneKind::kCorridor: {
      const double top = spec.floor_y - spec.wall_height;
      if (auto l = axis_plane(o, d, 1, spec.floor_y)) {
        const Vec3 p = o + *l * d;
        if (std::abs(p.x()) <= spec.half_width) {
          consider(best, {*l, kClassFloor, 1, p.x(), p.z(), Vec3::UnitY()});
        }
      }
      for (int side = 0; side < 2; ++side) {
        const double x = side == 0 ? -spec.half_width : spec.half_width;
        if (auto l = axis_plane(o, d, 0, x)) {
          const Vec3 p = o + *l * d;
          if (p.y() <= spec.floor_y && p.y() >= top) {
            consider(best, {*l, kClassWall, 2u + side, p.z(), p.y(), Vec3::UnitX()});
          }
        }
      }
      break;
    }
    case SceneKind::kBoxes: {
      if (auto l = axis_plane(o, d, 2, spec.back_wall_z)) {
        const Vec3 p = o + *l * d;
        consider(best, {*l, kClassWall, 2, p.x(), p.y(), Vec3::UnitZ()});
      }
      for (std::size_t b = 0; b < spec.boxes.size(); ++b) {
        const Box& box = spec.boxes[b];
        for (int axis = 0; axis < 3; ++axis) {
          for (int side = 0; side < 2; ++side) {
            const double value = side == 0 ? box.min(axis) : box.max(axis);
            auto l = axis_plane(o, d, axis, value);
            if (!l) continue;
            const Vec3 p = o + *l * d;
            const int a1 = (axis + 1) % 3;
            const int a2 = (axis + 2) % 3;
            if (p(a1) < box.min(a1) || p(a1) > box.max(a1) || p(a2) < box.min(a2) ||
                p(a2) > box.max(a2)) {
              continue;
            }
            const std::uint64_t salt = 16 + b * 6 + axis * 2 + side;
            consider(best, {*l, kClassBox, salt, p(a1), p(a2), Vec3::Unit(axis)});
          }
        }
      }
      break;
    }
  }
  if (best && best->lambda > spec.max_range) return std::nullopt;
  return best;
}

std::string frame_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "frame_%04zu", i);
  return buf;
}

}  // namespace

std::string_view to_string(SceneKind kind) {
  switch (kind) {
    case SceneKind::kPlane:
      return "plane";
    case SceneKind::kCorridor:
      return "corridor";
    case SceneKind::kBoxes:
      return "boxes";
  }
  return "unknown";
}

SceneKind parse_scene_kind(std::string_view name) {
  if (name == "plane") return SceneKind::kPlane;
  if (name == "corridor") return SceneKind::kCorridor;
  if (name == "boxes") return SceneKind::kBoxes;
  throw ParameterError("unknown scene kind '" + std::string(name) + "'");
}

ClassNames scene_class_names() {
  return {{kClassSky, "sky"},
          {kClassFloor, "floor"},
          {kClassWall, "wall"},
          {kClassBox, "box"},
          {kClassPlane, "plane"}};
}

void SceneSpec::validate() const {
  if (trajectory.empty()) throw ParameterError("scene trajectory is empty");
  if (width < 64 || height < 64) throw ParameterError("scene images must be at least 64x64");
  if (texture.cell < 1 || texture.octaves < 1 || !(texture.texels_per_meter > 0.0)) {
    throw ParameterError("invalid texture parameters");
  }
  if (!(max_range > 0.0)) throw ParameterError("max_range must be positive");
  switch (kind) {
    case SceneKind::kPlane:
      if (std::abs(plane_normal.norm() - 1.0) > 1e-9) {
        throw ParameterError("plane normal must be unit length");
      }
      break;
    case SceneKind::kCorridor:
      if (!(half_width > 0.0 && wall_height > 0.0)) {
        throw ParameterError("corridor dimensions must be positive");
      }
      break;
    case SceneKind::kBoxes:
      for (const Box& b : boxes) {
        if (!(b.min.array() < b.max.array()).all()) {
          throw ParameterError("box min corner must be below max corner");
        }
      }
      break;
  }
}

std::optional<double> first_hit_distance(const SceneSpec& spec, const Vec3& origin,
                                         const Vec3& dir) {
  const auto c = intersect(spec, origin, dir);
  if (!c) return std::nullopt;
  return c->lambda;
}

std::optional<SurfaceHit> cast_ray(const SceneSpec& spec, const Pose& pose,
                                   const Vec2& pixel) {
  const CameraIntrinsics& k = spec.intrinsics;
  const Vec3 dir_cam((pixel.x() - k.cx()) / k.fx(), (pixel.y() - k.cy()) / k.fy(), 1.0);
  const Vec3 origin = pose.translation();
  const Vec3 dir = pose.rotation() * dir_cam;
  const auto c = intersect(spec, origin, dir);
  if (!c) return std::nullopt;
  SurfaceHit hit;
  // dir_cam has unit z, so the ray parameter is the z-depth.
  hit.depth = c->lambda;
  hit.point = origin + c->lambda * dir;
  hit.label = c->label;
  // Pixel footprint on the surface: z / f meters across, stretched by the
  // incidence angle (capped for grazing views).
  const double cos_incidence = std::abs(c->normal.dot(dir.normalized()));
  const double meters = c->lambda / std::sqrt(k.fx() * k.fy()) / std::max(cos_incidence, 0.1);
  hit.intensity = texture_value(spec.texture, c->salt, c->u, c->v,
                                meters * spec.texture.texels_per_meter);
  return hit;
}

FrameBundle render(const SceneSpec& spec, std::size_t frame_index) {
  spec.validate();
  if (frame_index >= spec.trajectory.size()) {
    throw ParameterError("frame index " + std::to_string(frame_index) +
                         " outside trajectory");
  }
  const Pose& pose = spec.trajectory[frame_index];
  const int w = spec.width;
  const int h = spec.height;
  std::vector<float> pixels(static_cast<std::size_t>(w) * h, kSkyIntensity);
  DepthMap depth(w, h, 0.0);
  Raster<int> labels(w, h, kClassSky);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const auto hit = cast_ray(spec, pose, Vec2(x, y));
      if (!hit) continue;
      pixels[static_cast<std::size_t>(y) * w + x] = static_cast<float>(hit->intensity);
      depth(x, y) = hit->depth;
      labels(x, y) = hit->label;
    }
  }
  FrameBundle b;
  b.frame_id = frame_name(frame_index);
  b.image = ImageGray(w, h, std::move(pixels));
  b.depth = std::move(depth);
  b.pose = pose;
  b.intrinsics = spec.intrinsics;
  b.labels = LabelMap(std::move(labels), scene_class_names());
  return b;
}

Homography ground_truth_homography(const SceneSpec& spec, std::size_t i, std::size_t j) {
  if (spec.kind != SceneKind::kPlane) {
    throw Unsupported("ground-truth homography exists only for planar scenes");
  }
  if (i >= spec.trajectory.size() || j >= spec.trajectory.size()) {
    throw ParameterError("frame index outside trajectory");
  }
  const Pose& pi = spec.trajectory[i];
  const Pose& pj = spec.trajectory[j];
  // World plane n.X + c = 0 in camera-i coordinates: X = R Xc + t.
  Plane plane;
  plane.normal = pi.rotation().transpose() * spec.plane_normal;
  plane.distance = spec.plane_normal.dot(pi.translation()) + spec.plane_offset;
  if (plane.distance == 0.0) throw DegenerateMapping("camera center lies on the plane");
  if (plane.distance < 0.0) {
    plane.normal = -plane.normal;
    plane.distance = -plane.distance;
  }
  plane.normal.normalize();
  return plane_induced_homography(relative_pose(pi, pj), plane, spec.intrinsics,
                                  spec.intrinsics);
}

Mat3 euler_rotation(const Vec3& angles) {
  return (Eigen::AngleAxisd(angles.z(), Vec3::UnitZ()) *
          Eigen::AngleAxisd(angles.y(), Vec3::UnitY()) *
          Eigen::AngleAxisd(angles.x(), Vec3::UnitX()))
      .toRotationMatrix();
}

std::vector<Pose> linear_trajectory(const Vec3& start, const Vec3& step, int frames,
                                    const Vec3& angles0, const Vec3& dangles) {
  if (frames < 1) throw ParameterError("trajectory needs at least one frame");
  std::vector<Pose> out;
  out.reserve(frames);
  for (int k = 0; k < frames; ++k) {
    out.push_back(Pose::from_approximate(euler_rotation(angles0 + k * dangles),
                                         start + k * step));
  }
  return out;
}

namespace {

Vec3 vec3_key(const KeyValueConfig& cfg, const std::string& key, const Vec3& fallback) {
  if (!cfg.has(key)) return fallback;
  const auto v = cfg.get_doubles(key);
  if (v.size() != 3) throw ParseError(key + ": expected 3 numbers");
  return {v[0], v[1], v[2]};
}

}  // namespace

SceneSpec scene_from_config(const KeyValueConfig& cfg) {
  SceneSpec s;
  s.kind = parse_scene_kind(cfg.get_string("kind", "plane"));
  s.width = static_cast<int>(cfg.get_int("width", s.width));
  s.height = static_cast<int>(cfg.get_int("height", s.height));
  if (cfg.has("intrinsics")) {
    const auto k = cfg.get_doubles("intrinsics");
    if (k.size() != 4) throw ParseError("intrinsics: expected fx fy cx cy");
    s.intrinsics = CameraIntrinsics(k[0], k[1], k[2], k[3]);
  } else {
    s.intrinsics = CameraIntrinsics(s.width, s.width, 0.5 * (s.width - 1),
                                    0.5 * (s.height - 1));
  }

  const std::string tex = cfg.get_string("texture", "value_noise");
  if (tex == "checkerboard") {
    s.texture.kind = Texture::Kind::kCheckerboard;
  } else if (tex == "value_noise") {
    s.texture.kind = Texture::Kind::kValueNoise;
  } else {
    throw ParseError("texture: expected checkerboard or value_noise, got '" + tex + "'");
  }
  s.texture.cell = static_cast<int>(cfg.get_int("texture.cell", s.texture.cell));
  s.texture.seed = static_cast<std::uint64_t>(cfg.get_int("texture.seed", 1));
  s.texture.octaves = static_cast<int>(cfg.get_int("texture.octaves", s.texture.octaves));
  s.texture.texels_per_meter =
      cfg.get_double("texture.texels_per_meter", s.texture.texels_per_meter);

  const int frames = static_cast<int>(cfg.get_int("trajectory.frames", 10));
  s.trajectory = linear_trajectory(vec3_key(cfg, "trajectory.start", Vec3::Zero()),
                                   vec3_key(cfg, "trajectory.step", Vec3(0, 0, 1)), frames,
                                   vec3_key(cfg, "trajectory.angles", Vec3::Zero()),
                                   vec3_key(cfg, "trajectory.angle_step", Vec3::Zero()));

  s.plane_normal = vec3_key(cfg, "plane.normal", s.plane_normal).normalized();
  s.plane_offset = cfg.get_double("plane.offset", s.plane_offset);
  s.half_width = cfg.get_double("corridor.half_width", s.half_width);
  s.floor_y = cfg.get_double("corridor.floor_y", s.floor_y);
  s.wall_height = cfg.get_double("corridor.wall_height", s.wall_height);
  s.back_wall_z = cfg.get_double("back_wall.z", s.back_wall_z);
  s.max_range = cfg.get_double("max_range", s.max_range);
  for (int i = 0;; ++i) {
    const std::string key = "box." + std::to_string(i);
    if (!cfg.has(key)) break;
    const auto v = cfg.get_doubles(key);
    if (v.size() != 6) throw ParseError(key + ": expected 6 numbers");
    s.boxes.push_back({Vec3(v[0], v[1], v[2]), Vec3(v[3], v[4], v[5])});
  }
  s.validate();
  return s;
}

DatasetManifest write_synthetic_dataset(const SceneSpec& spec, const fs::path& out_dir) {
  spec.validate();
  std::error_code ec;
  for (const char* sub : {"images", "depth", "labels"}) {
    fs::create_directories(out_dir / sub, ec);
    if (ec) throw IoError("cannot create " + (out_dir / sub).string() + ": " + ec.message());
  }
  DatasetManifest m;
  m.root = out_dir;
  m.intrinsics = spec.intrinsics;
  m.depth_scale = 1.0;
  m.class_names = scene_class_names();
  for (std::size_t i = 0; i < spec.trajectory.size(); ++i) {
    const FrameBundle b = render(spec, i);
    FrameRecord rec;
    rec.frame_id = b.frame_id;
    rec.image_path = "images/" + b.frame_id + ".pgm";
    rec.depth_path = "depth/" + b.frame_id + ".dpth";
    rec.label_path = "labels/" + b.frame_id + ".pgm";
    rec.pose = b.pose;
    write_pgm(out_dir / rec.image_path, b.image);
    write_depth_raw(out_dir / *rec.depth_path, *b.depth);
    write_pgm(out_dir / *rec.label_path, b.labels->ids());
    m.frames.push_back(std::move(rec));
  }
  write_manifest(m, out_dir / "manifest.txt");
  return m;
}

}  // namespace keyrep
