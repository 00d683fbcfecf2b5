#include <charconv>
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

constexpr double kManifestRotationTolerance = 1e-6;

std::vector<std::string> tokenize(const std::string& line, int line_no) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i >= line.size()) break;
    std::string tok;
    if (line[i] == '"') {
      ++i;
      bool closed = false;
      while (i < line.size()) {
        const char c = line[i++];
        if (c == '\\' && i < line.size()) {
          tok.push_back(line[i++]);
        } else if (c == '"') {
          closed = true;
          break;
        } else {
          tok.push_back(c);
        }
      }
      if (!closed) throw ParseError("unterminated quoted token", line_no);
    } else {
      while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) {
        tok.push_back(line[i++]);
      }
    }
    out.push_back(std::move(tok));
  }
  return out;
}

std::string quote(const std::string& s) {
  const bool plain = !s.empty() && s.find_first_of(" \t\"\\#") == std::string::npos;
  if (plain) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    out.push_back(c);
  }
  out.push_back('"');
  return out;
}

std::string fmt_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

double number(const std::string& tok, int line_no) {
  try {
    return parse_double(tok, "value");
  } catch (const ParseError& e) {
    throw ParseError(e.what(), line_no);
  }
}

Pose parse_pose(const std::vector<std::string>& tok, std::size_t first, int line_no) {
  double v[12];
  for (int i = 0; i < 12; ++i) v[i] = number(tok[first + i], line_no);
  Mat3 r;
  Vec3 t;
  for (int row = 0; row < 3; ++row) {
    for (int col = 0; col < 3; ++col) r(row, col) = v[row * 4 + col];
    t(row) = v[row * 4 + 3];
  }
  const double err = orthonormality_error(r);
  if (err > kManifestRotationTolerance ||
      std::abs(r.determinant() - 1.0) > kManifestRotationTolerance) {
    throw ParseError("pose rotation is not orthonormal (error " + fmt_double(err) + ")",
                     line_no);
  }
  return Pose::from_approximate(r, t);
}

void require_file(const fs::path& root, const std::string& rel, int line_no) {
  if (!fs::is_regular_file(root / rel)) {
    throw ParseError("referenced file does not exist: " + (root / rel).string(), line_no);
  }
}

std::string rebase(const fs::path& from_root, const std::string& rel,
                   const fs::path& to_dir) {
  const fs::path abs = fs::absolute(from_root / rel).lexically_normal();
  const fs::path dest = fs::absolute(to_dir).lexically_normal();
  const fs::path out = abs.lexically_relative(dest);
  return (out.empty() ? abs : out).generic_string();
}

}  // namespace

std::size_t DatasetManifest::index_of(const std::string& frame_id) const {
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].frame_id == frame_id) return i;
  }
  throw ParameterError("unknown frame id '" + frame_id + "'");
}

FrameBundle DatasetManifest::load_frame(std::size_t index) const {
  const FrameRecord& rec = frames.at(index);
  FrameBundle b;
  b.frame_id = rec.frame_id;
  b.image = load_image(root / rec.image_path);
  if (rec.depth_path) b.depth = load_depth(root / *rec.depth_path, depth_scale);
  if (rec.label_path) b.labels = load_labels(root / *rec.label_path, class_names);
  b.pose = rec.pose;
  b.intrinsics = intrinsics;
  try {
    b.validate();
  } catch (const ParameterError& e) {
    throw ParseError(e.what());
  }
  return b;
}

DatasetManifest parse_manifest(const std::string& text, const fs::path& root,
                               bool check_files) {
  DatasetManifest m;
  m.root = root;
  bool have_intrinsics = false;
  bool have_scale = false;
  std::set<std::string> ids;

  std::istringstream in(text);
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    const auto tok = tokenize(line, line_no);
    if (tok.empty() || (!tok[0].empty() && tok[0].front() == '#')) continue;

    if (tok.size() >= 2 && tok[1] == "image") {
      // <id> image P depth P [label P] pose 12*num
      const bool labelled = tok.size() == 20;
      if (tok.size() != 18 && tok.size() != 20) {
        throw ParseError("frame line needs 18 or 20 tokens, got " +
                             std::to_string(tok.size()),
                         line_no);
      }
      std::size_t i = 3;
      if (tok[i] != "depth") throw ParseError("expected 'depth'", line_no);
      FrameRecord rec;
      rec.frame_id = tok[0];
      rec.image_path = tok[2];
      if (tok[i + 1] != "-") rec.depth_path = tok[i + 1];
      i += 2;
      if (labelled) {
        if (tok[i] != "label") throw ParseError("expected 'label'", line_no);
        rec.label_path = tok[i + 1];
        i += 2;
      }
      if (tok[i] != "pose") throw ParseError("expected 'pose'", line_no);
      rec.pose = parse_pose(tok, i + 1, line_no);
      if (!ids.insert(rec.frame_id).second) {
        throw ParseError("duplicate frame id '" + rec.frame_id + "'", line_no);
      }
      if (check_files) {
        require_file(root, rec.image_path, line_no);
        if (rec.depth_path) require_file(root, *rec.depth_path, line_no);
        if (rec.label_path) require_file(root, *rec.label_path, line_no);
      }
      m.frames.push_back(std::move(rec));
    } else if (tok[0] == "intrinsics") {
      if (tok.size() != 5) throw ParseError("intrinsics needs 4 numbers", line_no);
      try {
        m.intrinsics = CameraIntrinsics(number(tok[1], line_no), number(tok[2], line_no),
                                        number(tok[3], line_no), number(tok[4], line_no));
      } catch (const ParameterError& e) {
        throw ParseError(e.what(), line_no);
      }
      have_intrinsics = true;
    } else if (tok[0] == "depth_scale") {
      if (tok.size() != 2) throw ParseError("depth_scale needs 1 number", line_no);
      m.depth_scale = number(tok[1], line_no);
      if (!(m.depth_scale > 0.0)) throw ParseError("depth_scale must be positive", line_no);
      have_scale = true;
    } else if (tok[0] == "class") {
      if (tok.size() != 3) throw ParseError("class needs an id and a name", line_no);
      const double id = number(tok[1], line_no);
      if (id != std::floor(id)) throw ParseError("class id must be an integer", line_no);
      m.class_names[static_cast<ClassId>(id)] = tok[2];
    } else {
      throw ParseError("unrecognized line starting with '" + tok[0] + "'", line_no);
    }
  }
  if (!have_intrinsics) throw ParseError("manifest has no intrinsics line");
  if (!have_scale) throw ParseError("manifest has no depth_scale line");
  return m;
}

DatasetManifest load_manifest(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return parse_manifest(ss.str(), path.parent_path());
  } catch (const ParseError& e) {
    throw ParseError(path.string() + ": " + e.what());
  }
}

std::string format_manifest(const DatasetManifest& m, const fs::path& relative_to) {
  std::ostringstream out;
  out << "intrinsics " << fmt_double(m.intrinsics.fx()) << ' '
      << fmt_double(m.intrinsics.fy()) << ' ' << fmt_double(m.intrinsics.cx()) << ' '
      << fmt_double(m.intrinsics.cy()) << '\n';
  out << "depth_scale " << fmt_double(m.depth_scale) << '\n';
  for (const auto& [id, name] : m.class_names) {
    out << "class " << id << ' ' << quote(name) << '\n';
  }
  for (const FrameRecord& f : m.frames) {
    out << quote(f.frame_id) << " image " << quote(rebase(m.root, f.image_path, relative_to))
        << " depth "
        << (f.depth_path ? quote(rebase(m.root, *f.depth_path, relative_to)) : "-");
    if (f.label_path) out << " label " << quote(rebase(m.root, *f.label_path, relative_to));
    out << " pose";
    const Mat3& r = f.pose.rotation();
    const Vec3& t = f.pose.translation();
    for (int row = 0; row < 3; ++row) {
      for (int col = 0; col < 3; ++col) out << ' ' << fmt_double(r(row, col));
      out << ' ' << fmt_double(t(row));
    }
    out << '\n';
  }
  return out.str();
}

void write_manifest(const DatasetManifest& m, const fs::path& path) {
  const fs::path dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  const std::string text = format_manifest(m, dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write manifest " + path.string());
  out << text;
  if (!out) throw IoError("failed writing manifest " + path.string());
}

}  // namespace keyrep
