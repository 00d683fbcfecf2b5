#include <png.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>

#include "keyrep/dataset_io.h"
#include "keyrep/error.h"

namespace keyrep {
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kMaxPixels = std::uint64_t{1} << 28;

// Decoded single-channel raster before unit conversion.
struct RawRaster {
  int width = 0;
  int height = 0;
  int max_value = 255;  // 255 or 65535 for PNG; PGM maxval otherwise
  std::vector<std::uint16_t> samples;
};

std::vector<unsigned char> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return std::vector<unsigned char>(std::istreambuf_iterator<char>(in), {});
}

bool is_png(const std::vector<unsigned char>& bytes) {
  static constexpr unsigned char kSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  return bytes.size() >= 8 && std::memcmp(bytes.data(), kSig, 8) == 0;
}

bool is_pgm(const std::vector<unsigned char>& bytes) {
  return bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5';
}

void check_dims(std::uint64_t w, std::uint64_t h, const fs::path& path) {
  if (w == 0 || h == 0 || w > std::numeric_limits<int>::max() ||
      h > std::numeric_limits<int>::max() || w * h > kMaxPixels) {
    throw ParseError(path.string() + ": invalid raster dimensions " + std::to_string(w) +
                     "x" + std::to_string(h));
  }
}

RawRaster decode_pgm(const std::vector<unsigned char>& bytes, const fs::path& path) {
  std::size_t pos = 2;
  auto next_number = [&]() -> std::uint64_t {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw ParseError(path.string() + ": malformed PGM header");
    }
    std::uint64_t v = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      v = v * 10 + (bytes[pos++] - '0');
      if (v > (std::uint64_t{1} << 40)) throw ParseError(path.string() + ": PGM header overflow");
    }
    return v;
  };
  const std::uint64_t w = next_number();
  const std::uint64_t h = next_number();
  const std::uint64_t maxval = next_number();
  check_dims(w, h, path);
  if (maxval == 0 || maxval > 65535) throw ParseError(path.string() + ": bad PGM maxval");
  if (pos >= bytes.size() || !std::isspace(bytes[pos])) {
    throw ParseError(path.string() + ": malformed PGM header");
  }
  ++pos;  // single whitespace before the payload
  const std::size_t bpp = maxval > 255 ? 2 : 1;
  const std::uint64_t n = w * h;
  if (bytes.size() - pos < n * bpp) throw ParseError(path.string() + ": truncated PGM payload");

  RawRaster r;
  r.width = static_cast<int>(w);
  r.height = static_cast<int>(h);
  r.max_value = static_cast<int>(maxval);
  r.samples.resize(n);
  for (std::uint64_t i = 0; i < n; ++i) {
    r.samples[i] = bpp == 1 ? bytes[pos + i]
                            : static_cast<std::uint16_t>((bytes[pos + 2 * i] << 8) |
                                                         bytes[pos + 2 * i + 1]);
    if (r.samples[i] > maxval) throw ParseError(path.string() + ": PGM sample exceeds maxval");
  }
  return r;
}

struct PngReader {
  const std::vector<unsigned char>* bytes;
  std::size_t offset;
};

void png_read_from_memory(png_structp png, png_bytep out, png_size_t length) {
  auto* src = static_cast<PngReader*>(png_get_io_ptr(png));
  if (src->offset + length > src->bytes->size()) {
    png_error(png, "truncated PNG data");
  }
  std::memcpy(out, src->bytes->data() + src->offset, length);
  src->offset += length;
}

void png_silent_warning(png_structp, png_const_charp) {}

RawRaster decode_png(const std::vector<unsigned char>& bytes, const fs::path& path) {
  // Everything with a destructor lives outside the setjmp scope.
  RawRaster r;
  std::vector<png_bytep> rows;
  std::vector<unsigned char> buffer;
  PngReader reader{&bytes, 0};
  char message[256] = "";

  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                           png_silent_warning);
  if (!png) throw IoError("libpng initialization failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialization failed");
  }
  volatile int failure = 0;  // 1 = libpng error, 2 = unsupported layout, 3 = bad dims
  if (setjmp(png_jmpbuf(png))) {
    failure = 1;
  } else {
    png_set_read_fn(png, &reader, png_read_from_memory);
    png_read_info(png, info);
    const png_uint_32 w = png_get_image_width(png, info);
    const png_uint_32 h = png_get_image_height(png, info);
    const int depth = png_get_bit_depth(png, info);
    const int color = png_get_color_type(png, info);
    if (color != PNG_COLOR_TYPE_GRAY) {
      std::snprintf(message, sizeof(message), "PNG must be single-channel gray");
      failure = 2;
    } else if (w == 0 || h == 0 || std::uint64_t{w} * h > kMaxPixels) {
      failure = 3;
    } else {
      if (depth < 8) png_set_expand_gray_1_2_4_to_8(png);
      png_read_update_info(png, info);
      const std::size_t stride = png_get_rowbytes(png, info);
      buffer.resize(stride * h);
      rows.resize(h);
      for (png_uint_32 y = 0; y < h; ++y) rows[y] = buffer.data() + y * stride;
      png_read_image(png, rows.data());
      r.width = static_cast<int>(w);
      r.height = static_cast<int>(h);
      r.max_value = depth == 16 ? 65535 : 255;
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);

  if (failure == 1) throw ParseError(path.string() + ": corrupt or truncated PNG");
  if (failure == 2) throw ParseError(path.string() + ": " + message);
  if (failure == 3) throw ParseError(path.string() + ": invalid PNG dimensions");

  const std::size_t n = static_cast<std::size_t>(r.width) * r.height;
  r.samples.resize(n);
  if (r.max_value == 65535) {
    for (std::size_t i = 0; i < n; ++i) {
      r.samples[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) r.samples[i] = buffer[i];
  }
  return r;
}

RawRaster decode_integer_raster(const fs::path& path) {
  const auto bytes = read_file(path);
  if (is_png(bytes)) return decode_png(bytes, path);
  if (is_pgm(bytes)) return decode_pgm(bytes, path);
  throw ParseError(path.string() + ": unsupported raster format");
}

std::uint32_t read_u32_le(const unsigned char* p) {
  return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) |
         (std::uint32_t{p[3]} << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t v) {
  const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                              static_cast<unsigned char>(v >> 16),
                              static_cast<unsigned char>(v >> 24)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

void make_parent(const fs::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
}

std::ofstream open_out(const fs::path& path) {
  make_parent(path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_pgm_bytes(const fs::path& path, int w, int h, const std::vector<unsigned char>& px) {
  auto out = open_out(path);
  out << "P5\n" << w << ' ' << h << "\n255\n";
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

}  // namespace

ImageGray load_image(const fs::path& path) {
  const RawRaster r = decode_integer_raster(path);
  std::vector<float> px(r.samples.size());
  const float scale = 1.0f / static_cast<float>(r.max_value);
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = std::min(1.0f, static_cast<float>(r.samples[i]) * scale);
  }
  return ImageGray(r.width, r.height, std::move(px));
}

DepthMap load_depth(const fs::path& path, double depth_scale) {
  if (!(depth_scale > 0.0)) throw ParameterError("depth_scale must be positive");
  const auto bytes = read_file(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), kDepthMagic, 4) == 0) {
    if (bytes.size() < 16) throw ParseError(path.string() + ": truncated depth header");
    const std::uint64_t w = read_u32_le(bytes.data() + 4);
    const std::uint64_t h = read_u32_le(bytes.data() + 8);
    check_dims(w, h, path);
    const std::uint64_t n = w * h;
    if (bytes.size() - 16 < n * 4) throw ParseError(path.string() + ": truncated depth payload");
    if (bytes.size() - 16 > n * 4) throw ParseError(path.string() + ": trailing bytes after depth payload");
    std::vector<double> meters(n);
    for (std::uint64_t i = 0; i < n; ++i) {
      const float v = std::bit_cast<float>(read_u32_le(bytes.data() + 16 + 4 * i));
      meters[i] = is_valid_depth(v) ? static_cast<double>(v) : 0.0;
    }
    return DepthMap(static_cast<int>(w), static_cast<int>(h), std::move(meters));
  }
  if (is_png(bytes)) {
    const RawRaster r = decode_png(bytes, path);
    std::vector<double> meters(r.samples.size());
    for (std::size_t i = 0; i < meters.size(); ++i) {
      meters[i] = r.samples[i] == 0 ? 0.0 : r.samples[i] * depth_scale;
    }
    return DepthMap(r.width, r.height, std::move(meters));
  }
  throw ParseError(path.string() + ": unsupported depth format");
}

LabelMap load_labels(const fs::path& path, ClassNames names) {
  const RawRaster r = decode_integer_raster(path);
  std::vector<int> ids(r.samples.begin(), r.samples.end());
  return LabelMap(Raster<int>(r.width, r.height, std::move(ids)), std::move(names));
}

void write_pgm(const fs::path& path, const ImageGray& img) {
  std::vector<unsigned char> px(img.data().size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<unsigned char>(std::lround(img.data()[i] * 255.0f));
  }
  write_pgm_bytes(path, img.width(), img.height(), px);
}

void write_pgm(const fs::path& path, const Raster<int>& values) {
  std::vector<unsigned char> px(values.data().size());
  for (std::size_t i = 0; i < px.size(); ++i) {
    px[i] = static_cast<unsigned char>(std::clamp(values.data()[i], 0, 255));
  }
  write_pgm_bytes(path, values.width(), values.height(), px);
}

void write_depth_raw(const fs::path& path, const DepthMap& depth) {
  auto out = open_out(path);
  out.write(kDepthMagic, 4);
  write_u32_le(out, static_cast<std::uint32_t>(depth.width()));
  write_u32_le(out, static_cast<std::uint32_t>(depth.height()));
  write_u32_le(out, 0);
  for (double d : depth.data()) {
    const float v = is_valid_depth(d) ? static_cast<float>(d) : 0.0f;
    write_u32_le(out, std::bit_cast<std::uint32_t>(v));
  }
  if (!out) throw IoError("failed writing " + path.string());
}

void write_png(const fs::path& path, const Raster<int>& values, int bit_depth) {
  if (bit_depth != 8 && bit_depth != 16) throw ParameterError("PNG bit depth must be 8 or 16");
  const int w = values.width();
  const int h = values.height();
  const int bpp = bit_depth / 8;
  const int maxv = bit_depth == 16 ? 65535 : 255;
  std::vector<unsigned char> buffer(static_cast<std::size_t>(w) * h * bpp);
  for (std::size_t i = 0; i < values.data().size(); ++i) {
    const int v = std::clamp(values.data()[i], 0, maxv);
    if (bpp == 2) {
      buffer[2 * i] = static_cast<unsigned char>(v >> 8);
      buffer[2 * i + 1] = static_cast<unsigned char>(v & 0xff);
    } else {
      buffer[i] = static_cast<unsigned char>(v);
    }
  }
  std::vector<png_bytep> rows(h);
  for (int y = 0; y < h; ++y) rows[y] = buffer.data() + static_cast<std::size_t>(y) * w * bpp;

  make_parent(path);
  FILE* fp = std::fopen(path.c_str(), "wb");
  if (!fp) throw IoError("cannot write " + path.string());
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr,
                                            png_silent_warning);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  volatile bool ok = png && info;
  if (ok) {
    if (setjmp(png_jmpbuf(png))) {
      ok = false;
    } else {
      png_init_io(png, fp);
      png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h),
                   bit_depth, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
                   PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
      png_write_info(png, info);
      png_write_image(png, rows.data());
      png_write_end(png, nullptr);
    }
  }
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
  if (!ok) throw IoError("failed writing PNG " + path.string());
}

}  // namespace keyrep
