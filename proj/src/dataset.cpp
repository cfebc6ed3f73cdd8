#include "ptycho/dataset.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <stdexcept>

#include "ptycho/rng.hpp"

namespace ptycho {

namespace {

std::uint32_t read_u32_be(std::istream& is, const std::string& path) {
  unsigned char b[4];
  if (!is.read(reinterpret_cast<char*>(b), 4))
    throw std::runtime_error(path + ": truncated IDX header");
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

ImageSet load_idx(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open");
  const std::uint32_t magic = read_u32_be(is, path);
  if (magic == 0x00000801u)
    throw std::runtime_error(path + ": IDX label file (magic 0x801), expected images (0x803)");
  if (magic != 0x00000803u)
    throw std::runtime_error(path + ": not an IDX image file (bad magic)");
  const std::uint32_t count = read_u32_be(is, path);
  const std::uint32_t rows = read_u32_be(is, path);
  const std::uint32_t cols = read_u32_be(is, path);
  if (rows == 0 || cols == 0 || rows > 4096 || cols > 4096 || count > 10'000'000u)
    throw std::runtime_error(path + ": IDX dimensions out of range");
  ImageSet set;
  set.source = "idx:" + path;
  set.images.reserve(count);
  std::vector<unsigned char> row(cols);
  for (std::uint32_t i = 0; i < count; ++i) {
    RealGrid2D img(static_cast<int>(rows), static_cast<int>(cols));
    for (std::uint32_t r = 0; r < rows; ++r) {
      if (!is.read(reinterpret_cast<char*>(row.data()), std::streamsize(cols)))
        throw std::runtime_error(path + ": truncated IDX payload");
      for (std::uint32_t c = 0; c < cols; ++c)
        img.v[std::size_t(r) * cols + c] = double(row[c]) / 255.0;
    }
    set.images.push_back(std::move(img));
  }
  return set;
}

RealGrid2D center_crop_square(const RealGrid2D& img) {
  const int side = std::min(img.h, img.w);
  if (side <= 0) throw std::invalid_argument("center_crop_square: empty image");
  if (img.h == img.w) return img;
  const int r0 = (img.h - side) / 2, c0 = (img.w - side) / 2;
  RealGrid2D out(side, side);
  for (int r = 0; r < side; ++r)
    for (int c = 0; c < side; ++c) out.at(r, c) = img.at(r0 + r, c0 + c);
  return out;
}

RealGrid2D resize_bilinear(const RealGrid2D& img, int h, int w) {
  if (h <= 0 || w <= 0) throw std::invalid_argument("resize_bilinear: target must be positive");
  if (img.h <= 0 || img.w <= 0) throw std::invalid_argument("resize_bilinear: empty image");
  if (img.h == h && img.w == w) return img;
  RealGrid2D out(h, w);
  const double sy = double(img.h) / h, sx = double(img.w) / w;
  for (int r = 0; r < h; ++r) {
    const double fy = (r + 0.5) * sy - 0.5;
    const int y0 = std::clamp(int(std::floor(fy)), 0, img.h - 1);
    const int y1 = std::min(y0 + 1, img.h - 1);
    const double ty = std::clamp(fy - std::floor(fy), 0.0, 1.0);
    for (int c = 0; c < w; ++c) {
      const double fx = (c + 0.5) * sx - 0.5;
      const int x0 = std::clamp(int(std::floor(fx)), 0, img.w - 1);
      const int x1 = std::min(x0 + 1, img.w - 1);
      const double tx = std::clamp(fx - std::floor(fx), 0.0, 1.0);
      const double top = img.at(y0, x0) * (1.0 - tx) + img.at(y0, x1) * tx;
      const double bot = img.at(y1, x0) * (1.0 - tx) + img.at(y1, x1) * tx;
      out.at(r, c) = top * (1.0 - ty) + bot * ty;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// PGM
// ---------------------------------------------------------------------------

namespace {

int pgm_token(std::istream& is, const std::string& path) {
  // skips whitespace and # comments, then reads one nonnegative integer
  int ch = is.get();
  while (ch != EOF) {
    if (ch == '#') {
      while (ch != EOF && ch != '\n') ch = is.get();
    } else if (!std::isspace(ch)) {
      break;
    }
    ch = is.get();
  }
  if (ch == EOF || !std::isdigit(ch)) throw std::runtime_error(path + ": malformed PGM header");
  long v = 0;
  while (ch != EOF && std::isdigit(ch)) {
    v = v * 10 + (ch - '0');
    if (v > 1'000'000'000L) throw std::runtime_error(path + ": PGM value out of range");
    ch = is.get();
  }
  if (ch != EOF) is.unget();
  return int(v);
}

}  // namespace

RealGrid2D read_pgm(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open");
  char m0 = 0, m1 = 0;
  is.get(m0).get(m1);
  const bool ascii = m0 == 'P' && m1 == '2';
  if (!(m0 == 'P' && (m1 == '5' || m1 == '2')))
    throw std::runtime_error(path + ": not a PGM file (expected P5 or P2)");
  const int w = pgm_token(is, path);
  const int h = pgm_token(is, path);
  const int maxval = pgm_token(is, path);
  if (w <= 0 || h <= 0 || w > 65536 || h > 65536)
    throw std::runtime_error(path + ": PGM extents out of range");
  if (maxval < 1 || maxval > 255)
    throw std::runtime_error(path + ": only 8-bit PGM is supported (maxval 1..255)");
  RealGrid2D img(h, w);
  if (ascii) {
    for (double& v : img.v) {
      const int p = pgm_token(is, path);
      if (p > maxval) throw std::runtime_error(path + ": PGM pixel above maxval");
      v = double(p) / maxval;
    }
  } else {
    is.get();  // single whitespace byte after maxval
    std::vector<unsigned char> row(static_cast<std::size_t>(w));
    for (int r = 0; r < h; ++r) {
      if (!is.read(reinterpret_cast<char*>(row.data()), w))
        throw std::runtime_error(path + ": truncated PGM payload");
      for (int c = 0; c < w; ++c) img.at(r, c) = double(row[c]) / maxval;
    }
  }
  return img;
}

namespace {

unsigned char to_byte(double v) {
  const double clamped = std::clamp(v, 0.0, 1.0);
  const double scaled = std::floor(clamped * 255.0 + 0.5);  // round half up
  return static_cast<unsigned char>(std::clamp(scaled, 0.0, 255.0));
}

}  // namespace

void write_pgm(const std::string& path, const RealGrid2D& img) {
  if (img.h <= 0 || img.w <= 0) throw std::invalid_argument("write_pgm: empty image");
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os << "P5\n" << img.w << ' ' << img.h << "\n255\n";
  std::vector<unsigned char> row(std::size_t(img.w));
  for (int r = 0; r < img.h; ++r) {
    for (int c = 0; c < img.w; ++c) row[std::size_t(c)] = to_byte(img.at(r, c));
    os.write(reinterpret_cast<const char*>(row.data()), img.w);
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

// ---------------------------------------------------------------------------
// PNG
// ---------------------------------------------------------------------------

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FileHandle = std::unique_ptr<std::FILE, FileCloser>;

}  // namespace

RealGrid2D read_png(const std::string& path) {
  FileHandle fp(std::fopen(path.c_str(), "rb"));
  if (!fp) throw std::runtime_error(path + ": cannot open");
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_read_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  std::vector<unsigned char> pixels;
  png_uint_32 w = 0, h = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(path + ": PNG decode failed");
  }
  png_init_io(png, fp.get());
  png_read_info(png, info);
  w = png_get_image_width(png, info);
  h = png_get_image_height(png, info);
  if (w == 0 || h == 0 || w > 65536 || h > 65536) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw std::runtime_error(path + ": PNG extents out of range");
  }
  // normalize to 8-bit grayscale: expand palettes, strip 16-bit and alpha,
  // convert color with the default luma weights
  png_set_expand(png);
  png_set_strip_16(png);
  png_set_strip_alpha(png);
  const png_byte color = png_get_color_type(png, info);
  if (color & PNG_COLOR_MASK_COLOR) png_set_rgb_to_gray_fixed(png, 1, -1, -1);
  png_read_update_info(png, info);
  pixels.resize(std::size_t(w) * h);
  std::vector<png_bytep> rows(h);
  for (png_uint_32 r = 0; r < h; ++r) rows[r] = pixels.data() + std::size_t(r) * w;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  RealGrid2D img(static_cast<int>(h), static_cast<int>(w));
  for (std::size_t i = 0; i < pixels.size(); ++i) img.v[i] = double(pixels[i]) / 255.0;
  return img;
}

void write_png(const std::string& path, const RealGrid2D& img) {
  if (img.h <= 0 || img.w <= 0) throw std::invalid_argument("write_png: empty image");
  FileHandle fp(std::fopen(path.c_str(), "wb"));
  if (!fp) throw std::runtime_error(path + ": cannot open for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw std::runtime_error("png_create_write_struct failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw std::runtime_error("png_create_info_struct failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw std::runtime_error(path + ": PNG encode failed");
  }
  png_init_io(png, fp.get());
  png_set_IHDR(png, info, png_uint_32(img.w), png_uint_32(img.h), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<unsigned char> row(std::size_t(img.w));
  for (int r = 0; r < img.h; ++r) {
    for (int c = 0; c < img.w; ++c) row[std::size_t(c)] = to_byte(img.at(r, c));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

// ---------------------------------------------------------------------------
// directory loader
// ---------------------------------------------------------------------------

ImageSet load_image_dir(const std::string& path, int size) {
  if (size <= 0) throw std::invalid_argument("load_image_dir: size must be positive");
  namespace fs = std::filesystem;
  if (!fs::is_directory(path)) throw std::runtime_error(path + ": not a directory");
  std::vector<std::string> names;
  for (const fs::directory_entry& e : fs::directory_iterator(path)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(),
                   [](unsigned char c) { return char(std::tolower(c)); });
    if (ext == ".pgm" || ext == ".png") names.push_back(e.path().string());
  }
  std::sort(names.begin(), names.end());
  ImageSet set;
  set.source = "dir:" + path;
  for (const std::string& name : names) {
    try {
      RealGrid2D img = name.size() >= 4 && name.substr(name.size() - 4) == ".pgm"
                           ? read_pgm(name)
                           : read_png(name);
      set.images.push_back(resize_bilinear(center_crop_square(img), size, size));
    } catch (const std::exception& e) {
      std::cerr << "warning: skipping " << name << ": " << e.what() << '\n';
    }
  }
  if (set.images.empty()) throw std::runtime_error(path + ": no readable PGM/PNG images");
  return set;
}

// ---------------------------------------------------------------------------
// synthetic corpus
// ---------------------------------------------------------------------------

namespace {

constexpr double kPi = 3.141592653589793238462643383279;

struct Point {
  double x = 0.0, y = 0.0;
};

double dist_to_segment(double px, double py, Point a, Point b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((px - a.x) * dx + (py - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  const double ex = a.x + t * dx - px, ey = a.y + t * dy - py;
  return std::sqrt(ex * ex + ey * ey);
}

// One figure: a connected chain of quadratic strokes plus closed-ish arcs,
// each with its own width and ink level. The loops and intensity levels give
// the ensemble handwritten-digit difficulty: plain convex strokes were
// measurably too easy for alternating projections.
RealGrid2D synthetic_digit(int side, Rng& rng) {
  const double scale = side / 28.0;
  auto control_point = [&]() {
    // truncated gaussian keeps strokes inside the frame with a margin
    const double c = side * 0.5, sd = side * 0.2;
    const double lo = side * 0.09, hi = side * 0.91;
    return Point{std::clamp(c + sd * rng.normal(), lo, hi),
                 std::clamp(c + sd * rng.normal(), lo, hi)};
  };
  constexpr int kSamples = 48;
  RealGrid2D img(side, side);
  const double soft = 0.6 * scale;  // antialiasing band; beyond it pixels stay 0
  auto paint = [&](const std::vector<Point>& pts, double radius, double level) {
    for (int r = 0; r < side; ++r)
      for (int c = 0; c < side; ++c) {
        const double px = c + 0.5, py = r + 0.5;
        double d = std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i + 1 < pts.size(); ++i)
          d = std::min(d, dist_to_segment(px, py, pts[i], pts[i + 1]));
        const double v = level * std::clamp((radius + soft - d) / soft, 0.0, 1.0);
        img.at(r, c) = std::max(img.at(r, c), v);
      }
  };
  const int strokes = 4 + int(rng.below(4));
  Point p0 = control_point();
  std::vector<Point> pts(kSamples + 1);
  for (int s = 0; s < strokes; ++s) {
    const Point p1 = control_point();
    const Point p2 = control_point();
    for (int i = 0; i <= kSamples; ++i) {
      const double t = double(i) / kSamples;
      const double u = 1.0 - t;
      pts[std::size_t(i)] = Point{u * u * p0.x + 2 * u * t * p1.x + t * t * p2.x,
                                  u * u * p0.y + 2 * u * t * p1.y + t * t * p2.y};
    }
    const double radius = 0.5 * (1.2 + 1.0 * rng.uniform()) * scale;
    paint(pts, radius, 0.55 + 0.45 * rng.uniform());
    p0 = p2;
  }
  const int arcs = 1 + int(rng.below(3));
  for (int a = 0; a < arcs; ++a) {
    const Point center = control_point();
    const double arc_radius = (0.12 + 0.18 * rng.uniform()) * side;
    const double theta0 = 2.0 * kPi * rng.uniform();
    const double span = kPi * (1.0 + rng.uniform());
    for (int i = 0; i <= kSamples; ++i) {
      const double th = theta0 + span * double(i) / kSamples;
      pts[std::size_t(i)] =
          Point{std::clamp(center.x + arc_radius * std::cos(th), 1.0, side - 1.0),
                std::clamp(center.y + arc_radius * std::sin(th), 1.0, side - 1.0)};
    }
    const double radius = 0.5 * (1.2 + 1.0 * rng.uniform()) * scale;
    paint(pts, radius, 0.55 + 0.45 * rng.uniform());
  }
  double peak = 0.0;
  for (double v : img.v) peak = std::max(peak, v);
  const double target = 0.85 + 0.15 * rng.uniform();
  if (peak > 0.0)
    for (double& v : img.v) v *= target / peak;
  return img;
}

}  // namespace

ImageSet synthetic_digits(int count, int side, std::uint64_t seed) {
  if (count <= 0) throw std::invalid_argument("synthetic_digits: count must be positive");
  if (side < 8) throw std::invalid_argument("synthetic_digits: side must be at least 8");
  ImageSet set;
  set.source = "synthetic";
  set.images.reserve(std::size_t(count));
  for (int i = 0; i < count; ++i) {
    Rng rng(mix_seed(seed, 0x64696769u, std::uint64_t(i)));  // per-image stream
    set.images.push_back(synthetic_digit(side, rng));
  }
  return set;
}

ImageSet load_dataset(const DatasetSpec& spec) {
  std::string kind = spec.kind;
  std::string path = spec.path;
  if (kind == "auto") {
    const char* env = std::getenv("PTYCHO_MNIST_IDX");
    if (env && *env && std::ifstream(env).good()) {
      kind = "idx";
      path = env;
    } else {
      kind = "synthetic";
    }
  }
  ImageSet set;
  if (kind == "synthetic") {
    const int count = spec.count > 0 ? spec.count : 256;
    set = synthetic_digits(count, spec.side, spec.seed);
  } else if (kind == "idx") {
    set = load_idx(path);
  } else if (kind == "dir") {
    set = load_image_dir(path, spec.side);
  } else {
    throw std::invalid_argument("load_dataset: unknown kind '" + spec.kind + "'");
  }
  if (spec.count > 0 && set.images.size() > std::size_t(spec.count))
    set.images.resize(std::size_t(spec.count));
  for (RealGrid2D& img : set.images)
    if (img.h != spec.side || img.w != spec.side)
      img = resize_bilinear(center_crop_square(img), spec.side, spec.side);
  return set;
}

}  // namespace ptycho
