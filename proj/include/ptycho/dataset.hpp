#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptycho/grid.hpp"

namespace ptycho {

struct ImageSet {
  std::vector<RealGrid2D> images;  // same extents, values in [0, 1]
  std::string source;
};

// IDX unsigned-byte image container: big-endian magic 0x00000803, u32 count,
// u32 rows, u32 cols, then count*rows*cols bytes; pixel p -> p/255.
ImageSet load_idx(const std::string& path);

// Every readable PGM/PNG in the directory (sorted by filename): grayscale,
// center-cropped square, bilinear-resampled to size x size, values in [0, 1].
// Unreadable files are skipped with a warning on stderr.
ImageSet load_image_dir(const std::string& path, int size);

// Deterministic stroke-figure corpus: connected quadratic strokes on a zero
// background, peak near 1. A stand-in with handwritten-digit statistics.
ImageSet synthetic_digits(int count, int side, std::uint64_t seed);

struct DatasetSpec {
  std::string kind = "auto";  // auto | synthetic | idx | dir
  std::string path;           // idx file or image directory
  int count = 0;              // 0 = all available (synthetic requires > 0)
  int side = 28;
  std::uint64_t seed = 1;
};

// auto resolves to the PTYCHO_MNIST_IDX environment variable when it points
// at a readable file, else to the synthetic corpus. Images whose extents
// differ from side are center-cropped and resized.
ImageSet load_dataset(const DatasetSpec& spec);

RealGrid2D center_crop_square(const RealGrid2D& img);
RealGrid2D resize_bilinear(const RealGrid2D& img, int h, int w);

// 8-bit binary PGM (P5) or ASCII (P2); values scaled by maxval into [0, 1].
RealGrid2D read_pgm(const std::string& path);
// 8-bit binary PGM, inputs clamped to [0, 1], scaled round-half-up.
void write_pgm(const std::string& path, const RealGrid2D& img);

RealGrid2D read_png(const std::string& path);
void write_png(const std::string& path, const RealGrid2D& img);

}  // namespace ptycho
