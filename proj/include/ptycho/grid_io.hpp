#pragma once

#include <string>

#include "ptycho/grid.hpp"

namespace ptycho {

// Binary grid dumps. Little-endian; 4D header = magic "PTG4" + four u32
// extents (k, l, m, n), 2D header = magic "PTG2" + two u32 extents; payload =
// interleaved (re, im) f64 pairs in row-major order. Amplitude grids are
// stored as 4D dumps with zero imaginary parts.
void save_grid(const std::string& path, const ComplexGrid4D& g);
void save_grid(const std::string& path, const ComplexGrid2D& g);
void save_amplitudes(const std::string& path, const RealGrid4D& a);

ComplexGrid4D load_grid4(const std::string& path);
ComplexGrid2D load_grid2(const std::string& path);
// Rejects payloads with nonzero imaginary parts or negative real parts.
RealGrid4D load_amplitudes(const std::string& path);

}  // namespace ptycho
