#include "ptycho/grid_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

static_assert(std::endian::native == std::endian::little,
              "grid dumps are little-endian; byte swapping is not implemented");
static_assert(std::numeric_limits<double>::is_iec559, "payload is IEEE-754 f64");

namespace ptycho {

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint32_t read_u32(std::istream& is, const std::string& path) {
  std::uint32_t v = 0;
  if (!is.read(reinterpret_cast<char*>(&v), sizeof v))
    throw std::runtime_error(path + ": truncated header");
  return v;
}

void write_payload(std::ostream& os, const std::vector<cplx>& v) {
  os.write(reinterpret_cast<const char*>(v.data()),
           std::streamsize(v.size() * sizeof(cplx)));
}

std::ofstream open_out(const std::string& path) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  return os;
}

std::ifstream open_in(const std::string& path, const char* magic) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open");
  char got[4];
  if (!is.read(got, 4) || std::memcmp(got, magic, 4) != 0)
    throw std::runtime_error(path + ": bad magic (expected " + magic + ")");
  return is;
}

void read_complex_payload(std::istream& is, std::vector<cplx>& v, const std::string& path) {
  if (!is.read(reinterpret_cast<char*>(v.data()), std::streamsize(v.size() * sizeof(cplx))))
    throw std::runtime_error(path + ": truncated payload");
  char extra;
  if (is.read(&extra, 1)) throw std::runtime_error(path + ": trailing bytes after payload");
}

int checked_extent(std::uint32_t v, const std::string& path) {
  if (v == 0 || v > 1u << 20) throw std::runtime_error(path + ": implausible extent");
  return int(v);
}

}  // namespace

void save_grid(const std::string& path, const ComplexGrid4D& g) {
  auto os = open_out(path);
  os.write("PTG4", 4);
  write_u32(os, std::uint32_t(g.dims.k));
  write_u32(os, std::uint32_t(g.dims.l));
  write_u32(os, std::uint32_t(g.dims.m));
  write_u32(os, std::uint32_t(g.dims.n));
  write_payload(os, g.v);
  if (!os) throw std::runtime_error(path + ": write failed");
}

void save_grid(const std::string& path, const ComplexGrid2D& g) {
  auto os = open_out(path);
  os.write("PTG2", 4);
  write_u32(os, std::uint32_t(g.h));
  write_u32(os, std::uint32_t(g.w));
  write_payload(os, g.v);
  if (!os) throw std::runtime_error(path + ": write failed");
}

void save_amplitudes(const std::string& path, const RealGrid4D& a) {
  ComplexGrid4D g(a.dims);
  for (std::size_t i = 0; i < a.v.size(); ++i) g.v[i] = cplx{a.v[i], 0.0};
  save_grid(path, g);
}

ComplexGrid4D load_grid4(const std::string& path) {
  auto is = open_in(path, "PTG4");
  Dims4 d;
  d.k = checked_extent(read_u32(is, path), path);
  d.l = checked_extent(read_u32(is, path), path);
  d.m = checked_extent(read_u32(is, path), path);
  d.n = checked_extent(read_u32(is, path), path);
  ComplexGrid4D g(d);
  read_complex_payload(is, g.v, path);
  return g;
}

ComplexGrid2D load_grid2(const std::string& path) {
  auto is = open_in(path, "PTG2");
  const int h = checked_extent(read_u32(is, path), path);
  const int w = checked_extent(read_u32(is, path), path);
  ComplexGrid2D g(h, w);
  read_complex_payload(is, g.v, path);
  return g;
}

RealGrid4D load_amplitudes(const std::string& path) {
  const ComplexGrid4D g = load_grid4(path);
  RealGrid4D a(g.dims);
  for (std::size_t i = 0; i < g.v.size(); ++i) {
    if (g.v[i].imag() != 0.0)
      throw std::runtime_error(path + ": amplitude file has nonzero imaginary parts");
    if (!(g.v[i].real() >= 0.0))
      throw std::runtime_error(path + ": amplitude file has negative or NaN entries");
    a.v[i] = g.v[i].real();
  }
  return a;
}

}  // namespace ptycho
