#include "ptycho/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace ptycho {

namespace {

void check_extent(int h, int w, const char* type) {
  if (h <= 0 || w <= 0)
    throw std::invalid_argument(std::string(type) + ": extents must be positive, got " +
                                std::to_string(h) + "x" + std::to_string(w));
}

void check_dims(Dims4 d, const char* type) {
  if (d.k <= 0 || d.l <= 0 || d.m <= 0 || d.n <= 0)
    throw std::invalid_argument(std::string(type) + ": all four extents must be positive");
}

}  // namespace

ComplexGrid2D::ComplexGrid2D(int h_, int w_) : h(h_), w(w_) {
  check_extent(h_, w_, "ComplexGrid2D");
  v.assign(std::size_t(h) * w, cplx{});
}

RealGrid2D::RealGrid2D(int h_, int w_) : h(h_), w(w_) {
  check_extent(h_, w_, "RealGrid2D");
  v.assign(std::size_t(h) * w, 0.0);
}

ComplexGrid4D::ComplexGrid4D(Dims4 d) : dims(d) {
  check_dims(d, "ComplexGrid4D");
  v.assign(d.volume(), cplx{});
}

RealGrid4D::RealGrid4D(Dims4 d) : dims(d) {
  check_dims(d, "RealGrid4D");
  v.assign(d.volume(), 0.0);
}

namespace {

template <typename G>
double norm_complex(const G& g) {
  double s = 0.0;
  for (const cplx& z : g.v) s += std::norm(z);
  return std::sqrt(s);
}

}  // namespace

double frobenius_norm(const ComplexGrid2D& g) { return norm_complex(g); }
double frobenius_norm(const ComplexGrid4D& g) { return norm_complex(g); }

double frobenius_norm(const RealGrid4D& g) {
  double s = 0.0;
  for (double x : g.v) s += x * x;
  return std::sqrt(s);
}

namespace {

template <typename G>
bool finite_complex(const G& g) {
  for (const cplx& z : g.v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

}  // namespace

bool all_finite(const ComplexGrid2D& g) { return finite_complex(g); }
bool all_finite(const ComplexGrid4D& g) { return finite_complex(g); }

bool all_finite(const RealGrid4D& g) {
  for (double x : g.v)
    if (!std::isfinite(x)) return false;
  return true;
}

namespace {

[[noreturn]] void throw_nonfinite(const char* what) {
  throw std::invalid_argument(std::string(what) + ": contains NaN or Inf");
}

}  // namespace

void require_finite(const ComplexGrid4D& g, const char* what) {
  if (!all_finite(g)) throw_nonfinite(what);
}

void require_finite(const ComplexGrid2D& g, const char* what) {
  if (!all_finite(g)) throw_nonfinite(what);
}

void require_finite(const RealGrid4D& g, const char* what) {
  if (!all_finite(g)) throw_nonfinite(what);
}

RealGrid4D abs_grid(const ComplexGrid4D& g) {
  RealGrid4D out(g.dims);
  for (std::size_t i = 0; i < g.v.size(); ++i) out.v[i] = std::abs(g.v[i]);
  return out;
}

ComplexGrid2D pad_object(const ComplexGrid2D& o, int pad) {
  if (pad < 0) throw std::invalid_argument("pad_object: pad must be >= 0");
  if (o.h <= 0 || o.w <= 0) throw std::invalid_argument("pad_object: empty object");
  ComplexGrid2D out(o.h + 2 * pad, o.w + 2 * pad);
  for (int i = 0; i < o.h; ++i)
    for (int j = 0; j < o.w; ++j) out.at(i + pad, j + pad) = o.at(i, j);
  return out;
}

}  // namespace ptycho
