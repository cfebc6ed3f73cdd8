#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace ptycho {

using cplx = std::complex<double>;

// Dimensions of a ptychograph: K x L scan positions, M x N frequency bins.
struct Dims4 {
  int k = 0, l = 0, m = 0, n = 0;

  bool operator==(const Dims4&) const = default;
  std::size_t volume() const {
    return std::size_t(k) * std::size_t(l) * std::size_t(m) * std::size_t(n);
  }
};

struct ComplexGrid2D {
  int h = 0, w = 0;
  std::vector<cplx> v;

  ComplexGrid2D() = default;
  ComplexGrid2D(int h_, int w_);

  cplx& at(int i, int j) { return v[std::size_t(i) * w + j]; }
  const cplx& at(int i, int j) const { return v[std::size_t(i) * w + j]; }
};

struct RealGrid2D {
  int h = 0, w = 0;
  std::vector<double> v;

  RealGrid2D() = default;
  RealGrid2D(int h_, int w_);

  double& at(int i, int j) { return v[std::size_t(i) * w + j]; }
  const double& at(int i, int j) const { return v[std::size_t(i) * w + j]; }
};

// Row-major in (k, l, m, n); n fastest.
struct ComplexGrid4D {
  Dims4 dims;
  std::vector<cplx> v;

  ComplexGrid4D() = default;
  explicit ComplexGrid4D(Dims4 d);

  std::size_t idx(int k, int l, int m, int n) const {
    return ((std::size_t(k) * dims.l + l) * dims.m + m) * std::size_t(dims.n) + n;
  }
  cplx& at(int k, int l, int m, int n) { return v[idx(k, l, m, n)]; }
  const cplx& at(int k, int l, int m, int n) const { return v[idx(k, l, m, n)]; }
};

struct RealGrid4D {
  Dims4 dims;
  std::vector<double> v;

  RealGrid4D() = default;
  explicit RealGrid4D(Dims4 d);

  std::size_t idx(int k, int l, int m, int n) const {
    return ((std::size_t(k) * dims.l + l) * dims.m + m) * std::size_t(dims.n) + n;
  }
  double& at(int k, int l, int m, int n) { return v[idx(k, l, m, n)]; }
  const double& at(int k, int l, int m, int n) const { return v[idx(k, l, m, n)]; }
};

double frobenius_norm(const ComplexGrid2D& g);
double frobenius_norm(const ComplexGrid4D& g);
double frobenius_norm(const RealGrid4D& g);

bool all_finite(const ComplexGrid2D& g);
bool all_finite(const ComplexGrid4D& g);
bool all_finite(const RealGrid4D& g);

// Throws std::invalid_argument naming `what` if any entry is NaN/Inf.
void require_finite(const ComplexGrid4D& g, const char* what);
void require_finite(const ComplexGrid2D& g, const char* what);
void require_finite(const RealGrid4D& g, const char* what);

RealGrid4D abs_grid(const ComplexGrid4D& g);

// Zero-pads symmetrically by `pad` pixels on every side.
ComplexGrid2D pad_object(const ComplexGrid2D& o, int pad);

}  // namespace ptycho
