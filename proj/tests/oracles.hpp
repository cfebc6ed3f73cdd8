#pragma once

// Brute-force reference implementations the tests check the library against.
// Everything here is written from the operator definitions, favoring clarity
// over speed, and shares no code with the library internals.

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "ptycho/dipnet.hpp"
#include "ptycho/forward_model.hpp"
#include "ptycho/grid.hpp"
#include "ptycho/rng.hpp"

namespace oracle {

using ptycho::cplx;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// unitary 2D DFT by direct summation; sign -1 = forward, +1 = inverse
inline void dft2_naive(const cplx* in, cplx* out, int m, int n, int sign) {
  const double scale = 1.0 / std::sqrt(double(m) * double(n));
  for (int u = 0; u < m; ++u)
    for (int v = 0; v < n; ++v) {
      cplx acc{};
      for (int i = 0; i < m; ++i)
        for (int j = 0; j < n; ++j) {
          const double ang =
              sign * 2.0 * kPi * (double(u) * i / m + double(v) * j / n);
          acc += in[std::size_t(i) * n + j] * cplx(std::cos(ang), std::sin(ang));
        }
      out[std::size_t(u) * n + v] = acc * scale;
    }
}

inline ptycho::ComplexGrid4D fft2_segments_naive(const ptycho::ComplexGrid4D& x, int sign) {
  ptycho::ComplexGrid4D out(x.dims);
  const std::size_t seg = std::size_t(x.dims.m) * x.dims.n;
  for (int k = 0; k < x.dims.k; ++k)
    for (int l = 0; l < x.dims.l; ++l) {
      const std::size_t base = (std::size_t(k) * x.dims.l + l) * seg;
      dft2_naive(x.v.data() + base, out.v.data() + base, x.dims.m, x.dims.n, sign);
    }
  return out;
}

// ptychographic transform by definition: window each patch, transform it
inline ptycho::ComplexGrid4D pty_stft_naive(const ptycho::ComplexGrid2D& o,
                                            const ptycho::Probe& probe,
                                            const ptycho::ScanGrid& scan) {
  const int p = probe.size;
  ptycho::ComplexGrid4D seg({scan.rows, scan.cols, p, p});
  for (int k = 0; k < scan.rows; ++k)
    for (int l = 0; l < scan.cols; ++l)
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
          seg.at(k, l, i, j) =
              probe.at(i, j) * o.at(scan.row_offset(k) + i, scan.col_offset(l) + j);
  return fft2_segments_naive(seg, -1);
}

// overlap-add pseudoinverse by definition: inverse-transform each segment,
// accumulate conj(probe)-weighted patches, divide by the coverage weight
inline ptycho::ComplexGrid2D pty_istft_naive(const ptycho::ComplexGrid4D& x,
                                             const ptycho::Probe& probe,
                                             const ptycho::ScanGrid& scan,
                                             double weight_floor = 1e-12) {
  const int p = probe.size;
  ptycho::ComplexGrid4D seg = fft2_segments_naive(x, +1);
  ptycho::ComplexGrid2D num(scan.object_h, scan.object_w);
  ptycho::RealGrid2D den(scan.object_h, scan.object_w);
  for (int k = 0; k < scan.rows; ++k)
    for (int l = 0; l < scan.cols; ++l)
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
          const int r = scan.row_offset(k) + i, c = scan.col_offset(l) + j;
          num.at(r, c) += std::conj(probe.at(i, j)) * seg.at(k, l, i, j);
          den.at(r, c) += std::norm(probe.at(i, j));
        }
  for (int r = 0; r < scan.object_h; ++r)
    for (int c = 0; c < scan.object_w; ++c) {
      const double w = den.at(r, c);
      num.at(r, c) /= w > weight_floor ? w : w + weight_floor;
    }
  return num;
}

// complex 4D cross-correlation with SAME zero padding, eight explicit loops:
// out[o] at q = sum over taps t and inputs i of W[t,i,o] * x[i] at (q+t-center)
inline ptycho::ComplexChannelGrid complex_conv4d_naive(const ptycho::ComplexChannelGrid& x,
                                                       const ptycho::ComplexKernel4D& ker) {
  const ptycho::Dims4 d = x.dims;
  const ptycho::KernelDims kd = ker.kd;
  ptycho::ComplexChannelGrid out(d, ker.out_ch);
  for (int k = 0; k < d.k; ++k)
    for (int l = 0; l < d.l; ++l)
      for (int m = 0; m < d.m; ++m)
        for (int n = 0; n < d.n; ++n)
          for (int o = 0; o < ker.out_ch; ++o) {
            cplx acc{};
            for (int tk = 0; tk < kd.k; ++tk)
              for (int tl = 0; tl < kd.l; ++tl)
                for (int tm = 0; tm < kd.m; ++tm)
                  for (int tn = 0; tn < kd.n; ++tn) {
                    const int sk = k + tk - kd.k / 2, sl = l + tl - kd.l / 2;
                    const int sm = m + tm - kd.m / 2, sn = n + tn - kd.n / 2;
                    if (sk < 0 || sk >= d.k || sl < 0 || sl >= d.l || sm < 0 ||
                        sm >= d.m || sn < 0 || sn >= d.n)
                      continue;
                    const int tap = ((tk * kd.l + tl) * kd.m + tm) * kd.n + tn;
                    for (int i = 0; i < ker.in_ch; ++i) {
                      const std::size_t w =
                          (std::size_t(tap) * ker.in_ch + i) * ker.out_ch + o;
                      const std::size_t s = x.idx(sk, sl, sm, sn, i);
                      acc += cplx(ker.re[w], ker.im[w]) * cplx(x.re[s], x.im[s]);
                    }
                  }
            const std::size_t q = out.idx(k, l, m, n, o);
            out.re[q] = acc.real();
            out.im[q] = acc.imag();
          }
  return out;
}

inline ptycho::RealChannelGrid real_conv4d_naive(const ptycho::RealChannelGrid& x,
                                                 const ptycho::RealKernel4D& ker) {
  const ptycho::Dims4 d = x.dims;
  const ptycho::KernelDims kd = ker.kd;
  ptycho::RealChannelGrid out(d, ker.out_ch);
  for (int k = 0; k < d.k; ++k)
    for (int l = 0; l < d.l; ++l)
      for (int m = 0; m < d.m; ++m)
        for (int n = 0; n < d.n; ++n)
          for (int o = 0; o < ker.out_ch; ++o) {
            double acc = 0.0;
            for (int tk = 0; tk < kd.k; ++tk)
              for (int tl = 0; tl < kd.l; ++tl)
                for (int tm = 0; tm < kd.m; ++tm)
                  for (int tn = 0; tn < kd.n; ++tn) {
                    const int sk = k + tk - kd.k / 2, sl = l + tl - kd.l / 2;
                    const int sm = m + tm - kd.m / 2, sn = n + tn - kd.n / 2;
                    if (sk < 0 || sk >= d.k || sl < 0 || sl >= d.l || sm < 0 ||
                        sm >= d.m || sn < 0 || sn >= d.n)
                      continue;
                    const int tap = ((tk * kd.l + tl) * kd.m + tm) * kd.n + tn;
                    for (int i = 0; i < ker.in_ch; ++i)
                      acc += ker.w[(std::size_t(tap) * ker.in_ch + i) * ker.out_ch + o] *
                             x.v[x.idx(sk, sl, sm, sn, i)];
                  }
            out.v[out.idx(k, l, m, n, o)] = acc;
          }
  return out;
}

// Simpson quadrature on [a, b] with an even interval count
template <typename F>
double simpson(F f, double a, double b, int intervals) {
  const double h = (b - a) / intervals;
  double acc = f(a) + f(b);
  for (int i = 1; i < intervals; ++i) acc += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * h / 3.0;
}

// I0(kappa) straight from its integral representation; 1e5 intervals keep the
// quadrature itself below 1e-13 relative error out to kappa ~ 100
inline double bessel_i0_quadrature(double kappa) {
  return simpson([&](double t) { return std::exp(kappa * std::cos(t)); }, 0.0, kPi,
                 100000) /
         kPi;
}

// mean resultant length of von-Mises(mu, kappa): E[cos(theta - mu)]
inline double von_mises_resultant_quadrature(double kappa) {
  const double num = simpson(
      [&](double t) { return std::cos(t) * std::exp(kappa * std::cos(t)); }, -kPi, kPi,
      40000);
  const double den =
      simpson([&](double t) { return std::exp(kappa * std::cos(t)); }, -kPi, kPi, 40000);
  return num / den;
}

inline ptycho::ComplexGrid2D random_object(int h, int w, ptycho::Rng& rng,
                                           bool complex_valued = false) {
  ptycho::ComplexGrid2D o(h, w);
  for (auto& v : o.v)
    v = complex_valued ? cplx(rng.normal(), rng.normal()) : cplx(rng.uniform(), 0.0);
  return o;
}

inline ptycho::ComplexGrid4D random_grid4(ptycho::Dims4 d, ptycho::Rng& rng) {
  ptycho::ComplexGrid4D g(d);
  for (auto& v : g.v) v = cplx(rng.normal(), rng.normal());
  return g;
}

inline double max_abs_diff(const ptycho::ComplexGrid4D& a, const ptycho::ComplexGrid4D& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

inline double max_abs_diff(const ptycho::ComplexGrid2D& a, const ptycho::ComplexGrid2D& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
  return m;
}

inline double rel_diff(const ptycho::ComplexGrid4D& a, const ptycho::ComplexGrid4D& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    num += std::norm(a.v[i] - b.v[i]);
    den += std::norm(b.v[i]);
  }
  return std::sqrt(num / den);
}

inline double rel_diff(const ptycho::ComplexGrid2D& a, const ptycho::ComplexGrid2D& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    num += std::norm(a.v[i] - b.v[i]);
    den += std::norm(b.v[i]);
  }
  return std::sqrt(num / den);
}

}  // namespace oracle
