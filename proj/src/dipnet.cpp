#include "ptycho/dipnet.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "ptycho/rng.hpp"

#if defined(__AVX512F__)
#include <immintrin.h>
#endif

namespace ptycho {

void KernelDims::validate() const {
  if (k <= 0 || l <= 0 || m <= 0 || n <= 0 || k % 2 == 0 || l % 2 == 0 || m % 2 == 0 ||
      n % 2 == 0)
    throw std::invalid_argument("KernelDims: tap extents must be odd and positive");
}

namespace {

// ---------------------------------------------------------------------------
// generic conv kernels (any dtype / channel count); fixed loop order keeps
// accumulation deterministic
// ---------------------------------------------------------------------------

template <typename T>
void cconv_forward_generic(const ChannelGridT<T>& x, const ComplexKernelT<T>& k,
                           ChannelGridT<T>& out) {
  const int K = x.dims.k, L = x.dims.l, M = x.dims.m, N = x.dims.n;
  const int CI = k.in_ch, CO = k.out_ch;
  const int ck = k.kd.k / 2, cl = k.kd.l / 2, cm = k.kd.m / 2, cn = k.kd.n / 2;
  std::vector<T> accr(std::size_t(N) * CO), acci(accr.size());
  for (int kk = 0; kk < K; ++kk)
    for (int ll = 0; ll < L; ++ll)
      for (int mm = 0; mm < M; ++mm) {
        std::fill(accr.begin(), accr.end(), T(0));
        std::fill(acci.begin(), acci.end(), T(0));
        for (int tk = 0; tk < k.kd.k; ++tk) {
          const int sk = kk + tk - ck;
          if (sk < 0 || sk >= K) continue;
          for (int tl = 0; tl < k.kd.l; ++tl) {
            const int sl = ll + tl - cl;
            if (sl < 0 || sl >= L) continue;
            for (int tm = 0; tm < k.kd.m; ++tm) {
              const int sm = mm + tm - cm;
              if (sm < 0 || sm >= M) continue;
              const std::size_t srow =
                  ((std::size_t(sk) * L + sl) * M + sm) * std::size_t(N) * CI;
              for (int tn = 0; tn < k.kd.n; ++tn) {
                const int dn = tn - cn;
                const int n0 = dn < 0 ? -dn : 0;
                const int n1 = dn > 0 ? N - dn : N;
                const std::size_t tbase =
                    std::size_t(((tk * k.kd.l + tl) * k.kd.m + tm) * k.kd.n + tn) * CI * CO;
                for (int n = n0; n < n1; ++n) {
                  const T* xr = &x.re[srow + std::size_t(n + dn) * CI];
                  const T* xi = &x.im[srow + std::size_t(n + dn) * CI];
                  T* ar = &accr[std::size_t(n) * CO];
                  T* ai = &acci[std::size_t(n) * CO];
                  for (int c = 0; c < CI; ++c) {
                    const T vr = xr[c], vi = xi[c];
                    const T* wr = &k.re[tbase + std::size_t(c) * CO];
                    const T* wi = &k.im[tbase + std::size_t(c) * CO];
                    for (int o = 0; o < CO; ++o) {
                      ar[o] += wr[o] * vr - wi[o] * vi;
                      ai[o] += wr[o] * vi + wi[o] * vr;
                    }
                  }
                }
              }
            }
          }
        }
        const std::size_t obase = ((std::size_t(kk) * L + ll) * M + mm) * std::size_t(N) * CO;
        std::copy(accr.begin(), accr.end(), out.re.begin() + obase);
        std::copy(acci.begin(), acci.end(), out.im.begin() + obase);
      }
}

template <typename T>
void rconv_forward_generic(const RealChannelGridT<T>& x, const RealKernelT<T>& k,
                           RealChannelGridT<T>& out) {
  const int K = x.dims.k, L = x.dims.l, M = x.dims.m, N = x.dims.n;
  const int CI = k.in_ch, CO = k.out_ch;
  const int ck = k.kd.k / 2, cl = k.kd.l / 2, cm = k.kd.m / 2, cn = k.kd.n / 2;
  std::vector<T> acc(std::size_t(N) * CO);
  for (int kk = 0; kk < K; ++kk)
    for (int ll = 0; ll < L; ++ll)
      for (int mm = 0; mm < M; ++mm) {
        std::fill(acc.begin(), acc.end(), T(0));
        for (int tk = 0; tk < k.kd.k; ++tk) {
          const int sk = kk + tk - ck;
          if (sk < 0 || sk >= K) continue;
          for (int tl = 0; tl < k.kd.l; ++tl) {
            const int sl = ll + tl - cl;
            if (sl < 0 || sl >= L) continue;
            for (int tm = 0; tm < k.kd.m; ++tm) {
              const int sm = mm + tm - cm;
              if (sm < 0 || sm >= M) continue;
              const std::size_t srow =
                  ((std::size_t(sk) * L + sl) * M + sm) * std::size_t(N) * CI;
              for (int tn = 0; tn < k.kd.n; ++tn) {
                const int dn = tn - cn;
                const int n0 = dn < 0 ? -dn : 0;
                const int n1 = dn > 0 ? N - dn : N;
                const std::size_t tbase =
                    std::size_t(((tk * k.kd.l + tl) * k.kd.m + tm) * k.kd.n + tn) * CI * CO;
                for (int n = n0; n < n1; ++n) {
                  const T* xv = &x.v[srow + std::size_t(n + dn) * CI];
                  T* a = &acc[std::size_t(n) * CO];
                  for (int c = 0; c < CI; ++c) {
                    const T u = xv[c];
                    const T* w = &k.w[tbase + std::size_t(c) * CO];
                    for (int o = 0; o < CO; ++o) a[o] += w[o] * u;
                  }
                }
              }
            }
          }
        }
        const std::size_t obase = ((std::size_t(kk) * L + ll) * M + mm) * std::size_t(N) * CO;
        std::copy(acc.begin(), acc.end(), out.v.begin() + obase);
      }
}

// accumulates dL/dW += x (outer) dout over all valid positions of each tap
template <typename T>
void cconv_gradw_generic(const ChannelGridT<T>& x, const ChannelGridT<T>& dout,
                         ComplexKernelT<T>& dk) {
  const int K = x.dims.k, L = x.dims.l, M = x.dims.m, N = x.dims.n;
  const int CI = dk.in_ch, CO = dk.out_ch;
  const int ck = dk.kd.k / 2, cl = dk.kd.l / 2, cm = dk.kd.m / 2, cn = dk.kd.n / 2;
  for (int tk = 0; tk < dk.kd.k; ++tk) {
    const int dkk = tk - ck;
    const int k0 = dkk < 0 ? -dkk : 0, k1 = dkk > 0 ? K - dkk : K;
    for (int tl = 0; tl < dk.kd.l; ++tl) {
      const int dll = tl - cl;
      const int l0 = dll < 0 ? -dll : 0, l1 = dll > 0 ? L - dll : L;
      for (int tm = 0; tm < dk.kd.m; ++tm) {
        const int dmm = tm - cm;
        const int m0 = dmm < 0 ? -dmm : 0, m1 = dmm > 0 ? M - dmm : M;
        for (int tn = 0; tn < dk.kd.n; ++tn) {
          const int dnn = tn - cn;
          const int n0 = dnn < 0 ? -dnn : 0, n1 = dnn > 0 ? N - dnn : N;
          const std::size_t tbase =
              std::size_t(((tk * dk.kd.l + tl) * dk.kd.m + tm) * dk.kd.n + tn) * CI * CO;
          for (int kk = k0; kk < k1; ++kk)
            for (int ll = l0; ll < l1; ++ll)
              for (int mm = m0; mm < m1; ++mm) {
                const std::size_t srow =
                    ((std::size_t(kk + dkk) * L + (ll + dll)) * M + (mm + dmm)) *
                    std::size_t(N) * CI;
                const std::size_t drow =
                    ((std::size_t(kk) * L + ll) * M + mm) * std::size_t(N) * CO;
                for (int n = n0; n < n1; ++n) {
                  const T* xr = &x.re[srow + std::size_t(n + dnn) * CI];
                  const T* xi = &x.im[srow + std::size_t(n + dnn) * CI];
                  const T* dr = &dout.re[drow + std::size_t(n) * CO];
                  const T* di = &dout.im[drow + std::size_t(n) * CO];
                  for (int c = 0; c < CI; ++c) {
                    const T vr = xr[c], vi = xi[c];
                    T* gr = &dk.re[tbase + std::size_t(c) * CO];
                    T* gi = &dk.im[tbase + std::size_t(c) * CO];
                    for (int o = 0; o < CO; ++o) {
                      gr[o] += vr * dr[o] + vi * di[o];
                      gi[o] += vr * di[o] - vi * dr[o];
                    }
                  }
                }
              }
        }
      }
    }
  }
}

template <typename T>
void rconv_gradw_generic(const RealChannelGridT<T>& x, const RealChannelGridT<T>& dout,
                         RealKernelT<T>& dk) {
  const int K = x.dims.k, L = x.dims.l, M = x.dims.m, N = x.dims.n;
  const int CI = dk.in_ch, CO = dk.out_ch;
  const int ck = dk.kd.k / 2, cl = dk.kd.l / 2, cm = dk.kd.m / 2, cn = dk.kd.n / 2;
  for (int tk = 0; tk < dk.kd.k; ++tk) {
    const int dkk = tk - ck;
    const int k0 = dkk < 0 ? -dkk : 0, k1 = dkk > 0 ? K - dkk : K;
    for (int tl = 0; tl < dk.kd.l; ++tl) {
      const int dll = tl - cl;
      const int l0 = dll < 0 ? -dll : 0, l1 = dll > 0 ? L - dll : L;
      for (int tm = 0; tm < dk.kd.m; ++tm) {
        const int dmm = tm - cm;
        const int m0 = dmm < 0 ? -dmm : 0, m1 = dmm > 0 ? M - dmm : M;
        for (int tn = 0; tn < dk.kd.n; ++tn) {
          const int dnn = tn - cn;
          const int n0 = dnn < 0 ? -dnn : 0, n1 = dnn > 0 ? N - dnn : N;
          const std::size_t tbase =
              std::size_t(((tk * dk.kd.l + tl) * dk.kd.m + tm) * dk.kd.n + tn) * CI * CO;
          for (int kk = k0; kk < k1; ++kk)
            for (int ll = l0; ll < l1; ++ll)
              for (int mm = m0; mm < m1; ++mm) {
                const std::size_t srow =
                    ((std::size_t(kk + dkk) * L + (ll + dll)) * M + (mm + dmm)) *
                    std::size_t(N) * CI;
                const std::size_t drow =
                    ((std::size_t(kk) * L + ll) * M + mm) * std::size_t(N) * CO;
                for (int n = n0; n < n1; ++n) {
                  const T* xv = &x.v[srow + std::size_t(n + dnn) * CI];
                  const T* dv = &dout.v[drow + std::size_t(n) * CO];
                  for (int c = 0; c < CI; ++c) {
                    const T u = xv[c];
                    T* g = &dk.w[tbase + std::size_t(c) * CO];
                    for (int o = 0; o < CO; ++o) g[o] += u * dv[o];
                  }
                }
              }
        }
      }
    }
  }
}

// ---------------------------------------------------------------------------
// AVX-512 float kernels for 16 output channels (one zmm row); these carry the
// training load. Accumulators live in registers across the whole reduction.
// ---------------------------------------------------------------------------

#if defined(__AVX512F__)

void cconv_forward_f16(const ChannelGridT<float>& x, const ComplexKernelT<float>& k,
                       ChannelGridT<float>& out) {
  const int K = x.dims.k, L = x.dims.l, M = x.dims.m, N = x.dims.n;
  const int CI = k.in_ch;
  constexpr int CO = 16;
  const int ck = k.kd.k / 2, cl = k.kd.l / 2, cm = k.kd.m / 2, cn = k.kd.n / 2;
  for (int kk = 0; kk < K; ++kk)
    for (int ll = 0; ll < L; ++ll)
      for (int mm = 0; mm < M; ++mm)
        for (int n0 = 0; n0 < N; n0 += 3) {
          const int nt = (N - n0) < 3 ? (N - n0) : 3;
          __m512 ar0 = _mm512_setzero_ps(), ar1 = ar0, ar2 = ar0;
          __m512 ai0 = ar0, ai1 = ar0, ai2 = ar0;
          for (int tk = 0; tk < k.kd.k; ++tk) {
            const int sk = kk + tk - ck;
            if (sk < 0 || sk >= K) continue;
            for (int tl = 0; tl < k.kd.l; ++tl) {
              const int sl = ll + tl - cl;
              if (sl < 0 || sl >= L) continue;
              for (int tm = 0; tm < k.kd.m; ++tm) {
                const int sm = mm + tm - cm;
                if (sm < 0 || sm >= M) continue;
                const std::size_t srow =
                    ((std::size_t(sk) * L + sl) * M + sm) * std::size_t(N) * CI;
                for (int tn = 0; tn < k.kd.n; ++tn) {
                  const int dn = tn - cn;
                  const std::size_t tbase =
                      std::size_t(((tk * k.kd.l + tl) * k.kd.m + tm) * k.kd.n + tn) * CI * CO;
                  const int s0 = n0 + dn, s1 = s0 + 1, s2 = s0 + 2;
                  const bool v0 = s0 >= 0 && s0 < N;
                  const bool v1 = nt > 1 && s1 >= 0 && s1 < N;
                  const bool v2 = nt > 2 && s2 >= 0 && s2 < N;
                  if (!(v0 || v1 || v2)) continue;
                  const float* xr = &x.re[srow];
                  const float* xi = &x.im[srow];
                  for (int c = 0; c < CI; ++c) {
                    const __m512 wr = _mm512_loadu_ps(&k.re[tbase + std::size_t(c) * CO]);
                    const __m512 wi = _mm512_loadu_ps(&k.im[tbase + std::size_t(c) * CO]);
                    if (v0) {
                      const __m512 vr = _mm512_set1_ps(xr[std::size_t(s0) * CI + c]);
                      const __m512 vi = _mm512_set1_ps(xi[std::size_t(s0) * CI + c]);
                      ar0 = _mm512_fmadd_ps(wr, vr, ar0);
                      ar0 = _mm512_fnmadd_ps(wi, vi, ar0);
                      ai0 = _mm512_fmadd_ps(wr, vi, ai0);
                      ai0 = _mm512_fmadd_ps(wi, vr, ai0);
                    }
                    if (v1) {
                      const __m512 vr = _mm512_set1_ps(xr[std::size_t(s1) * CI + c]);
                      const __m512 vi = _mm512_set1_ps(xi[std::size_t(s1) * CI + c]);
                      ar1 = _mm512_fmadd_ps(wr, vr, ar1);
                      ar1 = _mm512_fnmadd_ps(wi, vi, ar1);
                      ai1 = _mm512_fmadd_ps(wr, vi, ai1);
                      ai1 = _mm512_fmadd_ps(wi, vr, ai1);
                    }
                    if (v2) {
                      const __m512 vr = _mm512_set1_ps(xr[std::size_t(s2) * CI + c]);
                      const __m512 vi = _mm512_set1_ps(xi[std::size_t(s2) * CI + c]);
                      ar2 = _mm512_fmadd_ps(wr, vr, ar2);
                      ar2 = _mm512_fnmadd_ps(wi, vi, ar2);
                      ai2 = _mm512_fmadd_ps(wr, vi, ai2);
                      ai2 = _mm512_fmadd_ps(wi, vr, ai2);
                    }
                  }
                }
              }
            }
          }
          const std::size_t ob =
              ((std::size_t(kk) * L + ll) * M + mm) * std::size_t(N) * CO +
              std::size_t(n0) * CO;
          _mm512_storeu_ps(&out.re[ob], ar0);
          _mm512_storeu_ps(&out.im[ob], ai0);
          if (nt > 1) {
            _mm512_storeu_ps(&out.re[ob + CO], ar1);
            _mm512_storeu_ps(&out.im[ob + CO], ai1);
          }
          if (nt > 2) {
            _mm512_storeu_ps(&out.re[ob + 2 * CO], ar2);
            _mm512_storeu_ps(&out.im[ob + 2 * CO], ai2);
          }
        }
}

void rconv_forward_f16(const RealChannelGridT<float>& x, const RealKernelT<float>& k,
                       RealChannelGridT<float>& out) {
  const int K = x.dims.k, L = x.dims.l, M = x.dims.m, N = x.dims.n;
  const int CI = k.in_ch;
  constexpr int CO = 16;
  const int ck = k.kd.k / 2, cl = k.kd.l / 2, cm = k.kd.m / 2, cn = k.kd.n / 2;
  for (int kk = 0; kk < K; ++kk)
    for (int ll = 0; ll < L; ++ll)
      for (int mm = 0; mm < M; ++mm)
        for (int n0 = 0; n0 < N; n0 += 3) {
          const int nt = (N - n0) < 3 ? (N - n0) : 3;
          __m512 a0 = _mm512_setzero_ps(), a1 = a0, a2 = a0;
          for (int tk = 0; tk < k.kd.k; ++tk) {
            const int sk = kk + tk - ck;
            if (sk < 0 || sk >= K) continue;
            for (int tl = 0; tl < k.kd.l; ++tl) {
              const int sl = ll + tl - cl;
              if (sl < 0 || sl >= L) continue;
              for (int tm = 0; tm < k.kd.m; ++tm) {
                const int sm = mm + tm - cm;
                if (sm < 0 || sm >= M) continue;
                const std::size_t srow =
                    ((std::size_t(sk) * L + sl) * M + sm) * std::size_t(N) * CI;
                for (int tn = 0; tn < k.kd.n; ++tn) {
                  const int dn = tn - cn;
                  const std::size_t tbase =
                      std::size_t(((tk * k.kd.l + tl) * k.kd.m + tm) * k.kd.n + tn) * CI * CO;
                  const int s0 = n0 + dn, s1 = s0 + 1, s2 = s0 + 2;
                  const bool v0 = s0 >= 0 && s0 < N;
                  const bool v1 = nt > 1 && s1 >= 0 && s1 < N;
                  const bool v2 = nt > 2 && s2 >= 0 && s2 < N;
                  if (!(v0 || v1 || v2)) continue;
                  const float* xv = &x.v[srow];
                  for (int c = 0; c < CI; ++c) {
                    const __m512 w = _mm512_loadu_ps(&k.w[tbase + std::size_t(c) * CO]);
                    if (v0)
                      a0 = _mm512_fmadd_ps(w, _mm512_set1_ps(xv[std::size_t(s0) * CI + c]), a0);
                    if (v1)
                      a1 = _mm512_fmadd_ps(w, _mm512_set1_ps(xv[std::size_t(s1) * CI + c]), a1);
                    if (v2)
                      a2 = _mm512_fmadd_ps(w, _mm512_set1_ps(xv[std::size_t(s2) * CI + c]), a2);
                  }
                }
              }
            }
          }
          const std::size_t ob =
              ((std::size_t(kk) * L + ll) * M + mm) * std::size_t(N) * CO +
              std::size_t(n0) * CO;
          _mm512_storeu_ps(&out.v[ob], a0);
          if (nt > 1) _mm512_storeu_ps(&out.v[ob + CO], a1);
          if (nt > 2) _mm512_storeu_ps(&out.v[ob + 2 * CO], a2);
        }
}

void cconv_gradw_f16(const ChannelGridT<float>& x, const ChannelGridT<float>& dout,
                     ComplexKernelT<float>& dk) {
  const int K = x.dims.k, L = x.dims.l, M = x.dims.m, N = x.dims.n;
  const int CI = dk.in_ch;
  constexpr int CO = 16;
  const int ck = dk.kd.k / 2, cl = dk.kd.l / 2, cm = dk.kd.m / 2, cn = dk.kd.n / 2;
  const int cig = 4;  // ci group held in registers
  for (int tk = 0; tk < dk.kd.k; ++tk) {
    const int dkk = tk - ck;
    const int k0 = dkk < 0 ? -dkk : 0, k1 = dkk > 0 ? K - dkk : K;
    for (int tl = 0; tl < dk.kd.l; ++tl) {
      const int dll = tl - cl;
      const int l0 = dll < 0 ? -dll : 0, l1 = dll > 0 ? L - dll : L;
      for (int tm = 0; tm < dk.kd.m; ++tm) {
        const int dmm = tm - cm;
        const int m0 = dmm < 0 ? -dmm : 0, m1 = dmm > 0 ? M - dmm : M;
        for (int tn = 0; tn < dk.kd.n; ++tn) {
          const int dnn = tn - cn;
          const int n0 = dnn < 0 ? -dnn : 0, n1 = dnn > 0 ? N - dnn : N;
          const std::size_t tbase =
              std::size_t(((tk * dk.kd.l + tl) * dk.kd.m + tm) * dk.kd.n + tn) * CI * CO;
          for (int c0 = 0; c0 < CI; c0 += cig) {
            const int cn_here = std::min(cig, CI - c0);
            __m512 gr[4], gi[4];
            for (int c = 0; c < 4; ++c) gr[c] = gi[c] = _mm512_setzero_ps();
            for (int kk = k0; kk < k1; ++kk)
              for (int ll = l0; ll < l1; ++ll)
                for (int mm = m0; mm < m1; ++mm) {
                  const std::size_t srow =
                      ((std::size_t(kk + dkk) * L + (ll + dll)) * M + (mm + dmm)) *
                      std::size_t(N) * CI;
                  const std::size_t drow =
                      ((std::size_t(kk) * L + ll) * M + mm) * std::size_t(N) * CO;
                  for (int n = n0; n < n1; ++n) {
                    const float* xr = &x.re[srow + std::size_t(n + dnn) * CI + c0];
                    const float* xi = &x.im[srow + std::size_t(n + dnn) * CI + c0];
                    const __m512 dr = _mm512_loadu_ps(&dout.re[drow + std::size_t(n) * CO]);
                    const __m512 di = _mm512_loadu_ps(&dout.im[drow + std::size_t(n) * CO]);
                    for (int c = 0; c < cn_here; ++c) {
                      const __m512 vr = _mm512_set1_ps(xr[c]);
                      const __m512 vi = _mm512_set1_ps(xi[c]);
                      gr[c] = _mm512_fmadd_ps(vr, dr, gr[c]);
                      gr[c] = _mm512_fmadd_ps(vi, di, gr[c]);
                      gi[c] = _mm512_fmadd_ps(vr, di, gi[c]);
                      gi[c] = _mm512_fnmadd_ps(vi, dr, gi[c]);
                    }
                  }
                }
            for (int c = 0; c < cn_here; ++c) {
              float* pr = &dk.re[tbase + std::size_t(c0 + c) * CO];
              float* pi = &dk.im[tbase + std::size_t(c0 + c) * CO];
              _mm512_storeu_ps(pr, _mm512_add_ps(_mm512_loadu_ps(pr), gr[c]));
              _mm512_storeu_ps(pi, _mm512_add_ps(_mm512_loadu_ps(pi), gi[c]));
            }
          }
        }
      }
    }
  }
}

void rconv_gradw_f16(const RealChannelGridT<float>& x, const RealChannelGridT<float>& dout,
                     RealKernelT<float>& dk) {
  const int K = x.dims.k, L = x.dims.l, M = x.dims.m, N = x.dims.n;
  const int CI = dk.in_ch;
  constexpr int CO = 16;
  const int ck = dk.kd.k / 2, cl = dk.kd.l / 2, cm = dk.kd.m / 2, cn = dk.kd.n / 2;
  const int cig = 8;
  for (int tk = 0; tk < dk.kd.k; ++tk) {
    const int dkk = tk - ck;
    const int k0 = dkk < 0 ? -dkk : 0, k1 = dkk > 0 ? K - dkk : K;
    for (int tl = 0; tl < dk.kd.l; ++tl) {
      const int dll = tl - cl;
      const int l0 = dll < 0 ? -dll : 0, l1 = dll > 0 ? L - dll : L;
      for (int tm = 0; tm < dk.kd.m; ++tm) {
        const int dmm = tm - cm;
        const int m0 = dmm < 0 ? -dmm : 0, m1 = dmm > 0 ? M - dmm : M;
        for (int tn = 0; tn < dk.kd.n; ++tn) {
          const int dnn = tn - cn;
          const int n0 = dnn < 0 ? -dnn : 0, n1 = dnn > 0 ? N - dnn : N;
          const std::size_t tbase =
              std::size_t(((tk * dk.kd.l + tl) * dk.kd.m + tm) * dk.kd.n + tn) * CI * CO;
          for (int c0 = 0; c0 < CI; c0 += cig) {
            const int cn_here = std::min(cig, CI - c0);
            __m512 g[8];
            for (int c = 0; c < 8; ++c) g[c] = _mm512_setzero_ps();
            for (int kk = k0; kk < k1; ++kk)
              for (int ll = l0; ll < l1; ++ll)
                for (int mm = m0; mm < m1; ++mm) {
                  const std::size_t srow =
                      ((std::size_t(kk + dkk) * L + (ll + dll)) * M + (mm + dmm)) *
                      std::size_t(N) * CI;
                  const std::size_t drow =
                      ((std::size_t(kk) * L + ll) * M + mm) * std::size_t(N) * CO;
                  for (int n = n0; n < n1; ++n) {
                    const float* xv = &x.v[srow + std::size_t(n + dnn) * CI + c0];
                    const __m512 dv = _mm512_loadu_ps(&dout.v[drow + std::size_t(n) * CO]);
                    for (int c = 0; c < cn_here; ++c)
                      g[c] = _mm512_fmadd_ps(_mm512_set1_ps(xv[c]), dv, g[c]);
                  }
                }
            for (int c = 0; c < cn_here; ++c) {
              float* p = &dk.w[tbase + std::size_t(c0 + c) * CO];
              _mm512_storeu_ps(p, _mm512_add_ps(_mm512_loadu_ps(p), g[c]));
            }
          }
        }
      }
    }
  }
}

#endif  // __AVX512F__

// ---------------------------------------------------------------------------
// dispatchers
// ---------------------------------------------------------------------------

template <typename T>
void cconv_forward(const ChannelGridT<T>& x, const ComplexKernelT<T>& k,
                   ChannelGridT<T>& out) {
#if defined(__AVX512F__)
  if constexpr (std::is_same_v<T, float>) {
    if (k.out_ch == 16) {
      cconv_forward_f16(x, k, out);
      return;
    }
  }
#endif
  cconv_forward_generic(x, k, out);
}

template <typename T>
void rconv_forward(const RealChannelGridT<T>& x, const RealKernelT<T>& k,
                   RealChannelGridT<T>& out) {
#if defined(__AVX512F__)
  if constexpr (std::is_same_v<T, float>) {
    if (k.out_ch == 16) {
      rconv_forward_f16(x, k, out);
      return;
    }
  }
#endif
  rconv_forward_generic(x, k, out);
}

template <typename T>
void cconv_gradw(const ChannelGridT<T>& x, const ChannelGridT<T>& dout,
                 ComplexKernelT<T>& dk) {
#if defined(__AVX512F__)
  if constexpr (std::is_same_v<T, float>) {
    if (dk.out_ch == 16) {
      cconv_gradw_f16(x, dout, dk);
      return;
    }
  }
#endif
  cconv_gradw_generic(x, dout, dk);
}

template <typename T>
void rconv_gradw(const RealChannelGridT<T>& x, const RealChannelGridT<T>& dout,
                 RealKernelT<T>& dk) {
#if defined(__AVX512F__)
  if constexpr (std::is_same_v<T, float>) {
    if (dk.out_ch == 16) {
      rconv_gradw_f16(x, dout, dk);
      return;
    }
  }
#endif
  rconv_gradw_generic(x, dout, dk);
}

// grad wrt conv input = forward conv of dout with the conjugated,
// channel-transposed, tap-flipped kernel
template <typename T>
ComplexKernelT<T> conj_transpose_flip(const ComplexKernelT<T>& k) {
  ComplexKernelT<T> t(k.kd, k.out_ch, k.in_ch);
  const int CI = k.in_ch, CO = k.out_ch;
  const int TK = k.kd.k, TL = k.kd.l, TM = k.kd.m, TN = k.kd.n;
  for (int tk = 0; tk < TK; ++tk)
    for (int tl = 0; tl < TL; ++tl)
      for (int tm = 0; tm < TM; ++tm)
        for (int tn = 0; tn < TN; ++tn) {
          const std::size_t src =
              std::size_t(((tk * TL + tl) * TM + tm) * TN + tn) * CI * CO;
          const std::size_t dst =
              std::size_t((((TK - 1 - tk) * TL + (TL - 1 - tl)) * TM + (TM - 1 - tm)) * TN +
                          (TN - 1 - tn)) * CI * CO;
          for (int ci = 0; ci < CI; ++ci)
            for (int co = 0; co < CO; ++co) {
              t.re[dst + std::size_t(co) * CI + ci] = k.re[src + std::size_t(ci) * CO + co];
              t.im[dst + std::size_t(co) * CI + ci] = -k.im[src + std::size_t(ci) * CO + co];
            }
        }
  return t;
}

template <typename T>
RealKernelT<T> transpose_flip(const RealKernelT<T>& k) {
  RealKernelT<T> t(k.kd, k.out_ch, k.in_ch);
  const int CI = k.in_ch, CO = k.out_ch;
  const int TK = k.kd.k, TL = k.kd.l, TM = k.kd.m, TN = k.kd.n;
  for (int tk = 0; tk < TK; ++tk)
    for (int tl = 0; tl < TL; ++tl)
      for (int tm = 0; tm < TM; ++tm)
        for (int tn = 0; tn < TN; ++tn) {
          const std::size_t src =
              std::size_t(((tk * TL + tl) * TM + tm) * TN + tn) * CI * CO;
          const std::size_t dst =
              std::size_t((((TK - 1 - tk) * TL + (TL - 1 - tl)) * TM + (TM - 1 - tm)) * TN +
                          (TN - 1 - tn)) * CI * CO;
          for (int ci = 0; ci < CI; ++ci)
            for (int co = 0; co < CO; ++co)
              t.w[dst + std::size_t(co) * CI + ci] = k.w[src + std::size_t(ci) * CO + co];
        }
  return t;
}

// ---------------------------------------------------------------------------
// typed parameter mirror + engine
// ---------------------------------------------------------------------------

template <typename T>
struct GatedLayerP {
  ComplexKernelT<T> conv;
  RealKernelT<T> gate;
};

template <typename T>
struct ParamsP {
  GatedLayerP<T> lift;
  std::vector<GatedLayerP<T>> inner;
  ComplexKernelT<T> head;
};

template <typename T, typename S>
void copy_ckernel(const ComplexKernelT<S>& src, ComplexKernelT<T>& dst) {
  dst.kd = src.kd;
  dst.in_ch = src.in_ch;
  dst.out_ch = src.out_ch;
  dst.re.assign(src.re.begin(), src.re.end());
  dst.im.assign(src.im.begin(), src.im.end());
}

template <typename T, typename S>
void copy_rkernel(const RealKernelT<S>& src, RealKernelT<T>& dst) {
  dst.kd = src.kd;
  dst.in_ch = src.in_ch;
  dst.out_ch = src.out_ch;
  dst.w.assign(src.w.begin(), src.w.end());
}

template <typename T>
ParamsP<T> typed_params(const DipParams& p) {
  ParamsP<T> out;
  copy_ckernel(p.lift.conv, out.lift.conv);
  copy_rkernel(p.lift.gate, out.lift.gate);
  out.inner.resize(p.inner.size());
  for (std::size_t i = 0; i < p.inner.size(); ++i) {
    copy_ckernel(p.inner[i].conv, out.inner[i].conv);
    copy_rkernel(p.inner[i].gate, out.inner[i].gate);
  }
  copy_ckernel(p.head, out.head);
  return out;
}

template <typename T>
T logistic(T s) {
  if (s >= T(0)) return T(1) / (T(1) + std::exp(-s));
  const T e = std::exp(s);
  return e / (T(1) + e);
}

template <typename T>
RealChannelGridT<T> amplitude_of(const ChannelGridT<T>& x) {
  RealChannelGridT<T> a(x.dims, x.channels);
  for (std::size_t i = 0; i < a.v.size(); ++i)
    a.v[i] = std::sqrt(x.re[i] * x.re[i] + x.im[i] * x.im[i]);
  return a;
}

template <typename T>
struct GatedActs {
  RealChannelGridT<T> amp;   // |input|
  RealChannelGridT<T> gate;  // logistic(G * amp)
  ChannelGridT<T> v;         // W * input
  ChannelGridT<T> out;       // gate .* v
};

template <typename T>
void run_gated(const ChannelGridT<T>& in, const GatedLayerP<T>& L, GatedActs<T>& acts) {
  acts.amp = amplitude_of(in);
  acts.gate = RealChannelGridT<T>(in.dims, L.gate.out_ch);
  rconv_forward(acts.amp, L.gate, acts.gate);
  for (T& s : acts.gate.v) s = logistic(s);
  acts.v = ChannelGridT<T>(in.dims, L.conv.out_ch);
  cconv_forward(in, L.conv, acts.v);
  acts.out = ChannelGridT<T>(in.dims, L.conv.out_ch);
  for (std::size_t i = 0; i < acts.out.re.size(); ++i) {
    acts.out.re[i] = acts.gate.v[i] * acts.v.re[i];
    acts.out.im[i] = acts.gate.v[i] * acts.v.im[i];
  }
}

template <typename T>
struct ForwardActs {
  ChannelGridT<T> input;
  std::vector<GatedActs<T>> layers;  // lift then inner
  ChannelGridT<T> pred;              // head output, 1 channel
};

template <typename T>
void engine_forward(const ChannelGridT<T>& input, const ParamsP<T>& P,
                    ForwardActs<T>& acts) {
  acts.input = input;
  acts.layers.resize(1 + P.inner.size());
  run_gated(acts.input, P.lift, acts.layers[0]);
  for (std::size_t i = 0; i < P.inner.size(); ++i)
    run_gated(acts.layers[i].out, P.inner[i], acts.layers[i + 1]);
  acts.pred = ChannelGridT<T>(input.dims, P.head.out_ch);
  cconv_forward(acts.layers.back().out, P.head, acts.pred);
}

// Backward through one gated layer. dout is consumed; returns grad wrt the
// layer input unless want_dx is false (lift layer: input is data).
template <typename T>
ChannelGridT<T> backward_gated(const ChannelGridT<T>& in, const GatedActs<T>& acts,
                               const GatedLayerP<T>& L, const ChannelGridT<T>& dout,
                               GatedLayerP<T>& grads, bool want_dx) {
  const std::size_t count = dout.re.size();
  // split gate product: dv = g .* dout; ds = (dout . v) * g * (1 - g)
  ChannelGridT<T> dv(dout.dims, dout.channels);
  RealChannelGridT<T> ds(dout.dims, dout.channels);
  for (std::size_t i = 0; i < count; ++i) {
    const T g = acts.gate.v[i];
    dv.re[i] = g * dout.re[i];
    dv.im[i] = g * dout.im[i];
    const T dg = dout.re[i] * acts.v.re[i] + dout.im[i] * acts.v.im[i];
    ds.v[i] = dg * g * (T(1) - g);
  }
  rconv_gradw(acts.amp, ds, grads.gate);
  cconv_gradw(in, dv, grads.conv);
  if (!want_dx) return {};
  // conv path
  const ComplexKernelT<T> wt = conj_transpose_flip(L.conv);
  ChannelGridT<T> dx(in.dims, in.channels);
  cconv_forward(dv, wt, dx);
  // gate path: damp through |.|, subgradient 0 at 0
  const RealKernelT<T> gt = transpose_flip(L.gate);
  RealChannelGridT<T> damp(in.dims, in.channels);
  rconv_forward(ds, gt, damp);
  for (std::size_t i = 0; i < dx.re.size(); ++i) {
    const T a = acts.amp.v[i];
    if (a > T(0)) {
      const T scale = damp.v[i] / a;
      dx.re[i] += scale * in.re[i];
      dx.im[i] += scale * in.im[i];
    }
  }
  return dx;
}

template <typename T>
void engine_backward(const ForwardActs<T>& acts, const ParamsP<T>& P,
                     const ChannelGridT<T>& dpred, ParamsP<T>& grads) {
  // head
  const std::size_t nl = acts.layers.size();
  cconv_gradw(acts.layers[nl - 1].out, dpred, grads.head);
  const ComplexKernelT<T> ht = conj_transpose_flip(P.head);
  ChannelGridT<T> d(acts.input.dims, P.head.in_ch);
  cconv_forward(dpred, ht, d);
  // inner layers, back to front
  for (std::size_t i = P.inner.size(); i-- > 0;) {
    const ChannelGridT<T>& in = acts.layers[i].out;
    d = backward_gated(in, acts.layers[i + 1], P.inner[i], d, grads.inner[i], true);
  }
  backward_gated(acts.input, acts.layers[0], P.lift, d, grads.lift, false);
}

template <typename T>
ParamsP<T> zero_like(const ParamsP<T>& p) {
  ParamsP<T> z;
  z.lift.conv = ComplexKernelT<T>(p.lift.conv.kd, p.lift.conv.in_ch, p.lift.conv.out_ch);
  z.lift.gate = RealKernelT<T>(p.lift.gate.kd, p.lift.gate.in_ch, p.lift.gate.out_ch);
  z.inner.resize(p.inner.size());
  for (std::size_t i = 0; i < p.inner.size(); ++i) {
    z.inner[i].conv =
        ComplexKernelT<T>(p.inner[i].conv.kd, p.inner[i].conv.in_ch, p.inner[i].conv.out_ch);
    z.inner[i].gate =
        RealKernelT<T>(p.inner[i].gate.kd, p.inner[i].gate.in_ch, p.inner[i].gate.out_ch);
  }
  z.head = ComplexKernelT<T>(p.head.kd, p.head.in_ch, p.head.out_ch);
  return z;
}

// accumulate: dst (+)= src, elementwise over the canonical parameter order
template <typename T>
void add_grads(const ParamsP<T>& src, DipGrads& dst) {
  auto addc = [](const ComplexKernelT<T>& s, ComplexKernel4D& d) {
    for (std::size_t i = 0; i < d.re.size(); ++i) d.re[i] += double(s.re[i]);
    for (std::size_t i = 0; i < d.im.size(); ++i) d.im[i] += double(s.im[i]);
  };
  auto addr = [](const RealKernelT<T>& s, RealKernel4D& d) {
    for (std::size_t i = 0; i < d.w.size(); ++i) d.w[i] += double(s.w[i]);
  };
  addc(src.lift.conv, dst.lift.conv);
  addr(src.lift.gate, dst.lift.gate);
  for (std::size_t i = 0; i < src.inner.size(); ++i) {
    addc(src.inner[i].conv, dst.inner[i].conv);
    addr(src.inner[i].gate, dst.inner[i].gate);
  }
  addc(src.head, dst.head);
}

// ---------------------------------------------------------------------------
// stacking and validation
// ---------------------------------------------------------------------------

template <typename T>
ChannelGridT<T> stack_inputs(const ComplexGrid4D& x, const ComplexGrid4D& y,
                             const ComplexGrid4D& z, const RealGrid4D& a) {
  ChannelGridT<T> s(x.dims, 4);
  const std::size_t count = x.v.size();
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t b = i * 4;
    s.re[b + 0] = T(x.v[i].real());
    s.im[b + 0] = T(x.v[i].imag());
    s.re[b + 1] = T(y.v[i].real());
    s.im[b + 1] = T(y.v[i].imag());
    s.re[b + 2] = T(z.v[i].real());
    s.im[b + 2] = T(z.v[i].imag());
    s.re[b + 3] = T(a.v[i]);
    s.im[b + 3] = T(0);
  }
  return s;
}

template <typename T>
ComplexGrid4D unstack_single(const ChannelGridT<T>& g) {
  ComplexGrid4D out(g.dims);
  for (std::size_t i = 0; i < out.v.size(); ++i)
    out.v[i] = cplx{double(g.re[i]), double(g.im[i])};
  return out;
}

void check_same_dims(const ComplexGrid4D& x, const ComplexGrid4D& y, const ComplexGrid4D& z,
                     const RealGrid4D& a, const char* where) {
  if (!(x.dims == y.dims) || !(x.dims == z.dims) || !(x.dims == a.dims))
    throw std::invalid_argument(std::string(where) + ": input grids must share dims");
}

template <typename Fn>
void for_each_block(const DipParams& p, Fn&& fn) {
  fn(p.lift.conv.re);
  fn(p.lift.conv.im);
  fn(p.lift.gate.w);
  for (const GatedLayer& g : p.inner) {
    fn(g.conv.re);
    fn(g.conv.im);
    fn(g.gate.w);
  }
  fn(p.head.re);
  fn(p.head.im);
}

template <typename Fn>
void for_each_block_mut(DipParams& p, Fn&& fn) {
  fn(p.lift.conv.re);
  fn(p.lift.conv.im);
  fn(p.lift.gate.w);
  for (GatedLayer& g : p.inner) {
    fn(g.conv.re);
    fn(g.conv.im);
    fn(g.gate.w);
  }
  fn(p.head.re);
  fn(p.head.im);
}

}  // namespace

// ---------------------------------------------------------------------------
// public parameter type
// ---------------------------------------------------------------------------

DipParams DipParams::make(int hidden, KernelDims kd, int inner_count) {
  kd.validate();
  if (hidden < 1) throw std::invalid_argument("DipParams: hidden channels must be >= 1");
  if (inner_count < 0) throw std::invalid_argument("DipParams: inner layer count < 0");
  DipParams p;
  p.hidden_channels = hidden;
  p.kernel = kd;
  p.lift.conv = ComplexKernel4D(kd, p.input_channels, hidden);
  p.lift.gate = RealKernel4D(kd, p.input_channels, hidden);
  p.inner.resize(std::size_t(inner_count));
  for (GatedLayer& g : p.inner) {
    g.conv = ComplexKernel4D(kd, hidden, hidden);
    g.gate = RealKernel4D(kd, hidden, hidden);
  }
  p.head = ComplexKernel4D(KernelDims{1, 1, 1, 1}, hidden, 1);
  return p;
}

void DipParams::validate() const {
  kernel.validate();
  if (input_channels != 4)
    throw std::invalid_argument("DipParams: input stack is fixed at 4 channels");
  auto check_gated = [&](const GatedLayer& g, int ci, const char* name) {
    if (!(g.conv.kd == kernel) || g.conv.in_ch != ci || g.conv.out_ch != hidden_channels)
      throw std::invalid_argument(std::string("DipParams: ") + name + " conv shape mismatch");
    if (!(g.gate.kd == kernel) || g.gate.in_ch != ci || g.gate.out_ch != hidden_channels)
      throw std::invalid_argument(std::string("DipParams: ") + name + " gate shape mismatch");
    const std::size_t want = std::size_t(kernel.volume()) * ci * hidden_channels;
    if (g.conv.re.size() != want || g.conv.im.size() != want || g.gate.w.size() != want)
      throw std::invalid_argument(std::string("DipParams: ") + name + " storage size mismatch");
  };
  check_gated(lift, input_channels, "lift");
  for (const GatedLayer& g : inner) check_gated(g, hidden_channels, "inner");
  if (!(head.kd == KernelDims{1, 1, 1, 1}) || head.in_ch != hidden_channels ||
      head.out_ch != 1 || head.re.size() != std::size_t(hidden_channels) ||
      head.im.size() != std::size_t(hidden_channels))
    throw std::invalid_argument("DipParams: head must be a 1x1x1x1 conv to one channel");
  bool finite = true;
  for_each_block(*this, [&](const std::vector<double>& b) {
    for (double x : b)
      if (!std::isfinite(x)) finite = false;
  });
  if (!finite) throw std::invalid_argument("DipParams: non-finite parameters");
}

std::size_t DipParams::parameter_count() const {
  std::size_t n = 0;
  for_each_block(*this, [&](const std::vector<double>& b) { n += b.size(); });
  return n;
}

DipParams init_params(std::uint64_t seed, int hidden, KernelDims kd, int inner_count) {
  DipParams p = DipParams::make(hidden, kd, inner_count);
  Rng rng(mix_seed(seed, 0x696e6974u));  // substream tag: init
  auto fill_conv = [&](ComplexKernel4D& k) {
    // E|W|^2 = 1/(taps * fan_in) keeps per-conv signal variance near unity
    const double s = std::sqrt(1.0 / (2.0 * k.kd.volume() * k.in_ch));
    for (double& w : k.re) w = s * rng.normal();
    for (double& w : k.im) w = s * rng.normal();
  };
  fill_conv(p.lift.conv);
  for (GatedLayer& g : p.inner) fill_conv(g.conv);
  // gate kernels zero (gate 1/2) and zero head: the initial net outputs 0
  return p;
}

std::vector<double> params_to_vector(const DipParams& p) {
  std::vector<double> v;
  v.reserve(p.parameter_count());
  for_each_block(p, [&](const std::vector<double>& b) { v.insert(v.end(), b.begin(), b.end()); });
  return v;
}

void vector_to_params(const std::vector<double>& v, DipParams& p) {
  if (v.size() != p.parameter_count())
    throw std::invalid_argument("vector_to_params: size mismatch");
  std::size_t off = 0;
  for_each_block_mut(p, [&](std::vector<double>& b) {
    std::copy(v.begin() + off, v.begin() + off + b.size(), b.begin());
    off += b.size();
  });
}

// ---------------------------------------------------------------------------
// public ops
// ---------------------------------------------------------------------------

ComplexChannelGrid complex_conv4d(const ComplexChannelGrid& x, const ComplexKernel4D& k) {
  k.kd.validate();
  if (x.channels != k.in_ch)
    throw std::invalid_argument("complex_conv4d: input channels do not match kernel");
  if (x.dims.volume() == 0) throw std::invalid_argument("complex_conv4d: empty input");
  ComplexChannelGrid out(x.dims, k.out_ch);
  cconv_forward(x, k, out);
  return out;
}

RealChannelGrid real_conv4d(const RealChannelGrid& x, const RealKernel4D& k) {
  k.kd.validate();
  if (x.channels != k.in_ch)
    throw std::invalid_argument("real_conv4d: input channels do not match kernel");
  RealChannelGrid out(x.dims, k.out_ch);
  rconv_forward(x, k, out);
  return out;
}

ComplexChannelGrid gated_complex_layer(const ComplexChannelGrid& x, const GatedLayer& layer) {
  if (x.channels != layer.conv.in_ch || x.channels != layer.gate.in_ch ||
      layer.conv.out_ch != layer.gate.out_ch || !(layer.conv.kd == layer.gate.kd))
    throw std::invalid_argument("gated_complex_layer: shape mismatch");
  GatedLayerP<double> L;
  copy_ckernel(layer.conv, L.conv);
  copy_rkernel(layer.gate, L.gate);
  GatedActs<double> acts;
  run_gated(x, L, acts);
  return acts.out;
}

namespace {

template <typename T>
ComplexGrid4D dip_forward_typed(const ComplexGrid4D& x, const ComplexGrid4D& y,
                                const ComplexGrid4D& z, const RealGrid4D& a,
                                const DipParams& params) {
  const ParamsP<T> P = typed_params<T>(params);
  ForwardActs<T> acts;
  engine_forward(stack_inputs<T>(x, y, z, a), P, acts);
  return unstack_single(acts.pred);
}

}  // namespace

ComplexGrid4D dip_forward(const ComplexGrid4D& x, const ComplexGrid4D& y,
                          const ComplexGrid4D& z, const RealGrid4D& a,
                          const DipParams& params, DipPrecision precision) {
  check_same_dims(x, y, z, a, "dip_forward");
  params.validate();
  return precision == DipPrecision::F32 ? dip_forward_typed<float>(x, y, z, a, params)
                                        : dip_forward_typed<double>(x, y, z, a, params);
}

ComplexGrid4D dip_iterate(const ComplexGrid4D& x, const RealGrid4D& a, const Probe& probe,
                          const ScanGrid& scan, const DipParams& params,
                          const ProjectionConfig& cfg, DipPrecision precision) {
  const ComplexGrid4D y = proj_amplitude(x, a, cfg);
  const ComplexGrid4D z = proj_consistency(y, probe, scan);
  const ComplexGrid4D residual = dip_forward(x, y, z, a, params, precision);
  ComplexGrid4D out(z.dims);
  for (std::size_t i = 0; i < out.v.size(); ++i) out.v[i] = z.v[i] - residual.v[i];
  return out;
}

double dip_loss(const ComplexGrid4D& predicted, const ComplexGrid4D& target) {
  if (!(predicted.dims == target.dims))
    throw std::invalid_argument("dip_loss: dims do not match");
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.v.size(); ++i)
    s += std::norm(target.v[i] - predicted.v[i]);
  return s;
}

TrainSample make_train_sample(const ComplexGrid2D& object_canvas, const Probe& probe,
                              const ScanGrid& scan, const NoiseSpec& noise,
                              std::uint64_t seed, const ProjectionConfig& cfg) {
  TrainSample s;
  const ComplexGrid4D clean = pty_stft(object_canvas, probe, scan);
  CorruptionResult corr = sample_corruption(noise, clean, seed);
  s.noise_parameter = corr.parameter;
  s.x = std::move(corr.grid);
  s.a = abs_grid(clean);
  s.y = proj_amplitude(s.x, s.a, cfg);
  s.z = proj_consistency(s.y, probe, scan);
  s.target = ComplexGrid4D(clean.dims);
  for (std::size_t i = 0; i < clean.v.size(); ++i) s.target.v[i] = s.z.v[i] - clean.v[i];
  return s;
}

namespace {

template <typename T>
double backward_typed(const TrainSample& sample, const DipParams& params, DipGrads& grads) {
  const ParamsP<T> P = typed_params<T>(params);
  ForwardActs<T> acts;
  engine_forward(stack_inputs<T>(sample.x, sample.y, sample.z, sample.a), P, acts);
  double loss = 0.0;
  ChannelGridT<T> dpred(acts.pred.dims, 1);
  for (std::size_t i = 0; i < acts.pred.re.size(); ++i) {
    const double er = double(acts.pred.re[i]) - sample.target.v[i].real();
    const double ei = double(acts.pred.im[i]) - sample.target.v[i].imag();
    loss += er * er + ei * ei;
    dpred.re[i] = T(2.0 * er);
    dpred.im[i] = T(2.0 * ei);
  }
  ParamsP<T> g = zero_like(P);
  engine_backward(acts, P, dpred, g);
  add_grads(g, grads);
  return loss;
}

}  // namespace

BackwardResult dip_backward(const TrainSample& sample, const DipParams& params,
                            DipPrecision precision) {
  check_same_dims(sample.x, sample.y, sample.z, sample.a, "dip_backward");
  if (!(sample.target.dims == sample.x.dims))
    throw std::invalid_argument("dip_backward: target dims do not match");
  params.validate();
  BackwardResult r;
  r.grads = DipParams::make(params.hidden_channels, params.kernel, int(params.inner.size()));
  r.loss = precision == DipPrecision::F32 ? backward_typed<float>(sample, params, r.grads)
                                          : backward_typed<double>(sample, params, r.grads);
  return r;
}

void adam_update(DipParams& params, const DipGrads& grads, AdamState& state) {
  if (!(state.lr > 0.0)) throw std::invalid_argument("adam_update: lr must be > 0");
  if (!(state.beta1 >= 0.0 && state.beta1 < 1.0 && state.beta2 >= 0.0 && state.beta2 < 1.0))
    throw std::invalid_argument("adam_update: betas must be in [0, 1)");
  std::vector<double> p = params_to_vector(params);
  const std::vector<double> g = params_to_vector(grads);
  if (p.size() != g.size())
    throw std::invalid_argument("adam_update: gradient shape mismatch");
  if (state.m.empty()) {
    state.m.assign(p.size(), 0.0);
    state.v.assign(p.size(), 0.0);
  }
  if (state.m.size() != p.size() || state.v.size() != p.size())
    throw std::invalid_argument("adam_update: state shape mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, double(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, double(state.step));
  for (std::size_t i = 0; i < p.size(); ++i) {
    state.m[i] = state.beta1 * state.m[i] + (1.0 - state.beta1) * g[i];
    state.v[i] = state.beta2 * state.v[i] + (1.0 - state.beta2) * g[i] * g[i];
    const double mhat = state.m[i] / bc1;
    const double vhat = state.v[i] / bc2;
    p[i] -= state.lr * mhat / (std::sqrt(vhat) + state.eps);
  }
  vector_to_params(p, params);
}

// ---------------------------------------------------------------------------
// training
// ---------------------------------------------------------------------------

TrainResult train(const std::vector<RealGrid2D>& images, const Geometry& geom,
                  const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& progress) {
  if (images.empty()) throw std::invalid_argument("train: empty dataset");
  if (cfg.epochs < 1) throw std::invalid_argument("train: epochs must be >= 1");
  if (!(cfg.learning_rate > 0.0)) throw std::invalid_argument("train: lr must be > 0");
  if (cfg.batch_size < 1) throw std::invalid_argument("train: batch_size must be >= 1");
  if (cfg.validation_count < 0 || std::size_t(cfg.validation_count) >= images.size())
    throw std::invalid_argument("train: validation_count must leave at least one sample");
  cfg.noise.validate();

  const std::size_t n_train = images.size() - std::size_t(cfg.validation_count);
  TrainResult result;
  result.params =
      init_params(mix_seed(cfg.seed, 0x6d6f64656cu), cfg.hidden_channels, cfg.kernel,
                  cfg.inner_layers);
  AdamState state;
  state.lr = cfg.learning_rate;

  // fixed validation corruption: the curve is comparable across epochs
  std::vector<TrainSample> val;
  val.reserve(std::size_t(cfg.validation_count));
  for (int i = 0; i < cfg.validation_count; ++i) {
    const ComplexGrid2D canvas = embed_image(geom, images[n_train + std::size_t(i)]);
    val.push_back(make_train_sample(canvas, geom.probe, geom.scan, cfg.noise,
                                    mix_seed(cfg.seed, 0x76616cu, std::uint64_t(i)),
                                    cfg.projection));
  }
  auto val_loss = [&]() {
    if (val.empty()) return 0.0;
    double s = 0.0;
    for (const TrainSample& vs : val)
      s += dip_loss(dip_forward(vs.x, vs.y, vs.z, vs.a, result.params, cfg.precision),
                    vs.target);
    return s / double(val.size());
  };

  EpochLog initial;
  initial.epoch = 0;
  initial.train_loss = std::numeric_limits<double>::quiet_NaN();
  initial.val_loss = val_loss();
  result.log.push_back(initial);
  if (progress) progress(initial);

  std::vector<std::size_t> order(n_train);
  for (std::size_t i = 0; i < n_train; ++i) order[i] = i;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    Rng shuffle_rng(mix_seed(cfg.seed, 0x73687566u, std::uint64_t(epoch)));
    for (std::size_t i = n_train; i-- > 1;)
      std::swap(order[i], order[shuffle_rng.below(i + 1)]);

    double epoch_loss = 0.0;
    std::size_t done = 0;
    int batch_index = 0;
    while (done < n_train) {
      const std::size_t bn = std::min<std::size_t>(std::size_t(cfg.batch_size), n_train - done);
      DipGrads grads = DipParams::make(cfg.hidden_channels, cfg.kernel, cfg.inner_layers);
      double batch_loss = 0.0;
      for (std::size_t b = 0; b < bn; ++b) {
        const std::size_t idx = order[done + b];
        const ComplexGrid2D canvas = embed_image(geom, images[idx]);
        const TrainSample sample = make_train_sample(
            canvas, geom.probe, geom.scan, cfg.noise,
            mix_seed(cfg.seed, 0x64617461u, std::uint64_t(epoch), std::uint64_t(idx)),
            cfg.projection);
        if (cfg.precision == DipPrecision::F32)
          batch_loss += backward_typed<float>(sample, result.params, grads);
        else
          batch_loss += backward_typed<double>(sample, result.params, grads);
      }
      if (!std::isfinite(batch_loss))
        throw std::runtime_error("train: loss diverged (epoch " + std::to_string(epoch) +
                                 ", batch " + std::to_string(batch_index) + ")");
      const double inv = 1.0 / double(bn);
      for_each_block_mut(grads, [&](std::vector<double>& blk) {
        for (double& x : blk) x *= inv;
      });
      adam_update(result.params, grads, state);
      epoch_loss += batch_loss;
      done += bn;
      ++batch_index;
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = epoch_loss / double(n_train);
    log.val_loss = val_loss();
    log.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    result.log.push_back(log);
    if (progress) progress(log);
  }
  return result;
}

// ---------------------------------------------------------------------------
// model container
// ---------------------------------------------------------------------------

static_assert(std::endian::native == std::endian::little,
              "model container is little-endian; byte swapping is not implemented");

namespace {

constexpr std::uint16_t kModelVersion = 1;

void put_u16(std::string& buf, std::uint16_t v) {
  buf.append(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint16_t take_u16(const std::string& buf, std::size_t& off, const std::string& path) {
  if (off + 2 > buf.size()) throw std::runtime_error(path + ": truncated model header");
  std::uint16_t v;
  std::memcpy(&v, buf.data() + off, 2);
  off += 2;
  return v;
}

}  // namespace

void save_model(const std::string& path, const DipParams& params) {
  params.validate();
  std::string buf;
  buf.append("DIPM", 4);
  put_u16(buf, kModelVersion);
  put_u16(buf, std::uint16_t(params.input_channels));
  put_u16(buf, std::uint16_t(params.hidden_channels));
  put_u16(buf, std::uint16_t(params.inner.size()));
  put_u16(buf, std::uint16_t(params.kernel.k));
  put_u16(buf, std::uint16_t(params.kernel.l));
  put_u16(buf, std::uint16_t(params.kernel.m));
  put_u16(buf, std::uint16_t(params.kernel.n));
  for_each_block(params, [&](const std::vector<double>& b) {
    buf.append(reinterpret_cast<const char*>(b.data()), b.size() * sizeof(double));
  });
  const std::uint32_t crc =
      std::uint32_t(crc32(0, reinterpret_cast<const Bytef*>(buf.data()), uInt(buf.size())));
  buf.append(reinterpret_cast<const char*>(&crc), sizeof crc);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os.write(buf.data(), std::streamsize(buf.size()));
  if (!os) throw std::runtime_error(path + ": write failed");
}

DipParams load_model(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw std::runtime_error(path + ": cannot open");
  std::string buf((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  if (buf.size() < 4 + 2 + 14 + 4) throw std::runtime_error(path + ": truncated model file");
  if (std::memcmp(buf.data(), "DIPM", 4) != 0)
    throw std::runtime_error(path + ": not a model file (bad magic)");
  std::uint32_t stored_crc;
  std::memcpy(&stored_crc, buf.data() + buf.size() - 4, 4);
  const std::uint32_t crc = std::uint32_t(
      crc32(0, reinterpret_cast<const Bytef*>(buf.data()), uInt(buf.size() - 4)));
  if (crc != stored_crc) throw std::runtime_error(path + ": checksum mismatch (corrupt model)");
  std::size_t off = 4;
  const std::uint16_t version = take_u16(buf, off, path);
  if (version != kModelVersion)
    throw std::runtime_error(path + ": unsupported model version " + std::to_string(version));
  const int input_ch = take_u16(buf, off, path);
  const int hidden = take_u16(buf, off, path);
  const int inner_count = take_u16(buf, off, path);
  KernelDims kd;
  kd.k = take_u16(buf, off, path);
  kd.l = take_u16(buf, off, path);
  kd.m = take_u16(buf, off, path);
  kd.n = take_u16(buf, off, path);
  if (input_ch != 4) throw std::runtime_error(path + ": unsupported input channel count");
  DipParams p = DipParams::make(hidden, kd, inner_count);
  const std::size_t payload = p.parameter_count() * sizeof(double);
  if (buf.size() != off + payload + 4)
    throw std::runtime_error(path + ": model payload size mismatch");
  for_each_block_mut(p, [&](std::vector<double>& b) {
    std::memcpy(b.data(), buf.data() + off, b.size() * sizeof(double));
    off += b.size() * sizeof(double);
  });
  p.validate();
  return p;
}

}  // namespace ptycho
