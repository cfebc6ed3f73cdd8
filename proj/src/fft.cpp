#include "ptycho/fft.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>

namespace ptycho {

namespace {

// FFTW plans are cached per (m, n, sign). FFTW_ESTIMATE keeps plan selection
// independent of runtime measurements, so repeat runs execute identical code
// paths; FFTW_UNALIGNED lets the plan execute on any std::vector storage.
class PlanCache {
 public:
  fftw_plan get(int m, int n, int sign) {
    const std::tuple<int, int, int> key{m, n, sign};
    std::lock_guard<std::mutex> lock(mu_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<fftw_complex> a(std::size_t(m) * n), b(std::size_t(m) * n);
    fftw_plan p = fftw_plan_dft_2d(m, n, a.data(), b.data(), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    plans_.emplace(key, p);
    return p;
  }

 private:
  std::mutex mu_;
  std::map<std::tuple<int, int, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

ComplexGrid4D transform_segments(const ComplexGrid4D& x, int sign, const char* what) {
  require_finite(x, what);
  ComplexGrid4D out(x.dims);
  const int m = x.dims.m, n = x.dims.n;
  const std::size_t seg = std::size_t(m) * n;
  fftw_plan p = cache().get(m, n, sign);
  const double scale = 1.0 / std::sqrt(double(seg));
  const std::size_t segments = std::size_t(x.dims.k) * x.dims.l;
  for (std::size_t s = 0; s < segments; ++s) {
    auto* in = reinterpret_cast<fftw_complex*>(const_cast<cplx*>(x.v.data() + s * seg));
    auto* dst = reinterpret_cast<fftw_complex*>(out.v.data() + s * seg);
    fftw_execute_dft(p, in, dst);
  }
  for (cplx& z : out.v) z *= scale;
  return out;
}

}  // namespace

ComplexGrid4D fft2_segments(const ComplexGrid4D& x) {
  return transform_segments(x, FFTW_FORWARD, "fft2_segments input");
}

ComplexGrid4D ifft2_segments(const ComplexGrid4D& x) {
  return transform_segments(x, FFTW_BACKWARD, "ifft2_segments input");
}

namespace detail {

void dft2_unitary(const cplx* in, cplx* out, int m, int n, int sign) {
  fftw_plan p = cache().get(m, n, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
  const double scale = 1.0 / std::sqrt(double(m) * n);
  const std::size_t seg = std::size_t(m) * n;
  for (std::size_t i = 0; i < seg; ++i) out[i] *= scale;
}

}  // namespace detail

}  // namespace ptycho
