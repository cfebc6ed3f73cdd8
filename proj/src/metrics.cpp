#include "ptycho/metrics.hpp"

#include <cmath>
#include <stdexcept>

namespace ptycho {

E0Result e0(const ComplexGrid2D& true_obj, const ComplexGrid2D& est_obj) {
  if (true_obj.h != est_obj.h || true_obj.w != est_obj.w)
    throw std::invalid_argument("e0: dims do not match");
  double true_energy = 0.0, est_energy = 0.0;
  cplx cross{};
  for (std::size_t i = 0; i < true_obj.v.size(); ++i) {
    true_energy += std::norm(true_obj.v[i]);
    est_energy += std::norm(est_obj.v[i]);
    cross += true_obj.v[i] * std::conj(est_obj.v[i]);
  }
  if (!(true_energy > 0.0)) throw std::invalid_argument("e0: true object identically zero");
  E0Result r;
  if (est_energy == 0.0) {
    r.value = 1.0;
    r.gamma = cplx{};
    r.degenerate = true;
    return r;
  }
  r.gamma = cross / est_energy;
  double err = 0.0;
  for (std::size_t i = 0; i < true_obj.v.size(); ++i)
    err += std::norm(true_obj.v[i] - r.gamma * est_obj.v[i]);
  r.value = std::sqrt(err / true_energy);
  return r;
}

double psnr(const RealGrid2D& true_amp, const RealGrid2D& est_amp, double peak) {
  if (true_amp.h != est_amp.h || true_amp.w != est_amp.w)
    throw std::invalid_argument("psnr: dims do not match");
  if (!(peak > 0.0)) throw std::invalid_argument("psnr: peak must be positive");
  double mse = 0.0;
  for (std::size_t i = 0; i < true_amp.v.size(); ++i) {
    const double d = true_amp.v[i] - est_amp.v[i];
    mse += d * d;
  }
  mse /= double(true_amp.v.size());
  if (mse == 0.0) return kPsnrCapDb;
  const double db = 10.0 * std::log10(peak * peak / mse);
  return db > kPsnrCapDb ? kPsnrCapDb : db;
}

ComplexGrid2D crop_to_roi(const ComplexGrid2D& obj, int pad) {
  if (pad < 0) throw std::invalid_argument("crop_to_roi: pad must be >= 0");
  if (obj.h <= 2 * pad || obj.w <= 2 * pad)
    throw std::invalid_argument("crop_to_roi: pad leaves no interior");
  if (pad == 0) return obj;
  ComplexGrid2D out(obj.h - 2 * pad, obj.w - 2 * pad);
  for (int i = 0; i < out.h; ++i)
    for (int j = 0; j < out.w; ++j) out.at(i, j) = obj.at(i + pad, j + pad);
  return out;
}

RealGrid2D amplitude(const ComplexGrid2D& g) {
  RealGrid2D out(g.h, g.w);
  for (std::size_t i = 0; i < g.v.size(); ++i) out.v[i] = std::abs(g.v[i]);
  return out;
}

MetricReport evaluate_object(const ComplexGrid2D& true_obj, const ComplexGrid2D& est_obj,
                             double peak) {
  const E0Result r = e0(true_obj, est_obj);
  MetricReport m;
  m.e0 = r.value;
  m.gamma = r.gamma;
  m.degenerate = r.degenerate;
  m.psnr_db = psnr(amplitude(true_obj), amplitude(est_obj), peak);
  return m;
}

}  // namespace ptycho
