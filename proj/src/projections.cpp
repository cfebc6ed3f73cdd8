#include "ptycho/projections.hpp"

#include <cmath>
#include <stdexcept>

#include "ptycho/rng.hpp"

namespace ptycho {

namespace {

void check_config(const ProjectionConfig& cfg) {
  if (!(cfg.delta > 0.0) || cfg.delta > 1e-6)
    throw std::invalid_argument("ProjectionConfig: delta must be in (0, 1e-6]");
}

void check_amplitudes(const ComplexGrid4D& x, const RealGrid4D& a, const char* where) {
  if (!(x.dims == a.dims))
    throw std::invalid_argument(std::string(where) + ": dims of x and a do not match");
  for (double v : a.v)
    if (!(v >= 0.0))
      throw std::invalid_argument(std::string(where) + ": amplitudes must be nonnegative");
}

}  // namespace

ComplexGrid4D proj_amplitude(const ComplexGrid4D& x, const RealGrid4D& a,
                             const ProjectionConfig& cfg) {
  check_config(cfg);
  check_amplitudes(x, a, "proj_amplitude");
  ComplexGrid4D out(x.dims);
  for (std::size_t i = 0; i < x.v.size(); ++i)
    out.v[i] = a.v[i] * x.v[i] / (std::abs(x.v[i]) + cfg.delta);
  return out;
}

ComplexGrid4D proj_consistency(const ComplexGrid4D& x, const Probe& probe,
                               const ScanGrid& scan) {
  return pty_stft(pty_istft(x, probe, scan), probe, scan);
}

ComplexGrid4D ap_step(const ComplexGrid4D& x, const RealGrid4D& a, const Probe& probe,
                      const ScanGrid& scan, const ProjectionConfig& cfg) {
  return proj_consistency(proj_amplitude(x, a, cfg), probe, scan);
}

ComplexGrid4D dm_step(const ComplexGrid4D& x, const RealGrid4D& a, const Probe& probe,
                      const ScanGrid& scan, const ProjectionConfig& cfg, const DmConfig& dm) {
  if (!(dm.beta > 0.0) || dm.beta > 1.0)
    throw std::invalid_argument("DmConfig: beta must be in (0, 1]");
  const ComplexGrid4D pa = proj_amplitude(x, a, cfg);
  const ComplexGrid4D pc = proj_consistency(x, probe, scan);
  ComplexGrid4D fa(x.dims), fc(x.dims);
  const double inv_beta = 1.0 / dm.beta;
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    fa.v[i] = pa.v[i] - (pa.v[i] - x.v[i]) * inv_beta;
    fc.v[i] = pc.v[i] + (pc.v[i] - x.v[i]) * inv_beta;
  }
  const ComplexGrid4D pafc = proj_amplitude(fc, a, cfg);
  const ComplexGrid4D pcfa = proj_consistency(fa, probe, scan);
  ComplexGrid4D out(x.dims);
  for (std::size_t i = 0; i < x.v.size(); ++i)
    out.v[i] = x.v[i] + dm.beta * (pafc.v[i] - pcfa.v[i]);
  return out;
}

ComplexGrid4D random_phase_init(const RealGrid4D& a, std::uint64_t seed) {
  for (double v : a.v)
    if (!(v >= 0.0))
      throw std::invalid_argument("random_phase_init: amplitudes must be nonnegative");
  Rng rng(mix_seed(seed, 0x70686173u));  // substream tag: phase init
  ComplexGrid4D out(a.dims);
  constexpr double two_pi = 6.283185307179586476925286766559;
  for (std::size_t i = 0; i < a.v.size(); ++i) {
    const double theta = two_pi * rng.uniform();
    out.v[i] = cplx{a.v[i] * std::cos(theta), a.v[i] * std::sin(theta)};
  }
  return out;
}

double amplitude_mismatch(const ComplexGrid4D& x, const RealGrid4D& a) {
  if (!(x.dims == a.dims))
    throw std::invalid_argument("amplitude_mismatch: dims do not match");
  double s = 0.0;
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    const double d = std::abs(x.v[i]) - a.v[i];
    s += d * d;
  }
  return std::sqrt(s);
}

}  // namespace ptycho
