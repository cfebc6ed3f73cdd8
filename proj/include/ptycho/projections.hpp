#pragma once

#include <cstdint>

#include "ptycho/forward_model.hpp"
#include "ptycho/grid.hpp"

namespace ptycho {

struct ProjectionConfig {
  double delta = 1e-12;  // fudge factor in a*x/(|x|+delta); must be in (0, 1e-6]
};

struct DmConfig {
  double beta = 1.0;  // must be in (0, 1]
};

// Amplitude projection: out = a*x/(|x|+delta). Phases unchanged; zero bins
// stay zero regardless of a.
ComplexGrid4D proj_amplitude(const ComplexGrid4D& x, const RealGrid4D& a,
                             const ProjectionConfig& cfg = {});

// Consistency projection onto the image of pty_stft: pty_stft(pty_istft(x)).
// Linear and idempotent.
ComplexGrid4D proj_consistency(const ComplexGrid4D& x, const Probe& probe,
                               const ScanGrid& scan);

// One alternating-projections update: P_C(P_A(x)).
ComplexGrid4D ap_step(const ComplexGrid4D& x, const RealGrid4D& a, const Probe& probe,
                      const ScanGrid& scan, const ProjectionConfig& cfg = {});

// One difference-map update with estimates
//   f_A(x) = P_A(x) - (P_A(x) - x)/beta,  f_C(x) = P_C(x) + (P_C(x) - x)/beta,
//   out = x + beta*(P_A(f_C(x)) - P_C(f_A(x))).
ComplexGrid4D dm_step(const ComplexGrid4D& x, const RealGrid4D& a, const Probe& probe,
                      const ScanGrid& scan, const ProjectionConfig& cfg = {},
                      const DmConfig& dm = {});

// out = a*exp(i*theta), theta i.i.d. uniform on [0, 2pi) per bin; |out| == a
// exactly and the draw depends only on the seed.
ComplexGrid4D random_phase_init(const RealGrid4D& a, std::uint64_t seed);

// ||  |x| - a ||_F
double amplitude_mismatch(const ComplexGrid4D& x, const RealGrid4D& a);

}  // namespace ptycho
