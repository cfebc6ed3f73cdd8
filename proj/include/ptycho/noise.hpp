#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "ptycho/grid.hpp"

namespace ptycho {

// I0(kappa): power series below kappa=15, asymptotic expansion above;
// relative error <= 1e-12 across the switch. kappa < 0 is rejected.
double bessel_i0(double kappa);

// i.i.d. von-Mises(mu, kappa) angles wrapped to (-pi, pi], deterministic in
// seed. Best-Fisher rejection sampling with a wrapped-Cauchy envelope;
// kappa == 0 falls back to the exact uniform draw.
std::vector<double> sample_von_mises(double kappa, double mu, std::size_t count,
                                     std::uint64_t seed);

// out[b] = x[b]*exp(i*eps_b), eps_b ~ von-Mises(0, kappa). Amplitudes are
// preserved to FP rounding.
ComplexGrid4D add_phase_noise(const ComplexGrid4D& x, double kappa, std::uint64_t seed);

// Adds circularly-symmetric complex Gaussian noise with per-bin variance set
// from the grid's total energy: 10*log10(||x||^2 / E||noise||^2) = snr_db.
// Zero-signal input is rejected (the SNR target is undefined).
ComplexGrid4D add_complex_gaussian(const ComplexGrid4D& x, double snr_db,
                                   std::uint64_t seed);

enum class NoiseKind { ComplexGaussian, VonMisesPhase };

struct NoiseSpec {
  NoiseKind kind = NoiseKind::VonMisesPhase;
  double snr_db_min = -24.0, snr_db_max = 0.0;  // ComplexGaussian
  double kappa_min = 0.01, kappa_max = 3.0;     // VonMisesPhase
  double mu = 0.0;

  void validate() const;
};

struct CorruptionResult {
  ComplexGrid4D grid;
  double parameter = 0.0;  // the drawn SNR (dB) or kappa
};

// Draws the corruption parameter uniformly from the configured range and applies
// the matching noise model.
CorruptionResult sample_corruption(const NoiseSpec& spec, const ComplexGrid4D& x,
                                   std::uint64_t seed);

}  // namespace ptycho
