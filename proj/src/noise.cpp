#include "ptycho/noise.hpp"

#include <cmath>
#include <stdexcept>

#include "ptycho/rng.hpp"

namespace ptycho {

namespace {

constexpr double kPi = 3.141592653589793238462643383279;
constexpr double kTwoPi = 2.0 * kPi;

double wrap_angle(double t) {
  double w = std::remainder(t, kTwoPi);  // [-pi, pi]
  if (w <= -kPi) w = kPi;
  return w;
}

// Best-Fisher rejection step; returns one von-Mises(0, kappa) angle.
// Constants (r) are precomputed by the caller.
double von_mises_draw(Rng& rng, double kappa, double r) {
  for (;;) {
    const double u1 = rng.uniform_open();
    const double z = std::cos(kPi * u1);
    const double f = (1.0 + r * z) / (r + z);
    const double c = kappa * (r - f);
    const double u2 = rng.uniform_open();
    if (c * (2.0 - c) - u2 > 0.0 || std::log(c / u2) + 1.0 - c >= 0.0) {
      const double u3 = rng.uniform();
      // rounding can push f a hair outside [-1, 1] at extreme kappa
      const double fc = f > 1.0 ? 1.0 : (f < -1.0 ? -1.0 : f);
      const double a = std::acos(fc);
      return u3 < 0.5 ? -a : a;
    }
  }
}

double envelope_r(double kappa) {
  const double a = 1.0 + std::sqrt(1.0 + 4.0 * kappa * kappa);
  const double b = (a - std::sqrt(2.0 * a)) / (2.0 * kappa);
  return (1.0 + b * b) / (2.0 * b);
}

}  // namespace

double bessel_i0(double kappa) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("bessel_i0: kappa must be >= 0");
  if (kappa < 15.0) {
    // sum_k (kappa^2/4)^k / (k!)^2; all terms positive, no cancellation
    const double q = kappa * kappa / 4.0;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 200; ++k) {
      term *= q / (double(k) * k);
      sum += term;
      if (term < sum * 1e-17) break;
    }
    return sum;
  }
  // I0(k) ~ e^k/sqrt(2 pi k) * sum_j mu_j / k^j, mu_j = prod((2i-1)^2)/(j! 8^j);
  // stop at the smallest term (asymptotic series)
  double term = 1.0, sum = 1.0;
  for (int j = 1; j < 40; ++j) {
    const double next = term * double(2 * j - 1) * double(2 * j - 1) / (8.0 * j * kappa);
    if (next >= term) break;
    term = next;
    sum += term;
    if (term < sum * 1e-17) break;
  }
  return std::exp(kappa) / std::sqrt(kTwoPi * kappa) * sum;
}

std::vector<double> sample_von_mises(double kappa, double mu, std::size_t count,
                                     std::uint64_t seed) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("sample_von_mises: kappa must be >= 0");
  std::vector<double> out(count);
  Rng rng(mix_seed(seed, 0x766d7361u));  // substream tag: von-Mises sampling
  if (kappa == 0.0) {
    for (double& t : out) t = wrap_angle(kTwoPi * rng.uniform());
    return out;
  }
  const double r = envelope_r(kappa);
  for (double& t : out) t = wrap_angle(von_mises_draw(rng, kappa, r) + mu);
  return out;
}

ComplexGrid4D add_phase_noise(const ComplexGrid4D& x, double kappa, std::uint64_t seed) {
  if (!(kappa >= 0.0)) throw std::invalid_argument("add_phase_noise: kappa must be >= 0");
  require_finite(x, "add_phase_noise input");
  ComplexGrid4D out(x.dims);
  Rng rng(mix_seed(seed, 0x70686e7au));  // substream tag: phase noise
  if (kappa == 0.0) {
    for (std::size_t i = 0; i < x.v.size(); ++i) {
      const double t = kTwoPi * rng.uniform();
      out.v[i] = x.v[i] * cplx{std::cos(t), std::sin(t)};
    }
    return out;
  }
  const double r = envelope_r(kappa);
  for (std::size_t i = 0; i < x.v.size(); ++i) {
    const double t = von_mises_draw(rng, kappa, r);
    out.v[i] = x.v[i] * cplx{std::cos(t), std::sin(t)};
  }
  return out;
}

ComplexGrid4D add_complex_gaussian(const ComplexGrid4D& x, double snr_db,
                                   std::uint64_t seed) {
  require_finite(x, "add_complex_gaussian input");
  if (!std::isfinite(snr_db))
    throw std::invalid_argument("add_complex_gaussian: snr_db must be finite");
  double signal = 0.0;
  for (const cplx& z : x.v) signal += std::norm(z);
  if (!(signal > 0.0))
    throw std::invalid_argument("add_complex_gaussian: zero-signal input, SNR undefined");
  // E|n_b|^2 = ||x||^2 / (count * 10^(snr/10))
  const double bin_var = signal / (double(x.v.size()) * std::pow(10.0, snr_db / 10.0));
  const double s = std::sqrt(bin_var / 2.0);
  ComplexGrid4D out(x.dims);
  Rng rng(mix_seed(seed, 0x63677373u));  // substream tag: complex Gaussian
  for (std::size_t i = 0; i < x.v.size(); ++i)
    out.v[i] = x.v[i] + cplx{s * rng.normal(), s * rng.normal()};
  return out;
}

void NoiseSpec::validate() const {
  if (kind == NoiseKind::ComplexGaussian) {
    if (!(snr_db_min <= snr_db_max))
      throw std::invalid_argument("NoiseSpec: empty snr_db range");
    if (!std::isfinite(snr_db_min) || !std::isfinite(snr_db_max))
      throw std::invalid_argument("NoiseSpec: snr_db range must be finite");
  } else {
    if (!(kappa_min > 0.0))
      throw std::invalid_argument("NoiseSpec: kappa range lower bound must be > 0");
    if (!(kappa_min <= kappa_max)) throw std::invalid_argument("NoiseSpec: empty kappa range");
  }
  if (!std::isfinite(mu)) throw std::invalid_argument("NoiseSpec: mu must be finite");
}

CorruptionResult sample_corruption(const NoiseSpec& spec, const ComplexGrid4D& x,
                                   std::uint64_t seed) {
  spec.validate();
  Rng rng(mix_seed(seed, 0x64726177u));  // substream tag: parameter draw
  CorruptionResult r;
  if (spec.kind == NoiseKind::ComplexGaussian) {
    r.parameter = rng.uniform(spec.snr_db_min, spec.snr_db_max);
    r.grid = add_complex_gaussian(x, r.parameter, mix_seed(seed, 0x6170706cu));
  } else {
    r.parameter = rng.uniform(spec.kappa_min, spec.kappa_max);
    r.grid = add_phase_noise(x, r.parameter, mix_seed(seed, 0x6170706cu));
  }
  return r;
}

}  // namespace ptycho
