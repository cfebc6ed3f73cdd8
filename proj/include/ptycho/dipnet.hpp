#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "ptycho/forward_model.hpp"
#include "ptycho/grid.hpp"
#include "ptycho/noise.hpp"
#include "ptycho/projections.hpp"

namespace ptycho {

struct KernelDims {
  int k = 5, l = 5, m = 3, n = 3;  // must all be odd (centered taps)

  bool operator==(const KernelDims&) const = default;
  int volume() const { return k * l * m * n; }
  void validate() const;
};

// Multichannel complex grid, channels-last: re/im planes indexed
// (((k*L + l)*M + m)*N + n)*C + c.
template <typename T>
struct ChannelGridT {
  Dims4 dims;
  int channels = 0;
  std::vector<T> re, im;

  ChannelGridT() = default;
  ChannelGridT(Dims4 d, int c)
      : dims(d), channels(c), re(d.volume() * std::size_t(c)), im(re.size()) {}

  std::size_t idx(int k, int l, int m, int n, int c) const {
    return (((std::size_t(k) * dims.l + l) * dims.m + m) * std::size_t(dims.n) + n) *
               channels + c;
  }
};

template <typename T>
struct RealChannelGridT {
  Dims4 dims;
  int channels = 0;
  std::vector<T> v;

  RealChannelGridT() = default;
  RealChannelGridT(Dims4 d, int c) : dims(d), channels(c), v(d.volume() * std::size_t(c)) {}

  std::size_t idx(int k, int l, int m, int n, int c) const {
    return (((std::size_t(k) * dims.l + l) * dims.m + m) * std::size_t(dims.n) + n) *
               channels + c;
  }
};

// Complex conv kernel, taps-major: (((tap)*Cin + ci)*Cout + co).
template <typename T>
struct ComplexKernelT {
  KernelDims kd;
  int in_ch = 0, out_ch = 0;
  std::vector<T> re, im;

  ComplexKernelT() = default;
  ComplexKernelT(KernelDims d, int ci, int co)
      : kd(d), in_ch(ci), out_ch(co),
        re(std::size_t(d.volume()) * ci * co), im(re.size()) {}
};

template <typename T>
struct RealKernelT {
  KernelDims kd;
  int in_ch = 0, out_ch = 0;
  std::vector<T> w;

  RealKernelT() = default;
  RealKernelT(KernelDims d, int ci, int co)
      : kd(d), in_ch(ci), out_ch(co), w(std::size_t(d.volume()) * ci * co) {}
};

using ComplexChannelGrid = ChannelGridT<double>;
using RealChannelGrid = RealChannelGridT<double>;
using ComplexKernel4D = ComplexKernelT<double>;
using RealKernel4D = RealKernelT<double>;

// One amplitude-gated layer: out = logistic(G * |in|) .* (W * in).
struct GatedLayer {
  ComplexKernel4D conv;
  RealKernel4D gate;
};

// lift (4 -> hidden) -> inner gated layers (hidden -> hidden) -> 1x1x1x1
// complex head (hidden -> 1). No bias terms anywhere.
struct DipParams {
  int input_channels = 4;
  int hidden_channels = 16;
  KernelDims kernel{};
  GatedLayer lift;
  std::vector<GatedLayer> inner;
  ComplexKernel4D head;

  // zero-filled parameters with consistent shapes
  static DipParams make(int hidden = 16, KernelDims kd = {}, int inner_count = 2);

  void validate() const;  // shape chain + finiteness
  std::size_t parameter_count() const;
};

// Random init: complex kernels ~ N(0, 1/(2*taps*fan_in)) per part, gate and
// head kernels zero, so the initial net outputs 0 and dip_iterate == ap_step.
DipParams init_params(std::uint64_t seed, int hidden = 16, KernelDims kd = {},
                      int inner_count = 2);

// Canonical flattening (lift W re, W im, gate; each inner layer likewise;
// head re, im). Adam state and the tests index parameters through this order.
std::vector<double> params_to_vector(const DipParams& p);
void vector_to_params(const std::vector<double>& v, DipParams& p);

// 4D cross-correlation with zero padding (SAME size): for each output
// channel o, out[o] = sum_i W[o,i] (*) x[i] with the full complex product.
ComplexChannelGrid complex_conv4d(const ComplexChannelGrid& x, const ComplexKernel4D& k);
RealChannelGrid real_conv4d(const RealChannelGrid& x, const RealKernel4D& k);

ComplexChannelGrid gated_complex_layer(const ComplexChannelGrid& x, const GatedLayer& layer);

enum class DipPrecision { F32, F64 };

// Estimated residual for the stacked inputs [X, Y, Z, A] (A enters with zero
// imaginary part). Output has the same dims, single channel.
ComplexGrid4D dip_forward(const ComplexGrid4D& x, const ComplexGrid4D& y,
                          const ComplexGrid4D& z, const RealGrid4D& a,
                          const DipParams& params,
                          DipPrecision precision = DipPrecision::F64);

// One DIP iteration: y = P_A(x), z = P_C(y), out = z - net(x, y, z, a).
ComplexGrid4D dip_iterate(const ComplexGrid4D& x, const RealGrid4D& a, const Probe& probe,
                          const ScanGrid& scan, const DipParams& params,
                          const ProjectionConfig& cfg = {},
                          DipPrecision precision = DipPrecision::F64);

// sum over all bins of |target - predicted|^2
double dip_loss(const ComplexGrid4D& predicted, const ComplexGrid4D& target);

// One training sample: corrupted ptychograph X, its projections Y and Z, the
// clean amplitudes A = |X*|, and the residual target R = Z - X*.
struct TrainSample {
  ComplexGrid4D x, y, z;
  RealGrid4D a;
  ComplexGrid4D target;
  double noise_parameter = 0.0;
};

TrainSample make_train_sample(const ComplexGrid2D& object_canvas, const Probe& probe,
                              const ScanGrid& scan, const NoiseSpec& noise,
                              std::uint64_t seed, const ProjectionConfig& cfg = {});

using DipGrads = DipParams;  // same shapes, gradient values in the slots

struct BackwardResult {
  double loss = 0.0;
  DipGrads grads;
};

// Analytic reverse-mode gradients of dip_loss(dip_forward(sample), target)
// with respect to every parameter (complex kernels as independent re/im).
BackwardResult dip_backward(const TrainSample& sample, const DipParams& params,
                            DipPrecision precision = DipPrecision::F64);

struct AdamState {
  double lr = 4e-4;
  double beta1 = 0.9, beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  std::vector<double> m, v;  // sized on first update
};

void adam_update(DipParams& params, const DipGrads& grads, AdamState& state);

struct TrainConfig {
  int epochs = 300;
  double learning_rate = 4e-4;
  int batch_size = 16;
  NoiseSpec noise{};
  std::uint64_t seed = 0;
  int validation_count = 8;  // held out from the tail of the dataset
  DipPrecision precision = DipPrecision::F32;
  int hidden_channels = 16;
  KernelDims kernel{};
  int inner_layers = 2;
  ProjectionConfig projection{};
};

struct EpochLog {
  int epoch = 0;  // 0 = before any update (validation only)
  double train_loss = 0.0;
  double val_loss = 0.0;
  double seconds = 0.0;
};

struct TrainResult {
  DipParams params;
  std::vector<EpochLog> log;
};

// Denoising training: per sample per epoch, X* = pty_stft(object),
// X = corrupt(X*), A = |X*|, Y = P_A(X), Z = P_C(Y), target R = Z - X*;
// minimizes mean dip_loss over each batch with Adam. Deterministic in
// cfg.seed. Throws on divergence (non-finite loss).
TrainResult train(const std::vector<RealGrid2D>& images, const Geometry& geom,
                  const TrainConfig& cfg,
                  const std::function<void(const EpochLog&)>& progress = nullptr);

// Model container: magic "DIPM", u16 version, geometry header, parameter
// blocks as little-endian f64 in the canonical order, trailing CRC32.
void save_model(const std::string& path, const DipParams& params);
DipParams load_model(const std::string& path);

}  // namespace ptycho
