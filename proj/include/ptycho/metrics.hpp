#pragma once

#include "ptycho/grid.hpp"

namespace ptycho {

inline constexpr double kPsnrCapDb = 300.0;

struct E0Result {
  double value = 0.0;
  cplx gamma{};            // fitted global complex scale applied to the estimate
  bool degenerate = false;  // estimate was identically zero; value forced to 1
};

struct MetricReport {
  double e0 = 0.0;
  double psnr_db = 0.0;
  cplx gamma{};
  bool degenerate = false;
};

// Scale/phase-invariant normalized RMSE:
//   gamma = sum(true * conj(est)) / sum(|est|^2)
//   E0 = sqrt(sum |true - gamma*est|^2 / sum |true|^2)
E0Result e0(const ComplexGrid2D& true_obj, const ComplexGrid2D& est_obj);

// 10*log10(peak^2 / MSE), capped at kPsnrCapDb when MSE == 0.
double psnr(const RealGrid2D& true_amp, const RealGrid2D& est_amp, double peak);

// Removes a symmetric zero-padding border; inverse of pad_object.
ComplexGrid2D crop_to_roi(const ComplexGrid2D& obj, int pad);

RealGrid2D amplitude(const ComplexGrid2D& g);

// E0 and PSNR of an object estimate against the truth (both already cropped
// to the region of interest); PSNR compares amplitudes with the given peak.
MetricReport evaluate_object(const ComplexGrid2D& true_obj, const ComplexGrid2D& est_obj,
                             double peak);

}  // namespace ptycho
