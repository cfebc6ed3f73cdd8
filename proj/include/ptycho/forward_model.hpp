#pragma once

#include "ptycho/grid.hpp"

namespace ptycho {

// Illumination window. Constructed real by make_gaussian_probe but stored
// complex; nothing downstream assumes realness.
struct Probe {
  int size = 0;
  double sigma = 0.0;
  std::vector<cplx> v;  // size x size, row-major

  cplx at(int i, int j) const { return v[std::size_t(i) * size + j]; }
};

// Square Gaussian probe, odd size, peak 1 at the center pixel:
// p(i,j) = exp(-((i-c)^2+(j-c)^2) / (2 sigma^2)), c = (size-1)/2.
Probe make_gaussian_probe(int size, double sigma);

// Regular scan lattice over a fixed object canvas, anchored at the top-left
// corner. Position (k,l) places the probe's top-left pixel at (k*shift,
// l*shift).
struct ScanGrid {
  int shift = 0;
  int rows = 0, cols = 0;          // K, L
  int object_h = 0, object_w = 0;  // canvas the lattice was built for
  int probe_size = 0;
  // trailing pixels no probe position reaches; 0 means full coverage
  int uncovered_rows = 0, uncovered_cols = 0;

  int row_offset(int k) const { return k * shift; }
  int col_offset(int l) const { return l * shift; }
};

// K = floor((H-p)/shift)+1 and likewise L. strict rejects any coverage gap.
ScanGrid make_scan_grid(int object_h, int object_w, const Probe& probe, int shift,
                        bool strict = false);

// Sum over covering positions of |probe|^2 at each canvas pixel.
RealGrid2D coverage_map(const Probe& probe, const ScanGrid& scan);

// Object -> ptychograph: per position, segment = probe .* patch, then a
// unitary 2D DFT of each segment. Output dims {K, L, p, p}.
ComplexGrid4D pty_stft(const ComplexGrid2D& o, const Probe& probe, const ScanGrid& scan);

// Least-squares pseudoinverse: inverse-DFT each segment, accumulate
// conj(probe)*segment onto the canvas, then divide by the coverage weight.
// Division is exact wherever weight > weight_floor; at effectively uncovered
// pixels the denominator is floored (weight + weight_floor) so the result
// stays finite. strict rejects any pixel with weight <= weight_floor.
ComplexGrid2D pty_istft(const ComplexGrid4D& x, const Probe& probe, const ScanGrid& scan,
                        double weight_floor = 1e-12, bool strict = false);

// abs(pty_stft(o)): the simulated measurement.
RealGrid4D record_amplitudes(const ComplexGrid2D& o, const Probe& probe,
                             const ScanGrid& scan);

// Bundles one experiment's sampling setup: the region of interest (the image),
// symmetric zero padding, and the minimal bottom/right extension that makes
// the scan lattice cover the whole canvas (pixels are never dropped).
struct Geometry {
  Probe probe;
  ScanGrid scan;
  int pad = 0;                   // symmetric padding, default one probe width
  int roi_h = 0, roi_w = 0;      // original image extents
  int extend_h = 0, extend_w = 0;  // extra bottom/right pixels
  int canvas_h = 0, canvas_w = 0;

  Dims4 ptychograph_dims() const {
    return {scan.rows, scan.cols, probe.size, probe.size};
  }
};

enum class CoveragePolicy { Extend, Strict };

// pad < 0 selects the default of one full probe width.
Geometry make_geometry(int roi_h, int roi_w, const Probe& probe, int shift, int pad = -1,
                       CoveragePolicy policy = CoveragePolicy::Extend);

// Real image -> zero-phase complex canvas (padded + extended).
ComplexGrid2D embed_image(const Geometry& geom, const RealGrid2D& img);
ComplexGrid2D embed_object(const Geometry& geom, const ComplexGrid2D& o);

// Canvas -> the roi_h x roi_w region of interest.
ComplexGrid2D crop_canvas(const Geometry& geom, const ComplexGrid2D& canvas);

}  // namespace ptycho
