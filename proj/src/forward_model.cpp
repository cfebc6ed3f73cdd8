#include "ptycho/forward_model.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "ptycho/fft.hpp"

namespace ptycho {

Probe make_gaussian_probe(int size, double sigma) {
  if (size <= 0 || size % 2 == 0)
    throw std::invalid_argument("make_gaussian_probe: size must be odd and positive, got " +
                                std::to_string(size));
  if (!(sigma > 0.0))
    throw std::invalid_argument("make_gaussian_probe: sigma must be positive");
  Probe p;
  p.size = size;
  p.sigma = sigma;
  p.v.resize(std::size_t(size) * size);
  const double c = (size - 1) / 2.0;
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int i = 0; i < size; ++i)
    for (int j = 0; j < size; ++j) {
      const double d2 = (i - c) * (i - c) + (j - c) * (j - c);
      p.v[std::size_t(i) * size + j] = cplx{std::exp(-d2 * inv), 0.0};
    }
  return p;
}

ScanGrid make_scan_grid(int object_h, int object_w, const Probe& probe, int shift,
                        bool strict) {
  if (probe.size <= 0) throw std::invalid_argument("make_scan_grid: empty probe");
  if (shift < 1) throw std::invalid_argument("make_scan_grid: shift must be >= 1");
  if (object_h < probe.size || object_w < probe.size)
    throw std::invalid_argument("make_scan_grid: object smaller than probe (" +
                                std::to_string(object_h) + "x" + std::to_string(object_w) +
                                " vs probe " + std::to_string(probe.size) + ")");
  ScanGrid s;
  s.shift = shift;
  s.object_h = object_h;
  s.object_w = object_w;
  s.probe_size = probe.size;
  s.rows = (object_h - probe.size) / shift + 1;
  s.cols = (object_w - probe.size) / shift + 1;
  s.uncovered_rows = object_h - ((s.rows - 1) * shift + probe.size);
  s.uncovered_cols = object_w - ((s.cols - 1) * shift + probe.size);
  if (strict && (s.uncovered_rows > 0 || s.uncovered_cols > 0))
    throw std::invalid_argument("make_scan_grid: scan leaves " +
                                std::to_string(s.uncovered_rows) + " row(s) and " +
                                std::to_string(s.uncovered_cols) +
                                " column(s) uncovered (strict)");
  return s;
}

namespace {

void check_scan_pair(const Probe& probe, const ScanGrid& scan, const char* where) {
  if (probe.size != scan.probe_size)
    throw std::invalid_argument(std::string(where) + ": probe size " +
                                std::to_string(probe.size) + " does not match scan (" +
                                std::to_string(scan.probe_size) + ")");
}

void check_object_dims(const ComplexGrid2D& o, const ScanGrid& scan, const char* where) {
  if (o.h != scan.object_h || o.w != scan.object_w)
    throw std::invalid_argument(std::string(where) + ": object " + std::to_string(o.h) +
                                "x" + std::to_string(o.w) + " does not match scan canvas " +
                                std::to_string(scan.object_h) + "x" +
                                std::to_string(scan.object_w));
}

void check_ptychograph_dims(const ComplexGrid4D& x, const ScanGrid& scan,
                            const char* where) {
  const Dims4 want{scan.rows, scan.cols, scan.probe_size, scan.probe_size};
  if (!(x.dims == want))
    throw std::invalid_argument(std::string(where) + ": ptychograph dims do not match scan");
}

}  // namespace

RealGrid2D coverage_map(const Probe& probe, const ScanGrid& scan) {
  check_scan_pair(probe, scan, "coverage_map");
  RealGrid2D w(scan.object_h, scan.object_w);
  const int p = probe.size;
  for (int k = 0; k < scan.rows; ++k)
    for (int l = 0; l < scan.cols; ++l) {
      const int r = scan.row_offset(k), c = scan.col_offset(l);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) w.at(r + i, c + j) += std::norm(probe.at(i, j));
    }
  return w;
}

ComplexGrid4D pty_stft(const ComplexGrid2D& o, const Probe& probe, const ScanGrid& scan) {
  check_scan_pair(probe, scan, "pty_stft");
  check_object_dims(o, scan, "pty_stft");
  require_finite(o, "pty_stft object");
  const int p = probe.size;
  ComplexGrid4D out({scan.rows, scan.cols, p, p});
  std::vector<cplx> seg(std::size_t(p) * p);
  for (int k = 0; k < scan.rows; ++k)
    for (int l = 0; l < scan.cols; ++l) {
      const int r = scan.row_offset(k), c = scan.col_offset(l);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
          seg[std::size_t(i) * p + j] = probe.at(i, j) * o.at(r + i, c + j);
      detail::dft2_unitary(seg.data(), &out.v[out.idx(k, l, 0, 0)], p, p, -1);
    }
  return out;
}

ComplexGrid2D pty_istft(const ComplexGrid4D& x, const Probe& probe, const ScanGrid& scan,
                        double weight_floor, bool strict) {
  check_scan_pair(probe, scan, "pty_istft");
  check_ptychograph_dims(x, scan, "pty_istft");
  require_finite(x, "pty_istft ptychograph");
  if (!(weight_floor > 0.0))
    throw std::invalid_argument("pty_istft: weight_floor must be positive");
  const int p = probe.size;
  ComplexGrid2D num(scan.object_h, scan.object_w);
  std::vector<cplx> seg(std::size_t(p) * p);
  for (int k = 0; k < scan.rows; ++k)
    for (int l = 0; l < scan.cols; ++l) {
      detail::dft2_unitary(&x.v[x.idx(k, l, 0, 0)], seg.data(), p, p, +1);
      const int r = scan.row_offset(k), c = scan.col_offset(l);
      for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j)
          num.at(r + i, c + j) += std::conj(probe.at(i, j)) * seg[std::size_t(i) * p + j];
    }
  const RealGrid2D w = coverage_map(probe, scan);
  for (std::size_t i = 0; i < num.v.size(); ++i) {
    if (w.v[i] > weight_floor) {
      num.v[i] /= w.v[i];
    } else if (strict) {
      throw std::invalid_argument("pty_istft: pixel with no probe coverage (strict)");
    } else {
      num.v[i] /= w.v[i] + weight_floor;
    }
  }
  return num;
}

RealGrid4D record_amplitudes(const ComplexGrid2D& o, const Probe& probe,
                             const ScanGrid& scan) {
  return abs_grid(pty_stft(o, probe, scan));
}

Geometry make_geometry(int roi_h, int roi_w, const Probe& probe, int shift, int pad,
                       CoveragePolicy policy) {
  if (roi_h <= 0 || roi_w <= 0)
    throw std::invalid_argument("make_geometry: image extents must be positive");
  if (pad < 0) pad = probe.size;
  Geometry g;
  g.probe = probe;
  g.pad = pad;
  g.roi_h = roi_h;
  g.roi_w = roi_w;
  const int base_h = roi_h + 2 * pad, base_w = roi_w + 2 * pad;
  if (base_h < probe.size || base_w < probe.size)
    throw std::invalid_argument("make_geometry: padded canvas smaller than probe");
  // smallest extension with (H - p) divisible by shift, i.e. full coverage
  g.extend_h = (base_h - probe.size) % shift;
  g.extend_w = (base_w - probe.size) % shift;
  if (g.extend_h > 0) g.extend_h = shift - g.extend_h;
  if (g.extend_w > 0) g.extend_w = shift - g.extend_w;
  if (policy == CoveragePolicy::Strict && (g.extend_h > 0 || g.extend_w > 0))
    throw std::invalid_argument("make_geometry: scan would leave trailing pixels uncovered "
                                "(strict coverage policy)");
  g.canvas_h = base_h + g.extend_h;
  g.canvas_w = base_w + g.extend_w;
  g.scan = make_scan_grid(g.canvas_h, g.canvas_w, probe, shift, /*strict=*/true);
  return g;
}

ComplexGrid2D embed_image(const Geometry& geom, const RealGrid2D& img) {
  if (img.h != geom.roi_h || img.w != geom.roi_w)
    throw std::invalid_argument("embed_image: image does not match geometry roi");
  ComplexGrid2D out(geom.canvas_h, geom.canvas_w);
  for (int i = 0; i < img.h; ++i)
    for (int j = 0; j < img.w; ++j)
      out.at(i + geom.pad, j + geom.pad) = cplx{img.at(i, j), 0.0};
  return out;
}

ComplexGrid2D embed_object(const Geometry& geom, const ComplexGrid2D& o) {
  if (o.h != geom.roi_h || o.w != geom.roi_w)
    throw std::invalid_argument("embed_object: object does not match geometry roi");
  ComplexGrid2D out(geom.canvas_h, geom.canvas_w);
  for (int i = 0; i < o.h; ++i)
    for (int j = 0; j < o.w; ++j) out.at(i + geom.pad, j + geom.pad) = o.at(i, j);
  return out;
}

ComplexGrid2D crop_canvas(const Geometry& geom, const ComplexGrid2D& canvas) {
  if (canvas.h != geom.canvas_h || canvas.w != geom.canvas_w)
    throw std::invalid_argument("crop_canvas: canvas does not match geometry");
  ComplexGrid2D out(geom.roi_h, geom.roi_w);
  for (int i = 0; i < geom.roi_h; ++i)
    for (int j = 0; j < geom.roi_w; ++j) out.at(i, j) = canvas.at(i + geom.pad, j + geom.pad);
  return out;
}

}  // namespace ptycho
