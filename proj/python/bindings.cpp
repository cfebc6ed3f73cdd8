#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <stdexcept>

#include "ptycho/bench.hpp"
#include "ptycho/dataset.hpp"
#include "ptycho/dipnet.hpp"
#include "ptycho/metrics.hpp"
#include "ptycho/reconstruct.hpp"

namespace py = pybind11;
using namespace ptycho;

namespace {

RealGrid2D real2d_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2d array");
  RealGrid2D g(int(a.shape(0)), int(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), g.v.begin());
  return g;
}

ComplexGrid2D cplx2d_from(
    const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("expected a 2d array");
  ComplexGrid2D g(int(a.shape(0)), int(a.shape(1)));
  std::copy(a.data(), a.data() + a.size(), g.v.begin());
  return g;
}

ComplexGrid4D cplx4d_from(
    const py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 4) throw std::invalid_argument("expected a 4d array");
  ComplexGrid4D g(Dims4{int(a.shape(0)), int(a.shape(1)), int(a.shape(2)), int(a.shape(3))});
  std::copy(a.data(), a.data() + a.size(), g.v.begin());
  return g;
}

RealGrid4D real4d_from(
    const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
  if (a.ndim() != 4) throw std::invalid_argument("expected a 4d array");
  RealGrid4D g(Dims4{int(a.shape(0)), int(a.shape(1)), int(a.shape(2)), int(a.shape(3))});
  std::copy(a.data(), a.data() + a.size(), g.v.begin());
  return g;
}

py::array_t<double> to_numpy(const RealGrid2D& g) {
  py::array_t<double> a({g.h, g.w});
  std::copy(g.v.begin(), g.v.end(), a.mutable_data());
  return a;
}

py::array_t<std::complex<double>> to_numpy(const ComplexGrid2D& g) {
  py::array_t<std::complex<double>> a({g.h, g.w});
  std::copy(g.v.begin(), g.v.end(), a.mutable_data());
  return a;
}

py::array_t<std::complex<double>> to_numpy(const ComplexGrid4D& g) {
  py::array_t<std::complex<double>> a({g.dims.k, g.dims.l, g.dims.m, g.dims.n});
  std::copy(g.v.begin(), g.v.end(), a.mutable_data());
  return a;
}

py::array_t<double> to_numpy(const RealGrid4D& g) {
  py::array_t<double> a({g.dims.k, g.dims.l, g.dims.m, g.dims.n});
  std::copy(g.v.begin(), g.v.end(), a.mutable_data());
  return a;
}

Geometry geometry_for(int roi_h, int roi_w, int probe_size, double probe_sigma, int shift,
                      int pad) {
  return make_geometry(roi_h, roi_w, make_gaussian_probe(probe_size, probe_sigma), shift, pad);
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "ptychographic phase retrieval: forward model, projections, metrics";

  m.def(
      "simulate",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> image, int probe_size,
         double probe_sigma, int shift, int pad) {
        const RealGrid2D img = real2d_from(image);
        const Geometry geom = geometry_for(img.h, img.w, probe_size, probe_sigma, shift, pad);
        return to_numpy(record_amplitudes(embed_image(geom, img), geom.probe, geom.scan));
      },
      py::arg("image"), py::arg("probe_size") = 9, py::arg("probe_sigma") = 1.5,
      py::arg("shift") = 2, py::arg("pad") = -1,
      "Object image -> amplitude ptychograph [K, L, M, N].");

  m.def(
      "stft",
      [](py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast> canvas,
         int probe_size, double probe_sigma, int shift) {
        const ComplexGrid2D o = cplx2d_from(canvas);
        const Probe probe = make_gaussian_probe(probe_size, probe_sigma);
        return to_numpy(pty_stft(o, probe, make_scan_grid(o.h, o.w, probe, shift, true)));
      },
      py::arg("canvas"), py::arg("probe_size") = 9, py::arg("probe_sigma") = 1.5,
      py::arg("shift") = 2, "Windowed segment spectra of a fully covered canvas.");

  m.def(
      "istft",
      [](py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast> x,
         int canvas_h, int canvas_w, int probe_size, double probe_sigma, int shift) {
        const Probe probe = make_gaussian_probe(probe_size, probe_sigma);
        return to_numpy(pty_istft(cplx4d_from(x), probe,
                                  make_scan_grid(canvas_h, canvas_w, probe, shift, true)));
      },
      py::arg("x"), py::arg("canvas_h"), py::arg("canvas_w"), py::arg("probe_size") = 9,
      py::arg("probe_sigma") = 1.5, py::arg("shift") = 2,
      "Least-squares inverse of stft back onto the canvas.");

  m.def(
      "reconstruct",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> amplitudes, int roi_h,
         int roi_w, const std::string& method, int iterations, std::uint64_t seed, double beta,
         int probe_size, double probe_sigma, int shift, int pad, const std::string& model,
         int dip_switch, py::object truth) {
        const Geometry geom = geometry_for(roi_h, roi_w, probe_size, probe_sigma, shift, pad);
        RunConfig rc;
        rc.iterations = iterations;
        rc.dm.beta = beta;
        rc.dip_switch = dip_switch;
        DipParams params;
        const Method meth = parse_method(method);
        const bool needs_net = meth == Method::Dip || meth == Method::DipThenDm;
        if (needs_net) params = load_model(model);
        GroundTruth gt;
        const bool have_truth = !truth.is_none();
        if (have_truth)
          gt = ground_truth_from_image(
              real2d_from(truth.cast<
                          py::array_t<double, py::array::c_style | py::array::forcecast>>()));
        const Trajectory traj =
            run_reconstruction(real4d_from(amplitudes), geom, meth, rc, seed,
                               needs_net ? &params : nullptr, have_truth ? &gt : nullptr);
        py::dict out;
        out["object"] = to_numpy(traj.final_object);
        py::list e0s, psnrs, mismatches;
        for (const IterationRecord& r : traj.records) {
          e0s.append(r.e0);
          psnrs.append(r.psnr_db);
          mismatches.append(r.amp_mismatch);
        }
        out["e0"] = e0s;
        out["psnr"] = psnrs;
        out["amp_mismatch"] = mismatches;
        return out;
      },
      py::arg("amplitudes"), py::arg("roi_h"), py::arg("roi_w"), py::arg("method") = "dm",
      py::arg("iterations") = 100, py::arg("seed") = 1, py::arg("beta") = 1.0,
      py::arg("probe_size") = 9, py::arg("probe_sigma") = 1.5, py::arg("shift") = 2,
      py::arg("pad") = -1, py::arg("model") = "", py::arg("dip_switch") = 5,
      py::arg("truth") = py::none(),
      "Iterative reconstruction; returns the object estimate and per-iteration metrics.");

  m.def(
      "e0",
      [](py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast> truth,
         py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast> est) {
        const E0Result r = e0(cplx2d_from(truth), cplx2d_from(est));
        return py::make_tuple(r.value, r.gamma);
      },
      py::arg("truth"), py::arg("estimate"),
      "Scale-invariant reconstruction error and the optimal complex scale.");

  m.def(
      "psnr",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> truth,
         py::array_t<double, py::array::c_style | py::array::forcecast> est, double peak) {
        return psnr(real2d_from(truth), real2d_from(est), peak);
      },
      py::arg("truth"), py::arg("estimate"), py::arg("peak") = 1.0);

  m.def(
      "synthetic_digits",
      [](int count, int side, std::uint64_t seed) {
        const ImageSet set = synthetic_digits(count, side, seed);
        py::array_t<double> a({count, side, side});
        double* p = a.mutable_data();
        for (const RealGrid2D& img : set.images) {
          std::copy(img.v.begin(), img.v.end(), p);
          p += img.v.size();
        }
        return a;
      },
      py::arg("count"), py::arg("side") = 28, py::arg("seed") = 1,
      "Deterministic stroke-figure corpus, values in [0, 1].");

  m.attr("__version__") = "0.1.0";
}
