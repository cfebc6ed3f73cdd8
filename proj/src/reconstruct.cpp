#include "ptycho/reconstruct.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace ptycho {

const char* method_label(Method m) {
  switch (m) {
    case Method::Ap: return "ap";
    case Method::Dm: return "dm";
    case Method::Dip: return "dip";
    case Method::DipThenDm: return "dip_dm";
  }
  throw std::invalid_argument("method_label: unknown method");
}

Method parse_method(const std::string& name) {
  if (name == "ap") return Method::Ap;
  if (name == "dm") return Method::Dm;
  if (name == "dip") return Method::Dip;
  if (name == "dip_dm") return Method::DipThenDm;
  throw std::invalid_argument("parse_method: unknown method '" + name +
                              "' (expected ap, dm, dip or dip_dm)");
}

GroundTruth ground_truth_from_image(const RealGrid2D& img) {
  GroundTruth t;
  t.object = ComplexGrid2D(img.h, img.w);
  double peak = 0.0;
  for (std::size_t i = 0; i < img.v.size(); ++i) {
    t.object.v[i] = cplx{img.v[i], 0.0};
    peak = std::max(peak, std::abs(img.v[i]));
  }
  t.psnr_peak = peak > 0.0 ? peak : 1.0;
  return t;
}

Trajectory run_reconstruction(const RealGrid4D& amplitudes, const Geometry& geom,
                              Method method, const RunConfig& cfg, std::uint64_t seed,
                              const DipParams* dip, const GroundTruth* truth) {
  if (cfg.iterations < 0) throw std::invalid_argument("run_reconstruction: iterations < 0");
  if (cfg.dip_switch < 0) throw std::invalid_argument("run_reconstruction: dip_switch < 0");
  if (!(amplitudes.dims == geom.ptychograph_dims()))
    throw std::invalid_argument("run_reconstruction: amplitude dims do not match geometry");
  const bool needs_net = method == Method::Dip || method == Method::DipThenDm;
  if (needs_net) {
    if (!dip)
      throw std::invalid_argument("run_reconstruction: method needs trained parameters");
    dip->validate();
  }
  if (cfg.stop_below_e0 > 0.0 && !truth)
    throw std::invalid_argument("run_reconstruction: early stop needs ground truth");
  if (truth && (truth->object.h != geom.roi_h || truth->object.w != geom.roi_w))
    throw std::invalid_argument("run_reconstruction: ground truth extents mismatch");

  Trajectory traj;
  traj.method = method;
  traj.label = method_label(method);
  traj.seed = seed;
  traj.records.reserve(std::size_t(cfg.iterations) + 1);

  ComplexGrid2D roi;
  auto record = [&](int iteration, const ComplexGrid4D& x) {
    IterationRecord rec;
    rec.iteration = iteration;
    rec.amp_mismatch = amplitude_mismatch(x, amplitudes);
    roi = crop_canvas(geom, pty_istft(x, geom.probe, geom.scan));
    if (truth) {
      const MetricReport rep = evaluate_object(truth->object, roi, truth->psnr_peak);
      rec.e0 = rep.e0;
      rec.psnr_db = rep.psnr_db;
    } else {
      rec.e0 = std::numeric_limits<double>::quiet_NaN();
      rec.psnr_db = std::numeric_limits<double>::quiet_NaN();
    }
    traj.records.push_back(rec);
    if (std::find(cfg.snapshot_iterations.begin(), cfg.snapshot_iterations.end(), iteration) !=
        cfg.snapshot_iterations.end())
      traj.snapshots.push_back(Snapshot{iteration, amplitude(roi)});
    return rec;
  };

  ComplexGrid4D x = random_phase_init(amplitudes, seed);
  IterationRecord rec = record(0, x);
  for (int t = 1; t <= cfg.iterations; ++t) {
    if (cfg.stop_below_e0 > 0.0 && rec.e0 <= cfg.stop_below_e0) break;
    const auto t0 = std::chrono::steady_clock::now();
    switch (method) {
      case Method::Ap:
        x = ap_step(x, amplitudes, geom.probe, geom.scan, cfg.projection);
        break;
      case Method::Dm:
        x = dm_step(x, amplitudes, geom.probe, geom.scan, cfg.projection, cfg.dm);
        break;
      case Method::Dip:
        x = dip_iterate(x, amplitudes, geom.probe, geom.scan, *dip, cfg.projection,
                        cfg.dip_precision);
        break;
      case Method::DipThenDm:
        if (t <= cfg.dip_switch)
          x = dip_iterate(x, amplitudes, geom.probe, geom.scan, *dip, cfg.projection,
                          cfg.dip_precision);
        else
          x = dm_step(x, amplitudes, geom.probe, geom.scan, cfg.projection, cfg.dm);
        break;
    }
    traj.step_seconds +=
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    rec = record(t, x);
  }
  traj.final_object = roi;
  return traj;
}

int iterations_to_threshold(const Trajectory& traj, double eps) {
  for (const IterationRecord& r : traj.records)
    if (std::isfinite(r.e0) && r.e0 <= eps) return r.iteration;
  return -1;
}

namespace {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_trajectory_csv(const std::string& path, const std::vector<Trajectory>& trajs) {
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os << "method,image_id,seed,iteration,E0,PSNR,amp_mismatch\n";
  for (const Trajectory& traj : trajs)
    for (const IterationRecord& r : traj.records)
      os << traj.label << ',' << traj.image_id << ',' << traj.seed << ',' << r.iteration
         << ',' << fmt_double(r.e0) << ',' << fmt_double(r.psnr_db) << ','
         << fmt_double(r.amp_mismatch) << '\n';
  if (!os) throw std::runtime_error(path + ": write failed");
}

}  // namespace ptycho
