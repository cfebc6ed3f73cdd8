#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptycho/dipnet.hpp"
#include "ptycho/forward_model.hpp"
#include "ptycho/grid.hpp"
#include "ptycho/metrics.hpp"
#include "ptycho/projections.hpp"

namespace ptycho {

enum class Method { Ap, Dm, Dip, DipThenDm };

const char* method_label(Method m);
Method parse_method(const std::string& name);  // accepts the labels

struct RunConfig {
  int iterations = 200;
  int dip_switch = 5;  // DipThenDm: net iterations before handing over to dm
  ProjectionConfig projection{};
  DmConfig dm{};
  DipPrecision dip_precision = DipPrecision::F32;
  double stop_below_e0 = -1.0;  // > 0: stop once E0 <= threshold (needs truth)
  std::vector<int> snapshot_iterations{};
};

struct GroundTruth {
  ComplexGrid2D object;  // region of interest, same extents the estimate is cropped to
  double psnr_peak = 1.0;
};

struct IterationRecord {
  int iteration = 0;  // 0 = initial point, before any update
  double e0 = 0.0;    // NaN when no ground truth was supplied
  double psnr_db = 0.0;
  double amp_mismatch = 0.0;
};

struct Snapshot {
  int iteration = 0;
  RealGrid2D amplitude;  // |object estimate| over the region of interest
};

struct Trajectory {
  Method method = Method::Ap;
  std::string label;
  int image_id = -1;  // assigned by the caller
  std::uint64_t seed = 0;
  std::vector<IterationRecord> records;  // iterations 0..T in order
  ComplexGrid2D final_object;
  std::vector<Snapshot> snapshots;
  double step_seconds = 0.0;  // total time inside updates, metrics excluded
};

// Iterate from the standard random-phase start and log metrics after every
// update. dip is required for Dip and DipThenDm. truth enables E0/PSNR
// records and early stopping; without it those fields are NaN.
Trajectory run_reconstruction(const RealGrid4D& amplitudes, const Geometry& geom,
                              Method method, const RunConfig& cfg, std::uint64_t seed,
                              const DipParams* dip = nullptr,
                              const GroundTruth* truth = nullptr);

// Zero-phase truth from a real image; metrics peak defaults to max pixel.
GroundTruth ground_truth_from_image(const RealGrid2D& img);

// First logged iteration with e0 <= eps, or -1 if never reached.
int iterations_to_threshold(const Trajectory& traj, double eps);

// One row per record: method,image_id,seed,iteration,e0,psnr_db,amp_mismatch
void write_trajectory_csv(const std::string& path, const std::vector<Trajectory>& trajs);

}  // namespace ptycho
