#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ptycho/dataset.hpp"
#include "ptycho/dipnet.hpp"
#include "ptycho/reconstruct.hpp"

namespace ptycho {

struct MethodSpec {
  Method method = Method::Ap;
  std::string label;       // CSV key; defaults to the method name
  double beta = 1.0;       // dm and the dm phase of dip_dm
  std::string model_path;  // required for dip and dip_dm
  int dip_switch = 5;      // dip_dm only
};

struct TrainSpec {
  int epochs = 60;
  double learning_rate = 4e-4;
  int batch_size = 16;
  int validation_count = 8;
  int hidden_channels = 16;
  int inner_layers = 2;
  DipPrecision precision = DipPrecision::F32;
};

// One experiment: geometry + dataset + methods + schedule. JSON keys mirror
// the field names; missing keys keep these defaults.
struct ExperimentConfig {
  std::string output_dir = "bench_out";
  std::uint64_t master_seed = 1;
  int iterations = 100;
  double threshold = 0.1;  // summary counts iterations to reach E0 <= threshold
  int image_count = 16;
  int seed_count = 5;
  int probe_size = 9;
  double probe_sigma = 1.5;
  int shift = 2;
  int pad = -1;  // -1 = one probe width
  DatasetSpec dataset{};
  std::vector<MethodSpec> methods;
  std::vector<int> snapshot_iterations;
  int emit_image_count = 3;     // leading batch images dumped as PGM (seed index 0)
  double stop_below_e0 = -1.0;  // > 0: stop runs early at this E0
  NoiseSpec noise{};            // training corruption
  TrainSpec training{};

  void validate() const;
};

ExperimentConfig config_from_json(const std::string& text);
ExperimentConfig config_from_json_file(const std::string& path);
// resolved config (optionally with the chosen batch) as pretty JSON
std::string config_to_json(const ExperimentConfig& cfg, const std::vector<int>& image_ids = {});

struct BenchResult {
  std::vector<int> image_ids;           // chosen batch, in order
  std::vector<Trajectory> runs;         // method-major, then image, then seed
  std::vector<std::string> failures;    // "label,image,seed: what()"
};

// Simulates, reconstructs and reports. Writes into cfg.output_dir:
//   config.json, runs.csv, curves.csv, summary.csv, failures.csv,
//   images/*.pgm, timings.txt (wall clock; the one non-reproducible file)
BenchResult run_benchmark(const ExperimentConfig& cfg);

// Snapshot amplitudes as {method}_{image}_{iter}.pgm under dir.
void emit_images(const Trajectory& traj, const std::vector<int>& iterations,
                 const std::string& dir);

// label,iteration,count,e0_mean,e0_std,psnr_mean,psnr_std
void write_curves_csv(const std::string& path, const std::vector<Trajectory>& runs);
// label,runs,reached,threshold,iterations_mean,iterations_std,final_e0_mean,final_e0_std
// unconverged runs enter the mean as (iterations + 1), a censored count
void write_summary_csv(const std::string& path, const std::vector<Trajectory>& runs,
                       double threshold, int iterations);

// parse a runs.csv back into record-only trajectories (for re-aggregation)
std::vector<Trajectory> read_runs_csv(const std::string& path);

// trains on the configured dataset and writes the model file; returns the log
TrainResult run_training(const ExperimentConfig& cfg, const std::string& model_path);

Geometry experiment_geometry(const ExperimentConfig& cfg);

}  // namespace ptycho
