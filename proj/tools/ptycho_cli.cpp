#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "ptycho/bench.hpp"
#include "ptycho/dataset.hpp"
#include "ptycho/dipnet.hpp"
#include "ptycho/grid_io.hpp"
#include "ptycho/reconstruct.hpp"

namespace {

using namespace ptycho;
namespace fs = std::filesystem;

RealGrid2D read_image(const std::string& path) {
  std::string ext = fs::path(path).extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return char(std::tolower(c)); });
  if (ext == ".pgm") return read_pgm(path);
  if (ext == ".png") return read_png(path);
  throw std::runtime_error(path + ": unsupported image format (expected .pgm or .png)");
}

struct GeometryFlags {
  int probe_size = 9;
  double probe_sigma = 1.5;
  int shift = 2;
  int pad = -1;

  void attach(CLI::App* cmd) {
    cmd->add_option("--probe-size", probe_size, "odd probe window side");
    cmd->add_option("--probe-sigma", probe_sigma, "gaussian probe sigma");
    cmd->add_option("--shift", shift, "scan shift in pixels");
    cmd->add_option("--pad", pad, "zero padding (-1 = one probe width)");
  }

  Geometry build(int roi_h, int roi_w) const {
    return make_geometry(roi_h, roi_w, make_gaussian_probe(probe_size, probe_sigma), shift,
                         pad);
  }
};

int cmd_simulate(const std::string& image_path, const GeometryFlags& gf,
                 const std::string& out_path) {
  const RealGrid2D img = read_image(image_path);
  const Geometry geom = gf.build(img.h, img.w);
  save_amplitudes(out_path, record_amplitudes(embed_image(geom, img), geom.probe, geom.scan));
  std::cout << "wrote " << out_path << " (" << geom.scan.rows << "x" << geom.scan.cols << "x"
            << geom.probe.size << "x" << geom.probe.size << " amplitudes)\n";
  return 0;
}

int cmd_train(const ExperimentConfig& cfg, const std::string& out_path) {
  cfg.noise.validate();
  const TrainResult result = run_training(cfg, out_path);
  const fs::path log_path = fs::path(out_path).replace_extension(".log.csv");
  std::ofstream os(log_path);
  os << "epoch,train_loss,val_loss\n";
  for (const EpochLog& log : result.log) {
    char buf[96];
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g\n", log.epoch, log.train_loss,
                  log.val_loss);
    os << buf;
  }
  std::cout << "wrote " << out_path << " and " << log_path.string() << '\n';
  return 0;
}

int cmd_reconstruct(const std::string& amp_path, const std::string& method_name,
                    const GeometryFlags& gf, int roi, const std::string& truth_path,
                    const std::string& model_path, int iterations, double beta,
                    int dip_switch, std::uint64_t seed, const std::string& out_dir) {
  const RealGrid4D amps = load_amplitudes(amp_path);
  GroundTruth truth;
  bool have_truth = false;
  int roi_h = roi, roi_w = roi;
  if (!truth_path.empty()) {
    const RealGrid2D img = read_image(truth_path);
    truth = ground_truth_from_image(img);
    have_truth = true;
    roi_h = img.h;
    roi_w = img.w;
  }
  if (roi_h <= 0)
    throw std::runtime_error("reconstruct: pass --roi or --truth to fix the object extents");
  const Geometry geom = gf.build(roi_h, roi_w);
  if (!(amps.dims == geom.ptychograph_dims()))
    throw std::runtime_error("reconstruct: amplitude dims do not match the geometry flags");

  const Method method = parse_method(method_name);
  RunConfig rc;
  rc.iterations = iterations;
  rc.dm.beta = beta;
  rc.dip_switch = dip_switch;
  DipParams params;
  const bool needs_net = method == Method::Dip || method == Method::DipThenDm;
  if (needs_net) {
    if (model_path.empty()) throw std::runtime_error("reconstruct: --model is required");
    params = load_model(model_path);
  }
  fs::create_directories(out_dir);
  Trajectory traj = run_reconstruction(amps, geom, method, rc, seed,
                                       needs_net ? &params : nullptr,
                                       have_truth ? &truth : nullptr);
  traj.image_id = 0;
  write_trajectory_csv((fs::path(out_dir) / "trajectory.csv").string(), {traj});
  write_pgm((fs::path(out_dir) / "object.pgm").string(), amplitude(traj.final_object));
  std::cout << "wrote " << out_dir << "/trajectory.csv and object.pgm";
  if (have_truth && !traj.records.empty()) {
    char buf[64];
    std::snprintf(buf, sizeof buf, " (final E0 %.4g)", traj.records.back().e0);
    std::cout << buf;
  }
  std::cout << '\n';
  return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir,
              std::uint64_t master_seed, int iterations, bool out_set, bool seed_set,
              bool iter_set) {
  ExperimentConfig cfg;
  if (!config_path.empty()) {
    cfg = config_from_json_file(config_path);
  } else {
    cfg.methods = {MethodSpec{Method::Ap, "ap", 1.0, "", 5},
                   MethodSpec{Method::Dm, "dm", 1.0, "", 5}};
  }
  if (out_set) cfg.output_dir = out_dir;
  if (seed_set) cfg.master_seed = master_seed;
  if (iter_set) cfg.iterations = iterations;
  const BenchResult result = run_benchmark(cfg);
  std::cout << "wrote " << cfg.output_dir << " (" << result.runs.size() << " runs, "
            << result.failures.size() << " failures)\n";
  return result.failures.empty() ? 0 : 2;
}

int cmd_report(const std::string& runs_path, const std::string& out_dir, double threshold,
               int iterations) {
  const std::vector<Trajectory> runs = read_runs_csv(runs_path);
  if (runs.empty()) throw std::runtime_error(runs_path + ": no runs");
  int max_iter = 0;
  for (const Trajectory& t : runs)
    for (const IterationRecord& r : t.records) max_iter = std::max(max_iter, r.iteration);
  if (iterations < 0) iterations = max_iter;
  fs::create_directories(out_dir);
  write_curves_csv((fs::path(out_dir) / "curves.csv").string(), runs);
  write_summary_csv((fs::path(out_dir) / "summary.csv").string(), runs, threshold, iterations);
  std::cout << "wrote " << out_dir << "/curves.csv and summary.csv (" << runs.size()
            << " runs)\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"ptychographic phase retrieval: iterative projections + trainable refiner"};
  app.require_subcommand(1);

  // simulate
  auto* sim = app.add_subcommand("simulate", "object image -> amplitude ptychograph file");
  std::string sim_image, sim_out = "amplitudes.ptg";
  GeometryFlags sim_geom;
  sim->add_option("--image", sim_image, "input object image (.pgm/.png)")->required();
  sim->add_option("--out", sim_out, "output amplitude file");
  sim_geom.attach(sim);

  // train
  auto* tr = app.add_subcommand("train", "dataset + config -> model file");
  std::string tr_config, tr_out = "model.dipm";
  std::uint64_t tr_seed = 0;
  int tr_epochs = 0, tr_count = 0, tr_batch = 0;
  std::string tr_kind, tr_path;
  tr->add_option("--config", tr_config, "experiment JSON");
  tr->add_option("--out", tr_out, "output model file");
  auto* tr_seed_opt = tr->add_option("--seed", tr_seed, "master seed");
  auto* tr_epochs_opt = tr->add_option("--epochs", tr_epochs, "training epochs");
  auto* tr_kind_opt =
      tr->add_option("--dataset-kind", tr_kind, "auto | synthetic | idx | dir");
  auto* tr_path_opt = tr->add_option("--dataset-path", tr_path, "idx file or image directory");
  auto* tr_count_opt = tr->add_option("--dataset-count", tr_count, "images to use");
  auto* tr_batch_opt = tr->add_option("--batch", tr_batch, "batch size");

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct", "amplitudes + method -> object + trajectory");
  std::string rec_amps, rec_method = "dm", rec_truth, rec_model, rec_out = "recon_out";
  GeometryFlags rec_geom;
  int rec_roi = 0, rec_iters = 100, rec_switch = 5;
  double rec_beta = 1.0;
  std::uint64_t rec_seed = 1;
  rec->add_option("--amplitudes", rec_amps, "amplitude ptychograph file")->required();
  rec->add_option("--method", rec_method, "ap | dm | dip | dip_dm");
  rec->add_option("--roi", rec_roi, "object side (not needed with --truth)");
  rec->add_option("--truth", rec_truth, "ground-truth image for metrics");
  rec->add_option("--model", rec_model, "trained model (dip methods)");
  rec->add_option("--iterations", rec_iters, "update count");
  rec->add_option("--beta", rec_beta, "difference-map beta");
  rec->add_option("--switch", rec_switch, "dip_dm: net iterations before dm");
  rec->add_option("--seed", rec_seed, "phase init seed");
  rec->add_option("--out-dir", rec_out, "output directory");
  rec_geom.attach(rec);

  // bench
  auto* be = app.add_subcommand("bench", "full experiment from a JSON config");
  std::string be_config, be_out = "bench_out";
  std::uint64_t be_seed = 1;
  int be_iters = 100;
  be->add_option("--config", be_config, "experiment JSON");
  auto* be_out_opt = be->add_option("--output-dir", be_out, "output directory");
  auto* be_seed_opt = be->add_option("--master-seed", be_seed, "master seed");
  auto* be_iter_opt = be->add_option("--iterations", be_iters, "update count");

  // report
  auto* rep = app.add_subcommand("report", "re-aggregate curves/summary from a runs.csv");
  std::string rep_runs, rep_out = "report_out";
  double rep_threshold = 0.1;
  int rep_iters = -1;
  rep->add_option("--runs", rep_runs, "runs.csv from a bench run")->required();
  rep->add_option("--out-dir", rep_out, "output directory");
  rep->add_option("--threshold", rep_threshold, "E0 threshold for the summary");
  rep->add_option("--iterations", rep_iters, "censoring horizon (-1 = max found)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) return cmd_simulate(sim_image, sim_geom, sim_out);
    if (tr->parsed()) {
      ExperimentConfig cfg =
          tr_config.empty() ? ExperimentConfig{} : config_from_json_file(tr_config);
      if (tr_seed_opt->count()) cfg.master_seed = tr_seed;
      if (tr_epochs_opt->count()) cfg.training.epochs = tr_epochs;
      if (tr_kind_opt->count()) cfg.dataset.kind = tr_kind;
      if (tr_path_opt->count()) cfg.dataset.path = tr_path;
      if (tr_count_opt->count()) cfg.dataset.count = tr_count;
      if (tr_batch_opt->count()) cfg.training.batch_size = tr_batch;
      return cmd_train(cfg, tr_out);
    }
    if (rec->parsed())
      return cmd_reconstruct(rec_amps, rec_method, rec_geom, rec_roi, rec_truth, rec_model,
                             rec_iters, rec_beta, rec_switch, rec_seed, rec_out);
    if (be->parsed())
      return cmd_bench(be_config, be_out, be_seed, be_iters, be_out_opt->count() > 0,
                       be_seed_opt->count() > 0, be_iter_opt->count() > 0);
    if (rep->parsed()) return cmd_report(rep_runs, rep_out, rep_threshold, rep_iters);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
