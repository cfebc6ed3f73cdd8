#include "ptycho/bench.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <stdexcept>
#include <thread>
#include <tuple>

#include <json.hpp>

#include "ptycho/rng.hpp"

namespace ptycho {

using nlohmann::json;

void ExperimentConfig::validate() const {
  if (methods.empty()) throw std::invalid_argument("ExperimentConfig: methods must be nonempty");
  if (iterations < 0) throw std::invalid_argument("ExperimentConfig: iterations < 0");
  if (image_count < 1) throw std::invalid_argument("ExperimentConfig: image_count < 1");
  if (seed_count < 1) throw std::invalid_argument("ExperimentConfig: seed_count < 1");
  if (!(threshold > 0.0)) throw std::invalid_argument("ExperimentConfig: threshold must be > 0");
  if (probe_size < 1 || probe_size % 2 == 0)
    throw std::invalid_argument("ExperimentConfig: probe_size must be odd and positive");
  if (!(probe_sigma > 0.0)) throw std::invalid_argument("ExperimentConfig: probe_sigma <= 0");
  if (shift < 1) throw std::invalid_argument("ExperimentConfig: shift < 1");
  if (emit_image_count < 0) throw std::invalid_argument("ExperimentConfig: emit_image_count < 0");
  noise.validate();
  std::vector<std::string> labels;
  for (const MethodSpec& m : methods) {
    const bool needs_model = m.method == Method::Dip || m.method == Method::DipThenDm;
    if (needs_model && m.model_path.empty())
      throw std::invalid_argument("ExperimentConfig: dip methods need a model path");
    if (needs_model && !std::ifstream(m.model_path).good())
      throw std::invalid_argument("ExperimentConfig: model file not found: " + m.model_path);
    labels.push_back(m.label);
  }
  std::sort(labels.begin(), labels.end());
  if (std::adjacent_find(labels.begin(), labels.end()) != labels.end())
    throw std::invalid_argument("ExperimentConfig: duplicate method labels");
}

Geometry experiment_geometry(const ExperimentConfig& cfg) {
  const Probe probe = make_gaussian_probe(cfg.probe_size, cfg.probe_sigma);
  return make_geometry(cfg.dataset.side, cfg.dataset.side, probe, cfg.shift, cfg.pad);
}

// ---------------------------------------------------------------------------
// JSON config
// ---------------------------------------------------------------------------

namespace {

DipPrecision precision_from_string(const std::string& s) {
  if (s == "f32") return DipPrecision::F32;
  if (s == "f64") return DipPrecision::F64;
  throw std::invalid_argument("config: precision must be f32 or f64, got '" + s + "'");
}

const char* precision_to_string(DipPrecision p) {
  return p == DipPrecision::F32 ? "f32" : "f64";
}

NoiseKind noise_kind_from_string(const std::string& s) {
  if (s == "von_mises") return NoiseKind::VonMisesPhase;
  if (s == "complex_gaussian") return NoiseKind::ComplexGaussian;
  throw std::invalid_argument("config: noise kind must be von_mises or complex_gaussian");
}

const char* noise_kind_to_string(NoiseKind k) {
  return k == NoiseKind::VonMisesPhase ? "von_mises" : "complex_gaussian";
}

}  // namespace

ExperimentConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig cfg;
  cfg.output_dir = j.value("output_dir", cfg.output_dir);
  cfg.master_seed = j.value("master_seed", cfg.master_seed);
  cfg.iterations = j.value("iterations", cfg.iterations);
  cfg.threshold = j.value("threshold", cfg.threshold);
  cfg.image_count = j.value("image_count", cfg.image_count);
  cfg.seed_count = j.value("seeds", cfg.seed_count);
  cfg.probe_size = j.value("probe_size", cfg.probe_size);
  cfg.probe_sigma = j.value("probe_sigma", cfg.probe_sigma);
  cfg.shift = j.value("shift", cfg.shift);
  cfg.pad = j.value("pad", cfg.pad);
  cfg.emit_image_count = j.value("emit_image_count", cfg.emit_image_count);
  cfg.stop_below_e0 = j.value("stop_below_e0", cfg.stop_below_e0);
  if (j.contains("snapshot_iterations"))
    cfg.snapshot_iterations = j.at("snapshot_iterations").get<std::vector<int>>();
  if (j.contains("dataset")) {
    const json& d = j.at("dataset");
    cfg.dataset.kind = d.value("kind", cfg.dataset.kind);
    cfg.dataset.path = d.value("path", cfg.dataset.path);
    cfg.dataset.count = d.value("count", cfg.dataset.count);
    cfg.dataset.side = d.value("side", cfg.dataset.side);
    cfg.dataset.seed = d.value("seed", cfg.dataset.seed);
  }
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    if (n.contains("kind")) cfg.noise.kind = noise_kind_from_string(n.at("kind"));
    cfg.noise.snr_db_min = n.value("snr_db_min", cfg.noise.snr_db_min);
    cfg.noise.snr_db_max = n.value("snr_db_max", cfg.noise.snr_db_max);
    cfg.noise.kappa_min = n.value("kappa_min", cfg.noise.kappa_min);
    cfg.noise.kappa_max = n.value("kappa_max", cfg.noise.kappa_max);
    cfg.noise.mu = n.value("mu", cfg.noise.mu);
  }
  if (j.contains("training")) {
    const json& t = j.at("training");
    cfg.training.epochs = t.value("epochs", cfg.training.epochs);
    cfg.training.learning_rate = t.value("learning_rate", cfg.training.learning_rate);
    cfg.training.batch_size = t.value("batch_size", cfg.training.batch_size);
    cfg.training.validation_count = t.value("validation_count", cfg.training.validation_count);
    cfg.training.hidden_channels = t.value("hidden_channels", cfg.training.hidden_channels);
    cfg.training.inner_layers = t.value("inner_layers", cfg.training.inner_layers);
    if (t.contains("precision"))
      cfg.training.precision = precision_from_string(t.at("precision"));
  }
  if (j.contains("methods")) {
    cfg.methods.clear();
    for (const json& m : j.at("methods")) {
      MethodSpec spec;
      spec.method = parse_method(m.at("name").get<std::string>());
      spec.label = m.value("label", std::string(method_label(spec.method)));
      spec.beta = m.value("beta", spec.beta);
      spec.model_path = m.value("model", spec.model_path);
      spec.dip_switch = m.value("switch", spec.dip_switch);
      cfg.methods.push_back(std::move(spec));
    }
  }
  return cfg;
}

ExperimentConfig config_from_json_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(path + ": cannot open");
  std::string text((std::istreambuf_iterator<char>(is)), std::istreambuf_iterator<char>());
  try {
    return config_from_json(text);
  } catch (const json::parse_error& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
}

std::string config_to_json(const ExperimentConfig& cfg, const std::vector<int>& image_ids) {
  json j;
  j["output_dir"] = cfg.output_dir;
  j["master_seed"] = cfg.master_seed;
  j["iterations"] = cfg.iterations;
  j["threshold"] = cfg.threshold;
  j["image_count"] = cfg.image_count;
  j["seeds"] = cfg.seed_count;
  j["probe_size"] = cfg.probe_size;
  j["probe_sigma"] = cfg.probe_sigma;
  j["shift"] = cfg.shift;
  j["pad"] = cfg.pad;
  j["emit_image_count"] = cfg.emit_image_count;
  j["stop_below_e0"] = cfg.stop_below_e0;
  j["snapshot_iterations"] = cfg.snapshot_iterations;
  j["dataset"] = {{"kind", cfg.dataset.kind}, {"path", cfg.dataset.path},
                  {"count", cfg.dataset.count}, {"side", cfg.dataset.side},
                  {"seed", cfg.dataset.seed}};
  j["noise"] = {{"kind", noise_kind_to_string(cfg.noise.kind)},
                {"snr_db_min", cfg.noise.snr_db_min}, {"snr_db_max", cfg.noise.snr_db_max},
                {"kappa_min", cfg.noise.kappa_min}, {"kappa_max", cfg.noise.kappa_max},
                {"mu", cfg.noise.mu}};
  j["training"] = {{"epochs", cfg.training.epochs},
                   {"learning_rate", cfg.training.learning_rate},
                   {"batch_size", cfg.training.batch_size},
                   {"validation_count", cfg.training.validation_count},
                   {"hidden_channels", cfg.training.hidden_channels},
                   {"inner_layers", cfg.training.inner_layers},
                   {"precision", precision_to_string(cfg.training.precision)}};
  json methods = json::array();
  for (const MethodSpec& m : cfg.methods) {
    json mj;
    mj["name"] = method_label(m.method);
    mj["label"] = m.label;
    mj["beta"] = m.beta;
    if (!m.model_path.empty()) mj["model"] = m.model_path;
    if (m.method == Method::DipThenDm) mj["switch"] = m.dip_switch;
    methods.push_back(std::move(mj));
  }
  j["methods"] = std::move(methods);
  if (!image_ids.empty()) j["image_ids"] = image_ids;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------------------
// reports
// ---------------------------------------------------------------------------

namespace {

std::string fmt_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct Welford {
  // two-pass is overkill; plain sums are fine at these counts
  std::vector<double> values;
  void add(double v) { values.push_back(v); }
  double mean() const {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    double s = 0.0;
    for (double v : values) s += v;
    return s / double(values.size());
  }
  double sample_std() const {
    if (values.size() < 2) return 0.0;
    const double m = mean();
    double s = 0.0;
    for (double v : values) s += (v - m) * (v - m);
    return std::sqrt(s / double(values.size() - 1));
  }
};

}  // namespace

void write_curves_csv(const std::string& path, const std::vector<Trajectory>& runs) {
  // label order follows first appearance in runs; iterations ascend
  std::vector<std::string> labels;
  std::map<std::string, std::map<int, std::pair<Welford, Welford>>> acc;
  for (const Trajectory& t : runs) {
    if (acc.find(t.label) == acc.end()) labels.push_back(t.label);
    auto& per_iter = acc[t.label];
    for (const IterationRecord& r : t.records) {
      per_iter[r.iteration].first.add(r.e0);
      per_iter[r.iteration].second.add(r.psnr_db);
    }
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os << "label,iteration,count,e0_mean,e0_std,psnr_mean,psnr_std\n";
  for (const std::string& label : labels)
    for (const auto& [iter, w] : acc[label])
      os << label << ',' << iter << ',' << w.first.values.size() << ','
         << fmt_double(w.first.mean()) << ',' << fmt_double(w.first.sample_std()) << ','
         << fmt_double(w.second.mean()) << ',' << fmt_double(w.second.sample_std()) << '\n';
  if (!os) throw std::runtime_error(path + ": write failed");
}

void write_summary_csv(const std::string& path, const std::vector<Trajectory>& runs,
                       double threshold, int iterations) {
  std::vector<std::string> labels;
  std::map<std::string, std::tuple<Welford, Welford, int, int>> acc;  // iters, final e0, n, reached
  for (const Trajectory& t : runs) {
    if (acc.find(t.label) == acc.end()) labels.push_back(t.label);
    auto& [iters, final_e0, n, reached] = acc[t.label];
    const int hit = iterations_to_threshold(t, threshold);
    iters.add(hit >= 0 ? double(hit) : double(iterations + 1));  // censored
    if (!t.records.empty()) final_e0.add(t.records.back().e0);
    n += 1;
    reached += hit >= 0 ? 1 : 0;
  }
  std::ofstream os(path, std::ios::trunc);
  if (!os) throw std::runtime_error(path + ": cannot open for writing");
  os << "label,runs,reached,threshold,iterations_mean,iterations_std,"
        "final_e0_mean,final_e0_std\n";
  for (const std::string& label : labels) {
    const auto& [iters, final_e0, n, reached] = acc[label];
    os << label << ',' << n << ',' << reached << ',' << fmt_double(threshold) << ','
       << fmt_double(iters.mean()) << ',' << fmt_double(iters.sample_std()) << ','
       << fmt_double(final_e0.mean()) << ',' << fmt_double(final_e0.sample_std()) << '\n';
  }
  if (!os) throw std::runtime_error(path + ": write failed");
}

void emit_images(const Trajectory& traj, const std::vector<int>& iterations,
                 const std::string& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  for (const Snapshot& s : traj.snapshots) {
    if (std::find(iterations.begin(), iterations.end(), s.iteration) == iterations.end())
      continue;
    const std::string name =
        traj.label + "_" + std::to_string(traj.image_id) + "_" + std::to_string(s.iteration) +
        ".pgm";
    write_pgm((fs::path(dir) / name).string(), s.amplitude);
  }
}

// ---------------------------------------------------------------------------
// orchestration
// ---------------------------------------------------------------------------

BenchResult run_benchmark(const ExperimentConfig& cfg) {
  cfg.validate();
  namespace fs = std::filesystem;
  fs::create_directories(cfg.output_dir);

  const Geometry geom = experiment_geometry(cfg);
  const ImageSet data = load_dataset(cfg.dataset);
  if (data.images.size() < std::size_t(cfg.image_count))
    throw std::runtime_error("run_benchmark: dataset has " +
                             std::to_string(data.images.size()) + " images, need " +
                             std::to_string(cfg.image_count));

  // seeded batch selection without replacement, recorded in the config dump
  BenchResult result;
  {
    std::vector<int> ids(data.images.size());
    for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = int(i);
    Rng rng(mix_seed(cfg.master_seed, 0x62617463u));
    for (std::size_t i = 0; i < std::size_t(cfg.image_count); ++i)
      std::swap(ids[i], ids[i + rng.below(ids.size() - i)]);
    ids.resize(std::size_t(cfg.image_count));
    result.image_ids = std::move(ids);
  }

  // shared per-model cache so dip params load once
  std::map<std::string, DipParams> models;
  for (const MethodSpec& m : cfg.methods)
    if (!m.model_path.empty() && models.find(m.model_path) == models.end())
      models.emplace(m.model_path, load_model(m.model_path));

  struct Task {
    std::size_t method_index, image_index, seed_index;
  };
  std::vector<Task> tasks;
  for (std::size_t mi = 0; mi < cfg.methods.size(); ++mi)
    for (std::size_t ii = 0; ii < std::size_t(cfg.image_count); ++ii)
      for (std::size_t si = 0; si < std::size_t(cfg.seed_count); ++si)
        tasks.push_back(Task{mi, ii, si});

  // simulate once per image (shared across methods/seeds)
  std::vector<RealGrid4D> amplitudes(std::size_t(cfg.image_count));
  std::vector<GroundTruth> truths(std::size_t(cfg.image_count));
  for (std::size_t ii = 0; ii < std::size_t(cfg.image_count); ++ii) {
    const RealGrid2D& img = data.images[std::size_t(result.image_ids[ii])];
    amplitudes[ii] = record_amplitudes(embed_image(geom, img), geom.probe, geom.scan);
    truths[ii] = ground_truth_from_image(img);
  }

  std::vector<Trajectory> runs(tasks.size());
  std::vector<std::string> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size()) return;
      const Task& task = tasks[i];
      const MethodSpec& m = cfg.methods[task.method_index];
      RunConfig rc;
      rc.iterations = cfg.iterations;
      rc.dm.beta = m.beta;
      rc.dip_switch = m.dip_switch;
      rc.stop_below_e0 = cfg.stop_below_e0;
      rc.snapshot_iterations = cfg.snapshot_iterations;
      const DipParams* dip =
          m.model_path.empty() ? nullptr : &models.at(m.model_path);
      const int image_id = result.image_ids[task.image_index];
      const std::uint64_t seed =
          mix_seed(cfg.master_seed, 0x72756e73u, std::uint64_t(image_id),
                   std::uint64_t(task.seed_index));
      try {
        Trajectory t = run_reconstruction(amplitudes[task.image_index], geom, m.method, rc,
                                          seed, dip, &truths[task.image_index]);
        t.label = m.label;
        t.image_id = image_id;
        runs[i] = std::move(t);
      } catch (const std::exception& e) {
        errors[i] = m.label + "," + std::to_string(image_id) + "," +
                    std::to_string(task.seed_index) + ": " + e.what();
      }
    }
  };
  const unsigned hw = std::thread::hardware_concurrency();
  const std::size_t jobs = std::min<std::size_t>(tasks.size(), hw > 0 ? hw : 1);
  std::vector<std::thread> pool;
  for (std::size_t j = 1; j < jobs; ++j) pool.emplace_back(worker);
  worker();
  for (std::thread& th : pool) th.join();

  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (!errors[i].empty())
      result.failures.push_back(errors[i]);
    else
      result.runs.push_back(std::move(runs[i]));
  }

  // serialized report writing
  const fs::path out(cfg.output_dir);
  {
    std::ofstream os(out / "config.json", std::ios::trunc);
    os << config_to_json(cfg, result.image_ids);
  }
  write_trajectory_csv((out / "runs.csv").string(), result.runs);
  write_curves_csv((out / "curves.csv").string(), result.runs);
  write_summary_csv((out / "summary.csv").string(), result.runs, cfg.threshold,
                    cfg.iterations);
  {
    std::ofstream os(out / "failures.csv", std::ios::trunc);
    os << "label,image_id,seed_index,error\n";
    for (const std::string& f : result.failures) os << f << '\n';
  }
  {
    // wall clock lives outside the reproducible CSV set on purpose
    std::ofstream os(out / "timings.txt", std::ios::trunc);
    os << "label,image_id,seed,step_seconds\n";
    for (const Trajectory& t : result.runs)
      os << t.label << ',' << t.image_id << ',' << t.seed << ',' << fmt_double(t.step_seconds)
         << '\n';
  }
  if (cfg.emit_image_count > 0 && !cfg.snapshot_iterations.empty()) {
    const fs::path imgdir = out / "images";
    fs::create_directories(imgdir);
    for (std::size_t ii = 0;
         ii < std::min<std::size_t>(std::size_t(cfg.emit_image_count),
                                    std::size_t(cfg.image_count));
         ++ii) {
      const int image_id = result.image_ids[ii];
      write_pgm((imgdir / ("true_" + std::to_string(image_id) + ".pgm")).string(),
                data.images[std::size_t(image_id)]);
      for (const Trajectory& t : result.runs)
        if (t.image_id == image_id && t.seed == mix_seed(cfg.master_seed, 0x72756e73u,
                                                         std::uint64_t(image_id), 0))
          emit_images(t, cfg.snapshot_iterations, imgdir.string());
    }
  }
  return result;
}

std::vector<Trajectory> read_runs_csv(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error(path + ": cannot open");
  std::string line;
  if (!std::getline(is, line) || line != "method,image_id,seed,iteration,E0,PSNR,amp_mismatch")
    throw std::runtime_error(path + ": unexpected runs.csv header");
  std::vector<Trajectory> out;
  std::map<std::string, std::size_t> index;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::array<std::string, 7> field;
    std::size_t start = 0, fi = 0;
    for (std::size_t i = 0; i <= line.size(); ++i) {
      if (i == line.size() || line[i] == ',') {
        if (fi >= field.size())
          throw std::runtime_error(path + ": too many columns on line " +
                                   std::to_string(lineno));
        field[fi++] = line.substr(start, i - start);
        start = i + 1;
      }
    }
    if (fi != field.size())
      throw std::runtime_error(path + ": short row on line " + std::to_string(lineno));
    const std::string key = field[0] + "/" + field[1] + "/" + field[2];
    auto [it, fresh] = index.emplace(key, out.size());
    if (fresh) {
      Trajectory t;
      t.label = field[0];
      t.image_id = std::stoi(field[1]);
      t.seed = std::stoull(field[2]);
      out.push_back(std::move(t));
    }
    IterationRecord r;
    r.iteration = std::stoi(field[3]);
    r.e0 = std::strtod(field[4].c_str(), nullptr);
    r.psnr_db = std::strtod(field[5].c_str(), nullptr);
    r.amp_mismatch = std::strtod(field[6].c_str(), nullptr);
    out[it->second].records.push_back(r);
  }
  return out;
}

TrainResult run_training(const ExperimentConfig& cfg, const std::string& model_path) {
  const Geometry geom = experiment_geometry(cfg);
  const ImageSet data = load_dataset(cfg.dataset);
  TrainConfig tc;
  tc.epochs = cfg.training.epochs;
  tc.learning_rate = cfg.training.learning_rate;
  tc.batch_size = cfg.training.batch_size;
  tc.validation_count = cfg.training.validation_count;
  tc.hidden_channels = cfg.training.hidden_channels;
  tc.inner_layers = cfg.training.inner_layers;
  tc.precision = cfg.training.precision;
  tc.noise = cfg.noise;
  tc.seed = cfg.master_seed;
  TrainResult result = train(data.images, geom, tc, [](const EpochLog& log) {
    std::fprintf(stderr, "epoch %d train %.6g val %.6g (%.1fs)\n", log.epoch, log.train_loss,
                 log.val_loss, log.seconds);
  });
  save_model(model_path, result.params);
  return result;
}

}  // namespace ptycho
