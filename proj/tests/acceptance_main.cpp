// Acceptance gate: every top-level correctness and reproduction criterion runs
// end to end, printing one PASS/FAIL line per criterion with the measured
// values next to their bounds. The process exits nonzero if any line fails.
//
// The slow stages (training the refiner, the iteration-count benchmarks) run
// on the same synthetic digit corpus the benchmark harness uses, with the
// training images drawn from a different generator seed than the evaluation
// images so the benchmark set is held out.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "ptycho/bench.hpp"
#include "ptycho/dataset.hpp"
#include "ptycho/dipnet.hpp"
#include "ptycho/forward_model.hpp"
#include "ptycho/grid.hpp"
#include "ptycho/metrics.hpp"
#include "ptycho/noise.hpp"
#include "ptycho/projections.hpp"
#include "ptycho/reconstruct.hpp"
#include "ptycho/rng.hpp"

namespace fs = std::filesystem;
using namespace ptycho;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

int g_failures = 0;

// Exceptions in a stage become an honest FAIL line instead of killing the gate.
Outcome guarded(const std::function<Outcome()>& stage) {
  try {
    return stage();
  } catch (const std::exception& e) {
    return {false, std::string("exception: ") + e.what()};
  }
}

void report(int number, const char* name, const Outcome& out) {
  std::printf("%s %2d %s: %s\n", out.ok ? "PASS" : "FAIL", number, name,
              out.detail.c_str());
  std::fflush(stdout);
  if (!out.ok) ++g_failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

void status(const std::string& line) {
  std::fprintf(stderr, "[acceptance] %s\n", line.c_str());
  std::fflush(stderr);
}

Geometry benchmark_geometry() {
  return make_geometry(28, 28, make_gaussian_probe(9, 1.5), 2);
}

// --- 1: projection properties on the 28x28 probe-9 geometry ---------------

Outcome run_projection_properties() {
  const Geometry g = benchmark_geometry();
  Rng rng(mix_seed(0xacce97, 1));
  const double delta = ProjectionConfig{}.delta;
  double worst_idem = 0.0, worst_pa = 0.0, worst_round = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const ComplexGrid2D c = oracle::random_object(g.canvas_h, g.canvas_w, rng, true);
    const ComplexGrid4D spectrum = pty_stft(c, g.probe, g.scan);
    worst_round = std::max(worst_round,
                           oracle::rel_diff(pty_istft(spectrum, g.probe, g.scan), c));

    const ComplexGrid4D x = oracle::random_grid4(g.ptychograph_dims(), rng);
    const ComplexGrid4D z = proj_consistency(x, g.probe, g.scan);
    worst_idem =
        std::max(worst_idem, oracle::rel_diff(proj_consistency(z, g.probe, g.scan), z));

    const RealGrid4D a = record_amplitudes(c, g.probe, g.scan);
    const ComplexGrid4D y = proj_amplitude(x, a);
    for (std::size_t i = 0; i < y.v.size(); ++i) {
      const double r = std::abs(x.v[i]);
      worst_pa = std::max(worst_pa,
                          std::fabs(std::abs(y.v[i]) - a.v[i] * r / (r + delta)));
    }
  }
  Outcome out;
  out.ok = worst_idem <= 1e-10 && worst_pa <= 1e-12 && worst_round <= 1e-10;
  out.detail = "consistency idempotence " + fmt(worst_idem) +
               " (<=1e-10), amplitude identity " + fmt(worst_pa) +
               " (<=1e-12), transform round trip " + fmt(worst_round) +
               " (<=1e-10), 20 objects";
  return out;
}

// --- 2: constraint-satisfying ptychographs are fixed points ---------------

Outcome run_fixed_points() {
  const Geometry g = benchmark_geometry();
  Rng rng(mix_seed(0xacce97, 2));
  double worst = 0.0;
  for (int rep = 0; rep < 3; ++rep) {
    const ComplexGrid2D c = oracle::random_object(g.canvas_h, g.canvas_w, rng, true);
    const ComplexGrid4D x = pty_stft(c, g.probe, g.scan);
    const RealGrid4D a = record_amplitudes(c, g.probe, g.scan);
    worst = std::max(worst, oracle::rel_diff(ap_step(x, a, g.probe, g.scan), x));
    for (double beta : {0.5, 1.0}) {
      DmConfig dm;
      dm.beta = beta;
      worst = std::max(worst, oracle::rel_diff(dm_step(x, a, g.probe, g.scan, {}, dm), x));
    }
  }
  Outcome out;
  out.ok = worst <= 1e-9;
  out.detail =
      "max drift " + fmt(worst) + " (<=1e-9) under ap and dm(beta 0.5, 1.0), 3 objects";
  return out;
}

// --- 3: alternating projections never increase the amplitude mismatch -----

Outcome run_ap_monotonicity() {
  const Geometry g = make_geometry(12, 12, make_gaussian_probe(5, 1.2), 2);
  Rng rng(mix_seed(0xacce97, 3));
  const ComplexGrid2D obj = oracle::random_object(12, 12, rng);
  const RealGrid4D a = record_amplitudes(embed_object(g, obj), g.probe, g.scan);
  // The random-phase start matches the amplitudes exactly but is not yet
  // consistent; the nonincreasing property holds from the first consistent
  // iterate onward, so that is where the comparison starts.
  double worst_increase = -1e300;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    ComplexGrid4D x = ap_step(random_phase_init(a, seed), a, g.probe, g.scan);
    double prev = amplitude_mismatch(x, a);
    for (int t = 0; t < 50; ++t) {
      x = ap_step(x, a, g.probe, g.scan);
      const double m = amplitude_mismatch(x, a);
      worst_increase = std::max(worst_increase, m - prev);
      prev = m;
    }
  }
  Outcome out;
  out.ok = worst_increase <= 1e-9;
  out.detail = "max per-step mismatch increase " + fmt(worst_increase) +
               " (<=1e-9), 10 starts x 50 iterations, 12x12 object";
  return out;
}

// --- 4: fast paths match brute-force references ----------------------------

double max_abs_diff_channels(const ComplexChannelGrid& a, const ComplexChannelGrid& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.re.size(); ++i) {
    m = std::max(m, std::fabs(a.re[i] - b.re[i]));
    m = std::max(m, std::fabs(a.im[i] - b.im[i]));
  }
  return m;
}

Outcome run_oracle_equivalence() {
  Rng rng(mix_seed(0xacce97, 4));
  const int odd[3] = {1, 3, 5};
  double worst_conv = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const Dims4 d{int(2 + rng.below(3)), int(2 + rng.below(3)), int(2 + rng.below(3)),
                  int(2 + rng.below(3))};
    const int ci = int(1 + rng.below(3)), co = int(1 + rng.below(3));
    KernelDims kd{odd[rng.below(3)], odd[rng.below(3)], odd[rng.below(2)],
                  odd[rng.below(2)]};
    ComplexChannelGrid x(d, ci);
    for (auto& v : x.re) v = rng.normal();
    for (auto& v : x.im) v = rng.normal();
    ComplexKernel4D k(kd, ci, co);
    for (auto& v : k.re) v = rng.normal();
    for (auto& v : k.im) v = rng.normal();
    worst_conv = std::max(
        worst_conv, max_abs_diff_channels(complex_conv4d(x, k),
                                          oracle::complex_conv4d_naive(x, k)));
  }

  double worst_proj = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const int roi = int(6 + rng.below(5));
    const int psize = rng.below(2) ? 5 : 3;
    const Geometry g =
        make_geometry(roi, roi, make_gaussian_probe(psize, 1.0 + rng.uniform()),
                      int(1 + rng.below(2)));
    const ComplexGrid4D x = oracle::random_grid4(g.ptychograph_dims(), rng);
    const ComplexGrid4D mine = proj_consistency(x, g.probe, g.scan);
    const ComplexGrid4D ref = oracle::pty_stft_naive(
        oracle::pty_istft_naive(x, g.probe, g.scan), g.probe, g.scan);
    worst_proj = std::max(worst_proj, oracle::max_abs_diff(mine, ref));
  }

  Outcome out;
  out.ok = worst_conv <= 1e-12 && worst_proj <= 1e-12;
  out.detail = "conv vs brute force " + fmt(worst_conv) +
               ", consistency vs brute force " + fmt(worst_proj) +
               " (both <=1e-12), 20 instances each";
  return out;
}

// --- 5: analytic gradients vs central finite differences -------------------

Outcome run_gradient_check() {
  const Probe p3 = make_gaussian_probe(3, 1.0);
  const Geometry g = make_geometry(4, 4, p3, 2, 2);
  const KernelDims kd{3, 3, 1, 1};
  double worst = 0.0;
  for (int net = 0; net < 5; ++net) {
    Rng rng(mix_seed(0xacce97, 5, net));
    ComplexGrid2D canvas(g.canvas_h, g.canvas_w);
    for (auto& v : canvas.v) v = {rng.normal(), rng.normal()};
    const TrainSample s =
        make_train_sample(canvas, g.probe, g.scan, NoiseSpec{}, mix_seed(7, net));

    DipParams p = init_params(mix_seed(9, net), 3, kd, 1);
    std::vector<double> v = params_to_vector(p);
    for (auto& w : v) w = 0.4 * rng.normal();
    vector_to_params(v, p);

    const BackwardResult br = dip_backward(s, p, DipPrecision::F64);
    const std::vector<double> ga = params_to_vector(br.grads);

    const double h = 1e-5;
    double gscale = 1.0, max_err = 0.0;
    std::vector<double> gfd(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      const double keep = v[i];
      auto loss_at = [&](double w) {
        v[i] = w;
        vector_to_params(v, p);
        return dip_loss(dip_forward(s.x, s.y, s.z, s.a, p), s.target);
      };
      gfd[i] = (loss_at(keep + h) - loss_at(keep - h)) / (2.0 * h);
      v[i] = keep;
      gscale = std::max(gscale, std::fabs(gfd[i]));
    }
    vector_to_params(v, p);
    for (std::size_t i = 0; i < v.size(); ++i)
      max_err = std::max(max_err, std::fabs(ga[i] - gfd[i]));
    worst = std::max(worst, max_err / gscale);
  }
  Outcome out;
  out.ok = worst <= 1e-4;
  out.detail = "max relative gradient error " + fmt(worst) +
               " (<=1e-4), 5 randomized networks, all parameters";
  return out;
}

// --- 6: noise samplers match their analytic targets ------------------------

Outcome run_sampler_fidelity() {
  double worst_vm = 0.0;
  for (double kappa : {0.5, 1.0, 3.0}) {
    const std::size_t n = 1'000'000;
    const std::vector<double> th =
        sample_von_mises(kappa, 0.0, n, mix_seed(0xacce97, 6, std::uint64_t(kappa * 2)));
    double cx = 0.0, sx = 0.0;
    for (double t : th) {
      cx += std::cos(t);
      sx += std::sin(t);
    }
    const double emp = std::hypot(cx, sx) / double(n);
    const double ref = oracle::von_mises_resultant_quadrature(kappa);
    worst_vm = std::max(worst_vm, std::fabs(emp - ref) / ref);
  }

  Rng rng(mix_seed(0xacce97, 6, 99));
  const ComplexGrid4D x = oracle::random_grid4({8, 8, 128, 128}, rng);
  double sig = 0.0;
  for (const auto& v : x.v) sig += std::norm(v);
  double worst_db = 0.0;
  for (double target : {-24.0, -6.0, 0.0, 6.0}) {
    const ComplexGrid4D y =
        add_complex_gaussian(x, target, mix_seed(0xacce97, 6, std::uint64_t(target + 40)));
    double noise = 0.0;
    for (std::size_t i = 0; i < x.v.size(); ++i) noise += std::norm(y.v[i] - x.v[i]);
    const double emp = 10.0 * std::log10(sig / noise);
    worst_db = std::max(worst_db, std::fabs(emp - target));
  }

  Outcome out;
  out.ok = worst_vm <= 0.01 && worst_db <= 0.1;
  out.detail = "von-Mises resultant error " + fmt(worst_vm) +
               " (<=0.01 of quadrature, kappa 0.5/1/3, n=1e6), gaussian SNR error " +
               fmt(worst_db) + " dB (<=0.1, targets -24/-6/0/6)";
  return out;
}

// --- 7/8/9: benchmark reproduction with the trained refiner ----------------

struct BenchStats {
  std::map<std::string, double> censored_mean;  // label -> mean iterations to 0.1
  int handoff_wins = 0, handoff_total = 0;
};

double censored_mean(const std::vector<Trajectory>& runs, const std::string& label,
                     double eps, int horizon) {
  double sum = 0.0;
  int n = 0;
  for (const Trajectory& t : runs) {
    if (t.label != label) continue;
    const int it = iterations_to_threshold(t, eps);
    sum += it < 0 ? horizon + 1 : it;
    ++n;
  }
  return sum / std::max(1, n);
}

std::string train_refiner(const fs::path& model_path) {
  // Reduced schedule sized for one CPU core: 48 training digits plus 8
  // validation digits, 36 epochs, batch 2, the pinned 4e-4 learning rate.
  // The corruption concentration range is widened to [0.01, 20] so the mix
  // includes nearly clean samples; those carry the gradient signal that
  // teaches the net to predict a near-zero residual close to the fixed
  // point, which is what lets the iteration descend below the benchmark
  // threshold instead of stalling on its own prediction error.
  const ImageSet corpus = synthetic_digits(56, 28, 501);
  const Geometry g = benchmark_geometry();
  TrainConfig tc;
  tc.epochs = 36;
  tc.batch_size = 2;
  tc.validation_count = 8;
  tc.seed = 11;
  tc.noise.kappa_min = 0.01;
  tc.noise.kappa_max = 20.0;
  double first_val = 0.0, last_val = 0.0;
  const TrainResult res =
      train(corpus.images, g, tc, [&](const EpochLog& log) {
        if (log.epoch == 0) first_val = log.val_loss;
        last_val = log.val_loss;
        status("train epoch " + std::to_string(log.epoch) + "/36 val " +
               fmt(log.val_loss) + " (" + fmt(log.seconds) + "s)");
      });
  save_model(model_path.string(), res.params);
  return "36 epochs, lr 4e-4, batch 2, 48 train + 8 val digits, vm kappa [0.01, 20], "
         "val loss " + fmt(first_val) + " -> " + fmt(last_val);
}

DatasetSpec heldout_digits() {
  DatasetSpec d;
  d.kind = "synthetic";
  d.count = 16;
  d.side = 28;
  d.seed = 1;  // training draws from seed 501, so this batch is held out
  return d;
}

Outcome run_a(const fs::path& out_dir, const std::string& model_path,
              BenchStats& stats) {
  ExperimentConfig cfg;
  cfg.output_dir = (out_dir / "ordering").string();
  cfg.master_seed = 1;
  cfg.iterations = 150;
  cfg.threshold = 0.1;
  cfg.image_count = 16;
  cfg.seed_count = 5;
  cfg.dataset = heldout_digits();
  cfg.stop_below_e0 = 0.1;
  cfg.methods.push_back({Method::Ap, "ap", 1.0, "", 5});
  cfg.methods.push_back({Method::Dm, "dm", 1.0, "", 5});
  cfg.methods.push_back({Method::Dip, "dip_vm", 1.0, model_path, 5});
  const BenchResult r = run_benchmark(cfg);
  Outcome out;
  if (!r.failures.empty()) {
    out.detail = "benchmark failures: " + r.failures.front();
    return out;
  }
  for (const char* label : {"ap", "dm", "dip_vm"})
    stats.censored_mean[label] = censored_mean(r.runs, label, 0.1, cfg.iterations);
  out.ok = true;
  return out;
}

Outcome run_b(const fs::path& out_dir, const std::string& model_path,
              BenchStats& stats) {
  ExperimentConfig cfg;
  cfg.output_dir = (out_dir / "handoff").string();
  cfg.master_seed = 1;
  cfg.iterations = 8;
  cfg.image_count = 16;
  cfg.seed_count = 5;
  cfg.dataset = heldout_digits();
  cfg.methods.push_back({Method::Dm, "dm", 1.0, "", 5});
  cfg.methods.push_back({Method::DipThenDm, "dip_dm", 1.0, model_path, 5});
  const BenchResult r = run_benchmark(cfg);
  Outcome out;
  if (!r.failures.empty()) {
    out.detail = "benchmark failures: " + r.failures.front();
    return out;
  }
  for (const Trajectory& t : r.runs) {
    if (t.label != "dip_dm") continue;
    for (const Trajectory& u : r.runs) {
      if (u.label != "dm" || u.image_id != t.image_id || u.seed != t.seed) continue;
      ++stats.handoff_total;
      if (t.records.at(5).e0 <= u.records.at(5).e0) ++stats.handoff_wins;
    }
  }
  out.ok = true;
  return out;
}

bool record_bits_equal(const IterationRecord& a, const IterationRecord& b) {
  return a.iteration == b.iteration &&
         std::memcmp(&a.e0, &b.e0, sizeof a.e0) == 0 &&
         std::memcmp(&a.psnr_db, &b.psnr_db, sizeof a.psnr_db) == 0 &&
         std::memcmp(&a.amp_mismatch, &b.amp_mismatch, sizeof a.amp_mismatch) == 0;
}

// switch=0 must reduce the handoff method to the plain difference map, bit
// for bit, for the same seed.
bool handoff_switch_zero_identical(const DipParams& model) {
  const Geometry g = benchmark_geometry();
  const ImageSet batch = synthetic_digits(3, 28, 1);
  for (int i = 0; i < 3; ++i) {
    const GroundTruth gt = ground_truth_from_image(batch.images[i]);
    const RealGrid4D a =
        record_amplitudes(embed_image(g, batch.images[i]), g.probe, g.scan);
    RunConfig rc;
    rc.iterations = 12;
    rc.dip_switch = 0;
    const std::uint64_t seed = mix_seed(0xacce97, 9, i);
    const Trajectory dm = run_reconstruction(a, g, Method::Dm, rc, seed, nullptr, &gt);
    const Trajectory mix =
        run_reconstruction(a, g, Method::DipThenDm, rc, seed, &model, &gt);
    if (dm.records.size() != mix.records.size()) return false;
    for (std::size_t t = 0; t < dm.records.size(); ++t)
      if (!record_bits_equal(dm.records[t], mix.records[t])) return false;
    if (std::memcmp(dm.final_object.v.data(), mix.final_object.v.data(),
                    dm.final_object.v.size() * sizeof(std::complex<double>)) != 0)
      return false;
  }
  return true;
}

// --- 10: repeating bench reproduces the CSV outputs byte for byte ----------

std::optional<std::string> slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) return std::nullopt;
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

Outcome run_determinism(const std::string& cli, const fs::path& out_dir) {
  Outcome out;
  if (cli.empty()) {
    out.detail = "no --cli path supplied";
    return out;
  }
  ExperimentConfig cfg;
  cfg.master_seed = 7;
  cfg.iterations = 30;
  cfg.image_count = 2;
  cfg.seed_count = 2;
  cfg.probe_size = 5;
  cfg.probe_sigma = 1.2;
  cfg.pad = 3;
  cfg.dataset.kind = "synthetic";
  cfg.dataset.count = 4;
  cfg.dataset.side = 12;
  cfg.dataset.seed = 3;
  cfg.methods.push_back({Method::Ap, "ap", 1.0, "", 5});
  cfg.methods.push_back({Method::Dm, "dm", 1.0, "", 5});
  const fs::path cfg_path = out_dir / "determinism.json";
  std::ofstream(cfg_path) << config_to_json(cfg);

  for (const char* run : {"det1", "det2"}) {
    const std::string cmd = cli + " bench --config " + cfg_path.string() +
                            " --output-dir " + (out_dir / run).string() + " > " +
                            (out_dir / run).string() + ".log 2>&1";
    if (std::system(cmd.c_str()) != 0) {
      out.detail = std::string("bench invocation failed, see ") + run + ".log";
      return out;
    }
  }

  std::vector<std::string> same, differ;
  for (const char* name : {"runs.csv", "curves.csv", "summary.csv", "failures.csv"}) {
    const auto a = slurp(out_dir / "det1" / name);
    const auto b = slurp(out_dir / "det2" / name);
    if (a && b && *a == *b)
      same.push_back(name);
    else
      differ.push_back(name);
  }
  out.ok = differ.empty();
  if (out.ok)
    out.detail = "two bench runs, master seed 7: all four CSV outputs byte-identical";
  else
    out.detail = "CSV outputs differ between repeated runs: " + differ.front();
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  std::string cli, pretrained;
  for (int i = 1; i + 1 < argc; ++i) {
    if (std::string(argv[i]) == "--cli") cli = argv[i + 1];
    if (std::string(argv[i]) == "--model") pretrained = argv[i + 1];
  }

  const fs::path out_dir = "acceptance_out";
  fs::remove_all(out_dir);
  fs::create_directories(out_dir);

  report(1, "projection properties", guarded(run_projection_properties));
  report(2, "fixed points", guarded(run_fixed_points));
  report(3, "ap monotonicity", guarded(run_ap_monotonicity));
  report(4, "oracle equivalence", guarded(run_oracle_equivalence));
  report(5, "gradient check", guarded(run_gradient_check));
  report(6, "sampler fidelity", guarded(run_sampler_fidelity));

  // Training feeds criteria 8 and 9; --model skips it when iterating locally.
  fs::path model_path = out_dir / "dip_vm.dipm";
  std::string schedule;
  if (pretrained.empty()) {
    status("training the refiner (about 45 minutes on one core)");
    try {
      schedule = train_refiner(model_path);
    } catch (const std::exception& e) {
      schedule = std::string("training failed: ") + e.what();
    }
  } else {
    model_path = pretrained;
    schedule = "pretrained model supplied, training stage skipped";
  }

  BenchStats stats;
  status("benchmark: ap / dm / dip_vm, 16 held-out digits x 5 seeds, horizon 150");
  const Outcome a =
      guarded([&] { return run_a(out_dir, model_path.string(), stats); });
  if (!a.ok) {
    report(7, "classical ordering", a);
    report(8, "trained refiner", a);
  } else {
    const double ap = stats.censored_mean["ap"], dm = stats.censored_mean["dm"],
                 dip = stats.censored_mean["dip_vm"];
    Outcome c7;
    c7.ok = dm < ap && ap > 100.0 && dm >= 15.0 && dm <= 90.0;
    c7.detail = "mean iterations to E0<=0.1: ap " + fmt(ap) + " (>100), dm " + fmt(dm) +
                " (in [15,90] and < ap); 16 images x 5 seeds, censored at 151";
    report(7, "classical ordering", c7);
    Outcome c8;
    c8.ok = dip < dm && dm < ap && dip <= 20.0;
    c8.detail = "mean iterations: dip_vm " + fmt(dip) + " < dm " + fmt(dm) + " < ap " +
                fmt(ap) + " and dip_vm <= 20; " + schedule;
    report(8, "trained refiner", c8);
  }

  status("benchmark: dm vs dip handoff at switch 5, horizon 8");
  const Outcome c9 = guarded([&] {
    const DipParams model = load_model(model_path.string());
    const bool bitwise = handoff_switch_zero_identical(model);
    const Outcome b = run_b(out_dir, model_path.string(), stats);
    if (!b.ok) return b;
    Outcome out;
    const double frac =
        stats.handoff_total ? double(stats.handoff_wins) / stats.handoff_total : 0.0;
    out.ok = bitwise && frac >= 0.6;
    out.detail = std::string("switch 0 bitwise identical to dm: ") +
                 (bitwise ? "yes" : "NO") + "; switch 5 at or below dm at iteration 5 in " +
                 std::to_string(stats.handoff_wins) + "/" +
                 std::to_string(stats.handoff_total) + " runs (>=60%)";
    return out;
  });
  report(9, "handoff scheduler", c9);

  status("determinism: running the bench subcommand twice");
  report(10, "bench determinism", guarded([&] { return run_determinism(cli, out_dir); }));

  std::printf("acceptance: %d/10 criteria passed\n", 10 - g_failures);
  return g_failures == 0 ? 0 : 1;
}
