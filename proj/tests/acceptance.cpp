// Acceptance suite: one PASS/FAIL line per criterion. Tolerances are fixed here.
// Usage: acceptance <path-to-calibforge-cli>
#include "calibforge/error.hpp"
#include "calibforge/pipeline.hpp"
#include "calibforge/rng.hpp"

#include <Eigen/Geometry>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <numbers>
#include <random>
#include <sstream>

using namespace calibforge;
namespace fs = std::filesystem;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

using Clock = std::chrono::steady_clock;
double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int g_failures = 0;

void report(int id, const std::string& name, bool ok, const std::string& detail) {
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << " " << name << ": " << detail << std::endl;
    if (!ok) ++g_failures;
}

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

fs::path scratch(const std::string& tag) {
    const fs::path p = fs::temp_directory_path() / ("calibforge_accept_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

Rotation random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return Rotation(q.toRotationMatrix());
}

RigidTransform random_transform(std::mt19937_64& rng, double scale) {
    std::normal_distribution<double> n(0.0, scale);
    return {random_rotation(rng), Vec3(n(rng), n(rng), n(rng))};
}

// 1. Noiseless pairs recover X and Y to machine precision.
void qr24_exact_recovery() {
    const auto t0 = Clock::now();
    double worst_pos = 0.0, worst_rot = 0.0;
    for (int inst = 0; inst < 100; ++inst) {
        std::mt19937_64 rng(1000 + inst);
        const RigidTransform x = random_transform(rng, 0.1), y = random_transform(rng, 1.0);
        std::vector<PosePair> pairs;
        for (int i = 0; i < 50; ++i) {
            const RigidTransform a = random_transform(rng, 0.5);
            pairs.push_back({a, invert(y) * a * x});
        }
        const HandEyeSolution s = solve_qr24(pairs);
        worst_pos = std::max({worst_pos, (s.x_marker_to_ef.translation - x.translation).norm(),
                              (s.y_camera_to_robot.translation - y.translation).norm()});
        worst_rot = std::max({worst_rot, rotation_angle_between(s.x_marker_to_ef.rotation, x.rotation),
                              rotation_angle_between(s.y_camera_to_robot.rotation, y.rotation)});
    }
    const double dt = seconds_since(t0);
    report(1, "QR24 exact recovery", worst_pos < 1e-8 && worst_rot < 1e-8 && dt < 5.0,
           fmt("100 instances x 50 pairs, max position error %.3g m (< 1e-8), max rotation error %.3g rad (< 1e-8), %.2f s (< 5 s)",
               worst_pos, worst_rot, dt));
}

// 2. Held-out calibration error under marker noise.
void calibration_error_regime() {
    const auto t0 = Clock::now();
    const PipelineConfig defaults;
    double pos = 0.0, rot = 0.0;
    constexpr int kTrials = 50;
    for (int trial = 0; trial < kTrials; ++trial) {
        AcquisitionConfig acq = acquisition_config(defaults);
        acq.n_frames = 50;
        acq.rotation_range = defaults.calibration_rotation_range_deg * kDeg;
        acq.rng_seed = derive_seed(static_cast<std::uint64_t>(trial), stage::kPairs);
        const auto pairs = simulate_pose_pairs(acq, default_marker_to_ef(), {0.002, 0.3 * kDeg});
        const CalibrationOutcome out = run_calibrate(pairs, 40, derive_seed(trial, stage::kCalibrationSplit));
        pos += out.report.position_error_mean;
        rot += out.report.rotation_error_mean;
    }
    pos /= kTrials;
    rot /= kTrials;
    const double dt = seconds_since(t0);
    const double pos_mm = pos * 1e3, rot_deg = rot / kDeg;
    report(2, "calibration error regime",
           pos_mm >= 1.0 && pos_mm <= 10.0 && rot_deg >= 0.1 && rot_deg <= 2.0 && dt < 30.0,
           fmt("50 trials, 40/10 split, sigma 2 mm / 0.3 deg: mean position error %.3f mm (in [1, 10]), "
               "mean rotation error %.3f deg (in [0.1, 2]), %.2f s (< 30 s)",
               pos_mm, rot_deg, dt));
}

// 3. Noiseless label round trip with the true calibration and exact clicks.
void label_round_trip() {
    const fs::path dir = scratch("c3");
    PipelineConfig cfg;
    cfg.seed = 3;
    cfg.n_frames = 100;
    run_simulate(cfg, dir / "sim");
    const ReferenceAnnotation ann = annotation_from_json(read_json_file(dir / "sim" / "annotation.json"));
    const HandEyeSolution truth = solution_from_json(read_json_file(dir / "sim" / "true_calibration.json"));
    const Json s = run_label(dir / "sim", ann, truth, dir / "ds", {});
    const Json& e3 = s["label_errors"]["labels3d_m"];
    const Json& e2 = s["label_errors"]["labels2d_px_visible"];
    const double max3 = e3["max"].get<double>();
    const double max2 = e2["max"].get<double>();
    const double bound3 = 2.0 * cfg.depth_quantization;

    // How many visible labels miss the 1 px bound.
    std::size_t over = 0, visible = 0;
    const auto gt = read_json_lines(dir / "sim" / "ground_truth.jsonl");
    const DatasetManifest m = read_manifest(dir / "ds" / "manifest.jsonl");
    for (std::size_t f = 0; f < gt.size(); ++f)
        for (std::size_t e = 0; e < m.electrode_count; ++e) {
            if (!gt[f]["visible"][e].get<bool>()) continue;
            ++visible;
            const double du = m.records[f].labels2d[e][0] + m.crop.u0 - gt[f]["pixels"][e][0].get<double>();
            const double dv = m.records[f].labels2d[e][1] + m.crop.v0 - gt[f]["pixels"][e][1].get<double>();
            over += std::hypot(du, dv) > 1.0 ? 1 : 0;
        }
    fs::remove_all(dir);
    report(3, "label round trip (noiseless)", max3 <= bound3 && max3 < 1e-3 && max2 <= 1.0,
           fmt("100 frames x 8 electrodes: max 3D error %.4f mm (<= %.2f mm = 2 depth steps), "
               "max 2D error over %zu visible labels %.3f px (<= 1 px; %zu above)",
               max3 * 1e3, bound3 * 1e3, visible, max2, over));
}

// 4. Generated-label error with a noisy calibration and noisy clicks.
void generated_label_regime() {
    const auto t0 = Clock::now();
    const fs::path dir = scratch("c4");
    PipelineConfig cfg;
    cfg.seed = 4;
    cfg.n_frames = 500;
    cfg.click_noise_px = 2.0;
    run_simulate(cfg, dir / "sim");
    const auto pairs = pose_pairs_from_json(read_json_file(dir / "sim" / "pairs.json"));
    const CalibrationOutcome cal = run_calibrate(pairs, cfg.n_calibration, derive_seed(cfg.seed, stage::kCalibrationSplit));
    const ReferenceAnnotation ann = annotation_from_json(read_json_file(dir / "sim" / "annotation.json"));
    const Json s = run_label(dir / "sim", ann, cal.solution, dir / "ds", {});
    fs::remove_all(dir);
    const double mae3 = s["label_errors"]["labels3d_m"]["mean"].get<double>() * 1e3;
    const double sd3 = s["label_errors"]["labels3d_m"]["std"].get<double>() * 1e3;
    const double mae2 = s["label_errors"]["labels2d_px_visible"]["mean"].get<double>();
    const double sd2 = s["label_errors"]["labels2d_px_visible"]["std"].get<double>();
    const double dt = seconds_since(t0);
    report(4, "generated-label error regime", mae3 >= 1.0 && mae3 <= 15.0 && mae2 >= 0.3 && mae2 <= 4.0 && dt < 120.0,
           fmt("500 frames, calibration %.2f mm / %.3f deg, clicks +-2 px: 3D MAE %.2f +- %.2f mm (in [1, 15]), "
               "2D MAE %.2f +- %.2f px (in [0.3, 4]), %.1f s (< 120 s)",
               cal.report.position_error_mean * 1e3, cal.report.rotation_error_mean / kDeg, mae3, sd3, mae2, sd2, dt));
}

// 5. Metrics against loop references.
struct LoopMetrics {
    double mae, mae_std, rmae, acc;
};

LoopMetrics loop_metrics(const LabelMatrix& p, const LabelMatrix& t, int dim) {
    const int n = static_cast<int>(t.rows()), d = static_cast<int>(t.cols());
    std::vector<double> dist;
    for (int i = 0; i < n; ++i)
        for (int e = 0; e < d / dim; ++e) {
            double s = 0.0;
            for (int k = 0; k < dim; ++k) s += (p(i, e * dim + k) - t(i, e * dim + k)) * (p(i, e * dim + k) - t(i, e * dim + k));
            dist.push_back(std::sqrt(s));
        }
    double m = 0.0;
    for (double x : dist) m += x;
    m /= static_cast<double>(dist.size());
    double v = 0.0;
    for (double x : dist) v += (x - m) * (x - m);
    LoopMetrics out{m, std::sqrt(v / static_cast<double>(dist.size())), 0.0, 0.0};
    int used = 0;
    for (int c = 0; c < d; ++c) {
        double mt = 0.0, mp = 0.0;
        for (int i = 0; i < n; ++i) mt += t(i, c), mp += p(i, c);
        mt /= n;
        mp /= n;
        double stt = 0.0, spp = 0.0, spt = 0.0, ae = 0.0;
        for (int i = 0; i < n; ++i) {
            stt += (t(i, c) - mt) * (t(i, c) - mt);
            spp += (p(i, c) - mp) * (p(i, c) - mp);
            spt += (p(i, c) - mp) * (t(i, c) - mt);
            ae += std::fabs(p(i, c) - t(i, c));
        }
        if (std::sqrt(stt / n) > 1e-12) {
            out.rmae += ae / n / std::sqrt(stt / n);
            ++used;
        }
        if (std::sqrt(stt / n) > 1e-12 && std::sqrt(spp / n) > 1e-12) out.acc += spt / std::sqrt(spp * stt);
    }
    out.rmae /= used;
    out.acc /= d;
    return out;
}

void metric_oracles() {
    std::mt19937_64 rng(55);
    std::normal_distribution<double> g(0.0, 1.0);
    double worst = 0.0;
    auto rel = [](double a, double b) { return std::fabs(a - b) / std::max(std::fabs(b), 1e-300); };
    for (int inst = 0; inst < 20; ++inst) {
        const int dim = inst % 2 ? 3 : 2;
        const int n = 5 + inst * 3, e = 1 + inst % 8;
        LabelMatrix t(n, e * dim), p(n, e * dim);
        for (Eigen::Index i = 0; i < t.size(); ++i) {
            t.data()[i] = 50.0 * g(rng);
            p.data()[i] = t.data()[i] + 5.0 * g(rng);
        }
        const RegressionReport r = regression_report(p, t, dim);
        const LoopMetrics o = loop_metrics(p, t, dim);
        worst = std::max({worst, rel(r.mae_mean, o.mae), rel(r.mae_std, o.mae_std), rel(r.rmae, o.rmae), rel(r.acc, o.acc)});
    }
    LabelMatrix t(30, 16);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = g(rng);
    const RegressionReport perfect = regression_report(t, t, 2);
    const bool identities = perfect.mae_mean == 0.0 && perfect.acc == 1.0;
    report(5, "metric oracles", worst < 1e-12 && identities,
           fmt("20 instances, max relative deviation from loop references %.3g (< 1e-12); "
               "perfect prediction MAE = %g, aCC = %.17g (exactly 0 and 1)",
               worst, perfect.mae_mean, perfect.acc));
}

// 6. Backprop against central differences on the default architecture.
double sampled_gradient_error(const Model& model, const std::vector<Tensor>& images, const LabelMatrix& targets,
                              const std::vector<std::size_t>& idx) {
    const LossAndGrad lg = loss_and_grad(model, images, targets);
    Model probe = model;
    double worst = 0.0;
    for (std::size_t i : idx) {
        const double x = probe.params()[i];
        const double h = 1e-5 * std::max(1.0, std::fabs(x));
        probe.params()[i] = x + h;
        const double up = loss_and_grad(probe, images, targets).loss;
        probe.params()[i] = x - h;
        const double down = loss_and_grad(probe, images, targets).loss;
        probe.params()[i] = x;
        const double fd = (up - down) / (2 * h);
        worst = std::max(worst, std::fabs(fd - lg.grad[i]) / std::max({std::fabs(fd), std::fabs(lg.grad[i]), 1e-6}));
    }
    return worst;
}

void gradient_check() {
    ModelConfig mc;  // 64x64 RGB, 2D labels
    Model model = Model::initialized(mc, 21);
    std::mt19937_64 rng(22);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Tensor> images;
    for (int b = 0; b < 4; ++b) {
        Tensor t(mc.input_channels(), mc.input_height, mc.input_width);
        for (auto& x : t.data) x = u(rng);
        images.push_back(t);
    }
    LabelMatrix targets(4, mc.output_dim());
    for (Eigen::Index i = 0; i < targets.size(); ++i) targets.data()[i] = g(rng);

    // 20 parameters from each of the eight weight and bias blocks.
    const Model::Layout& l = model.layout();
    const std::size_t bounds[] = {l.conv1_w, l.conv1_b, l.conv2_w, l.conv2_b, l.dense1_w, l.dense1_b, l.dense2_w, l.dense2_b, l.total};
    std::vector<std::size_t> idx;
    for (int blk = 0; blk < 8; ++blk) {
        std::uniform_int_distribution<std::size_t> pick(bounds[blk], bounds[blk + 1] - 1);
        for (int k = 0; k < 20; ++k) idx.push_back(pick(rng));
    }
    const double at_init = sampled_gradient_error(model, images, targets, idx);
    AdamState state(model.params().size());
    for (int step = 0; step < 10; ++step) {
        const LossAndGrad lg = loss_and_grad(model, images, targets);
        adam_step(state, model.params(), lg.grad, 1e-3);
    }
    const double after = sampled_gradient_error(model, images, targets, idx);
    report(6, "gradient check", at_init < 1e-4 && after < 1e-4,
           fmt("%zu sampled parameters of the 64x64 RGB model: max relative error %.3g at init, %.3g after 10 Adam steps (< 1e-4)",
               idx.size(), at_init, after));
}

// 7. The toy regressor learns the 2D labels.
void learnability() {
    const auto t0 = Clock::now();
    const fs::path dir = scratch("c7");
    PipelineConfig cfg;
    cfg.seed = 7;
    run_simulate(cfg, dir / "sim");
    const auto pairs = pose_pairs_from_json(read_json_file(dir / "sim" / "pairs.json"));
    const CalibrationOutcome cal = run_calibrate(pairs, cfg.n_calibration, derive_seed(cfg.seed, stage::kCalibrationSplit));
    const ReferenceAnnotation ann = annotation_from_json(read_json_file(dir / "sim" / "annotation.json"));
    run_label(dir / "sim", ann, cal.solution, dir / "ds", {});
    TrainOptions opts;
    opts.seed = cfg.seed;
    const Json s = run_train(dir / "ds" / "manifest.jsonl", opts, dir / "model.bin");
    fs::remove_all(dir);
    const double dt = seconds_since(t0);
    const double mae = s["best_val"]["mae_mean"].get<double>();
    const double base = s["baseline_val_mae"].get<double>();
    const double acc = s["best_val"]["acc"].get<double>();
    report(7, "learnability at desk scale",
           mae < 0.5 * base && acc >= 0.9 && dt < 600.0 && s["train_frames"] == 270 && s["val_frames"] == 30,
           fmt("300 frames (%d/%d), 64x64 RGB, 2D labels, 200 epochs: best val MAE %.2f px vs mean-predictor %.2f px "
               "(ratio %.3f < 0.5), aCC %.3f (>= 0.9), best epoch %d, %.0f s (< 600 s)",
               s["train_frames"].get<int>(), s["val_frames"].get<int>(), mae, base, mae / base, acc,
               s["best_epoch"].get<int>(), dt));
}

// 8. Two CLI pipeline runs with one seed are byte-identical.
std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void determinism(const std::string& cli) {
    const fs::path dir = scratch("c8");
    {
        std::ofstream c(dir / "cfg.toml");
        c << "n_frames = 60\nn_pairs = 20\nn_calibration = 15\ninput_size = 32\nepochs = 5\nval_fraction = 0.2\n";
    }
    int status[2];
    for (int run = 0; run < 2; ++run) {
        const std::string cmd = "CALIBFORGE_LOG=quiet '" + cli + "' pipeline --config '" + (dir / "cfg.toml").string() +
                                "' --seed 8 --out '" + (dir / ("run" + std::to_string(run))).string() + "' > /dev/null";
        status[run] = std::system(cmd.c_str());
    }
    const char* files[] = {"dataset/manifest.jsonl", "calibration_report.json", "model.bin.log.jsonl",
                           "calibration.json", "model.bin", "predictions.jsonl", "eval_report.json"};
    std::size_t same = 0, total = 0;
    std::string differing;
    for (const char* f : files) {
        ++total;
        const std::string a = slurp(dir / "run0" / f), b = slurp(dir / "run1" / f);
        if (!a.empty() && a == b)
            ++same;
        else
            differing += std::string(" ") + f;
    }
    fs::remove_all(dir);
    report(8, "determinism", status[0] == 0 && status[1] == 0 && same == total,
           fmt("two `calibforge pipeline --seed 8` runs: %zu/%zu artifacts byte-identical (manifest, calibration report, "
               "training log, ...)%s",
               same, total, differing.empty() ? "" : (", differing:" + differing).c_str()));
}

}  // namespace

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: acceptance <calibforge-cli>\n";
        return 2;
    }
    const std::string cli = argv[1];
    const auto guard = [](const char* name, auto&& fn) {
        try {
            fn();
        } catch (const std::exception& e) {
            std::cout << "[FAIL] " << name << ": exception: " << e.what() << std::endl;
            ++g_failures;
        }
    };
    guard("1", qr24_exact_recovery);
    guard("2", calibration_error_regime);
    guard("3", label_round_trip);
    guard("4", generated_label_regime);
    guard("5", metric_oracles);
    guard("6", gradient_check);
    guard("7", learnability);
    guard("8", [&] { determinism(cli); });
    std::cout << (g_failures == 0 ? "all criteria passed" : std::to_string(g_failures) + " criterion/criteria failed")
              << std::endl;
    return g_failures == 0 ? 0 : 1;
}
