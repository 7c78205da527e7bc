// calibforge command-line front end. JSON results go to stdout, progress to
// stderr. Exit status: 0 success, 1 bad input or usage, 2 internal failure.
#include "calibforge/error.hpp"
#include "calibforge/pipeline.hpp"
#include "calibforge/rng.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <optional>

using namespace calibforge;

namespace {

enum class Verbosity { Quiet, Info, Debug };

Verbosity verbosity() {
    const char* v = std::getenv("CALIBFORGE_LOG");
    if (v == nullptr) return Verbosity::Info;
    const std::string s(v);
    if (s == "quiet" || s == "0" || s == "off") return Verbosity::Quiet;
    if (s == "debug" || s == "2") return Verbosity::Debug;
    return Verbosity::Info;
}

LogFn make_logger() {
    if (verbosity() == Verbosity::Quiet) return {};
    return [](const std::string& msg) { std::cerr << "[calibforge] " << msg << "\n"; };
}

void emit(const Json& j) { std::cout << j.dump(2) << std::endl; }

PipelineConfig load_config(const std::string& path) {
    return path.empty() ? PipelineConfig{} : PipelineConfig::from_file(path);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Hand-eye calibration, label propagation and electrode regression on RGB-D frames", "calibforge"};
    app.set_version_flag("--version", std::string("calibforge ") + CALIBFORGE_VERSION);
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Render synthetic RGB-D frames, pose pairs and a reference annotation");
    std::string sim_config, sim_out;
    std::optional<std::uint64_t> sim_seed;
    std::optional<std::size_t> sim_frames;
    sim->add_option("--config", sim_config, "Pipeline config file")->check(CLI::ExistingFile);
    sim->add_option("--out", sim_out, "Output directory")->required();
    sim->add_option("--seed", sim_seed, "Root seed (overrides the config)");
    sim->add_option("--frames", sim_frames, "Number of frames (overrides the config)");

    // calibrate
    auto* cal = app.add_subcommand("calibrate", "Solve AX = YB from pose pairs and report held-out errors");
    std::string cal_pairs, cal_out;
    std::size_t cal_n = 40;
    std::uint64_t cal_seed = 0;
    double cal_weight = 1.0;
    cal->add_option("--pairs", cal_pairs, "pairs.json")->required()->check(CLI::ExistingFile);
    cal->add_option("--n-cal", cal_n, "Pairs used for solving; the rest are held out")->capture_default_str();
    cal->add_option("--seed", cal_seed, "Root seed of the split")->capture_default_str();
    cal->add_option("--translation-weight", cal_weight, "Weight of the translation rows")->capture_default_str();
    cal->add_option("--out", cal_out, "Write the solution to this file");

    // label
    auto* lab = app.add_subcommand("label", "Propagate a reference annotation and export a cropped dataset");
    std::string lab_frames, lab_ann, lab_cal, lab_out;
    LabelOptions lab_opts;
    lab->add_option("--frames", lab_frames, "Directory written by simulate")->required()->check(CLI::ExistingDirectory);
    lab->add_option("--annotation", lab_ann, "annotation.json")->required()->check(CLI::ExistingFile);
    lab->add_option("--calibration", lab_cal, "Calibration solution JSON")->required()->check(CLI::ExistingFile);
    lab->add_option("--out", lab_out, "Dataset directory")->required();
    lab->add_option("--margin-u", lab_opts.margin_u, "Horizontal crop margin (px)")->capture_default_str();
    lab->add_option("--margin-v", lab_opts.margin_v, "Vertical crop margin (px)")->capture_default_str();

    // train
    auto* trn = app.add_subcommand("train", "Train the electrode regressor on a dataset manifest");
    std::string trn_manifest, trn_out, trn_config, trn_channels, trn_labels;
    std::optional<std::size_t> trn_epochs;
    std::optional<std::uint64_t> trn_seed;
    trn->add_option("--manifest", trn_manifest, "manifest.jsonl")->required()->check(CLI::ExistingFile);
    trn->add_option("--out", trn_out, "Model file")->required();
    trn->add_option("--config", trn_config, "Pipeline config file for hyperparameters")->check(CLI::ExistingFile);
    trn->add_option("--channels", trn_channels, "rgb | rgbd | d")->check(CLI::IsMember({"rgb", "rgbd", "d"}));
    trn->add_option("--labels", trn_labels, "2d | 3d")->check(CLI::IsMember({"2d", "3d"}));
    trn->add_option("--epochs", trn_epochs, "Epoch count (overrides the config)");
    trn->add_option("--seed", trn_seed, "Root seed (overrides the config)");

    // predict
    auto* prd = app.add_subcommand("predict", "Run a trained model over a manifest");
    std::string prd_model, prd_manifest, prd_out;
    prd->add_option("--model", prd_model, "Model file")->required()->check(CLI::ExistingFile);
    prd->add_option("--manifest", prd_manifest, "manifest.jsonl")->required()->check(CLI::ExistingFile);
    prd->add_option("--out", prd_out, "Predictions (JSON lines)")->required();

    // eval
    auto* evl = app.add_subcommand("eval", "Score predictions against targets");
    std::string evl_pred, evl_target, evl_labels;
    bool evl_per_coord = false;
    evl->add_option("--pred", evl_pred, "Predictions (JSON lines)")->required()->check(CLI::ExistingFile);
    evl->add_option("--target", evl_target, "Targets, e.g. manifest.jsonl")->required()->check(CLI::ExistingFile);
    evl->add_option("--labels", evl_labels, "2d | 3d (default: whatever the predictions carry)")
        ->check(CLI::IsMember({"2d", "3d"}));
    evl->add_flag("--per-coordinate", evl_per_coord, "Average absolute errors per coordinate instead of per point");

    // pipeline
    auto* pip = app.add_subcommand("pipeline", "simulate, calibrate, label, train, predict and eval in one go");
    std::string pip_config, pip_out;
    std::optional<std::uint64_t> pip_seed;
    pip->add_option("--config", pip_config, "Pipeline config file")->check(CLI::ExistingFile);
    pip->add_option("--out", pip_out, "Output directory")->required();
    pip->add_option("--seed", pip_seed, "Root seed (overrides the config)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        std::cerr << "\n" << app.help();
        return 1;
    }

    const LogFn log = make_logger();
    try {
        if (*sim) {
            PipelineConfig cfg = load_config(sim_config);
            if (sim_seed) cfg.seed = *sim_seed;
            if (sim_frames) cfg.n_frames = *sim_frames;
            emit(run_simulate(cfg, sim_out, log));
        } else if (*cal) {
            const auto pairs = pose_pairs_from_json(read_json_file(cal_pairs));
            const CalibrationOutcome out =
                run_calibrate(pairs, cal_n, derive_seed(cal_seed, stage::kCalibrationSplit), cal_weight);
            if (!cal_out.empty()) write_json_file(cal_out, solution_to_json(out.solution));
            emit({{"solution", solution_to_json(out.solution)}, {"report", report_to_json(out.report)}});
        } else if (*lab) {
            const auto ann = annotation_from_json(read_json_file(lab_ann));
            const auto sol = solution_from_json(read_json_file(lab_cal));
            emit(run_label(lab_frames, ann, sol, lab_out, lab_opts, log));
        } else if (*trn) {
            PipelineConfig cfg = load_config(trn_config);
            if (!trn_channels.empty()) cfg.channels = trn_channels;
            if (!trn_labels.empty()) cfg.labels = trn_labels;
            if (trn_epochs) cfg.epochs = *trn_epochs;
            if (trn_seed) cfg.seed = *trn_seed;
            cfg.validate();
            TrainOptions to;
            to.model.input_width = cfg.input_size;
            to.model.input_height = cfg.input_size;
            to.model.channels = parse_channel_mode(cfg.channels);
            to.model.labels = parse_label_mode(cfg.labels);
            to.model.conv1_channels = cfg.conv1_channels;
            to.model.conv2_channels = cfg.conv2_channels;
            to.model.dense_hidden = cfg.dense_hidden;
            to.train.lr0 = cfg.lr0;
            to.train.batch = cfg.batch;
            to.train.epochs = cfg.epochs;
            to.train.halve_every = cfg.halve_every;
            to.val_fraction = cfg.val_fraction;
            to.seed = cfg.seed;
            emit(run_train(trn_manifest, to, trn_out, log));
        } else if (*prd) {
            run_predict(prd_model, prd_manifest, prd_out);
            emit({{"predictions", prd_out}});
        } else if (*evl) {
            const std::string key = evl_labels.empty() ? std::string{} : "labels" + evl_labels;
            emit(run_eval(evl_pred, evl_target, key,
                          evl_per_coord ? MaeConvention::PerCoordinate : MaeConvention::Euclidean));
        } else if (*pip) {
            PipelineConfig cfg = load_config(pip_config);
            if (pip_seed) cfg.seed = *pip_seed;
            emit(run_pipeline(cfg, pip_out, log));
        }
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
