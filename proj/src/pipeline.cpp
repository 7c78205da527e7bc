#include "calibforge/pipeline.hpp"

#include "calibforge/error.hpp"
#include "calibforge/image_io.hpp"
#include "calibforge/rng.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>

namespace calibforge {
namespace fs = std::filesystem;

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

void say(const LogFn& log, const std::string& msg) {
    if (log) log(msg);
}

std::string frame_stem(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", index);
    return buf;
}

void make_dirs(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError(p.string(), ec.message());
}

struct FrameEntry {
    std::size_t index = 0;
    std::string rgb;
    std::string depth;
    RigidTransform ef_pose;
};

std::vector<FrameEntry> read_frames(const fs::path& frames_dir) {
    std::vector<FrameEntry> out;
    const fs::path path = frames_dir / "frames.jsonl";
    for (const auto& j : read_json_lines(path)) {
        try {
            out.push_back({j.at("index").get<std::size_t>(), j.at("rgb").get<std::string>(),
                           j.at("depth").get<std::string>(), pose_from_json(j.at("ef_pose"))});
        } catch (const Json::exception& e) {
            throw IoError(path.string(), e.what());
        } catch (const InputError& e) {
            throw IoError(path.string(), e.what());
        }
    }
    if (out.empty()) throw IoError(path.string(), "no frames");
    return out;
}

struct GroundTruthEntry {
    std::vector<Vec3> positions;
    std::vector<PixelCoord> pixels;
    std::vector<bool> visible;
};

Json ground_truth_to_json(std::size_t index, const GroundTruthFrame& gt) {
    Json pixels = Json::array();
    for (const auto& p : gt.electrode_pixels) pixels.push_back({p.u, p.v});
    Json visible = Json::array();
    for (bool b : gt.visibility) visible.push_back(b);
    return {{"index", index},
            {"ef_pose", pose_to_json(gt.frame.endeffector_pose)},
            {"positions", points_to_json(gt.electrode_positions_camera)},
            {"pixels", pixels},
            {"visible", visible}};
}

std::vector<GroundTruthEntry> read_ground_truth(const fs::path& path) {
    std::vector<GroundTruthEntry> out;
    for (const auto& j : read_json_lines(path)) {
        GroundTruthEntry e;
        e.positions = points_from_json(j.at("positions"));
        for (const auto& p : j.at("pixels")) e.pixels.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
        for (const auto& b : j.at("visible")) e.visible.push_back(b.get<bool>());
        out.push_back(std::move(e));
    }
    return out;
}

RgbdFrame load_frame(const fs::path& dir, const FrameEntry& entry, const Intrinsics& intr, bool with_rgb) {
    RgbdFrame f;
    f.intrinsics = intr;
    f.endeffector_pose = entry.ef_pose;
    f.depth = read_pfm((dir / entry.depth).string());
    f.rgb = with_rgb ? read_ppm((dir / entry.rgb).string()) : RgbImage(f.depth.width, f.depth.height);
    f.validate();
    return f;
}

// Reads an N×k label array from one JSON line.
std::vector<double> flat_labels(const Json& line, const std::string& key, const std::string& path) {
    if (!line.contains(key)) throw IoError(path, "line lacks '" + key + "'");
    std::vector<double> out;
    for (const auto& pt : line.at(key))
        for (const auto& x : pt) {
            if (!x.is_number()) throw IoError(path, "non-numeric label");
            out.push_back(x.get<double>());
        }
    return out;
}

}  // namespace

AcquisitionConfig acquisition_config(const PipelineConfig& cfg) {
    AcquisitionConfig a;
    a.n_frames = cfg.n_frames;
    a.workspace_extent = cfg.workspace_extent;
    a.workspace_center = cfg.workspace_center;
    a.rotation_range = cfg.rotation_range_deg * kDeg;
    a.depth_noise_sigma = cfg.depth_noise_sigma;
    a.depth_quantization = cfg.depth_quantization;
    a.rng_seed = derive_seed(cfg.seed, stage::kFrames);
    return a;
}

Intrinsics pipeline_intrinsics(const PipelineConfig& cfg) {
    return Intrinsics::make_default(cfg.image_width, cfg.image_height, cfg.focal_length);
}

Json run_simulate(const PipelineConfig& cfg, const fs::path& out_dir, const LogFn& log) {
    cfg.validate();
    const Intrinsics intr = pipeline_intrinsics(cfg);
    const AcquisitionConfig acq = acquisition_config(cfg);
    AcquisitionConfig render_cfg = acq;
    render_cfg.rng_seed = derive_seed(cfg.seed, stage::kDepthNoise);
    const HeadPhantom phantom = default_phantom();

    make_dirs(out_dir / "frames");
    write_json_file(out_dir / "intrinsics.json", intrinsics_to_json(intr));
    std::ofstream frames_out(out_dir / "frames.jsonl");
    std::ofstream gt_out(out_dir / "ground_truth.jsonl");
    if (!frames_out || !gt_out) throw IoError(out_dir.string(), "cannot create frame indexes");

    const std::vector<RigidTransform> poses = sample_poses(acq);
    std::optional<ReferenceAnnotation> annotation;
    std::size_t all_visible_frames = 0;
    double best_score = -1.0;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const GroundTruthFrame gt = render(phantom, poses[i], render_cfg, intr, i);
        const std::string stem = "frames/" + frame_stem(i);
        write_ppm((out_dir / (stem + "_rgb.ppm")).string(), gt.frame.rgb);
        write_pfm((out_dir / (stem + "_depth.pfm")).string(), gt.frame.depth);
        frames_out << Json{{"index", i}, {"rgb", stem + "_rgb.ppm"}, {"depth", stem + "_depth.pfm"},
                           {"ef_pose", pose_to_json(poses[i])}}.dump()
                   << "\n";
        gt_out << ground_truth_to_json(i, gt).dump() << "\n";

        const bool all_visible = std::all_of(gt.visibility.begin(), gt.visibility.end(), [](bool b) { return b; });
        all_visible_frames += all_visible ? 1 : 0;
        if (cfg.reference_frame >= 0) {
            if (static_cast<std::size_t>(cfg.reference_frame) == i)
                annotation = simulate_clicks(gt, i, cfg.click_noise_px, derive_seed(cfg.seed, stage::kClicks));
        } else if (all_visible) {
            // Annotate the frame that shows every electrode most head-on.
            const double score = min_view_cosine(phantom, poses[i], acq.camera_in_robot);
            if (!annotation || score > best_score) {
                best_score = score;
                annotation = simulate_clicks(gt, i, cfg.click_noise_px, derive_seed(cfg.seed, stage::kClicks));
            }
        }
        if ((i + 1) % 50 == 0) say(log, "rendered " + std::to_string(i + 1) + "/" + std::to_string(poses.size()));
    }
    if (!frames_out || !gt_out) throw IoError(out_dir.string(), "failed writing frame indexes");
    if (!annotation)
        throw InputError(cfg.reference_frame >= 0 ? "reference_frame is out of range"
                                                  : "no frame shows every electrode; cannot pick a reference frame");
    write_json_file(out_dir / "annotation.json", annotation_to_json(*annotation));

    AcquisitionConfig pair_cfg = acq;
    pair_cfg.n_frames = cfg.n_pairs;
    pair_cfg.rotation_range = cfg.calibration_rotation_range_deg * kDeg;
    pair_cfg.rng_seed = derive_seed(cfg.seed, stage::kPairs);
    const NoiseParams noise{cfg.pose_noise_t, cfg.pose_noise_r_deg * kDeg};
    const RigidTransform marker_to_ef = default_marker_to_ef();
    write_json_file(out_dir / "pairs.json", pose_pairs_to_json(simulate_pose_pairs(pair_cfg, marker_to_ef, noise)));
    write_json_file(out_dir / "true_calibration.json",
                    solution_to_json({marker_to_ef, acq.camera_in_robot, 0.0}));

    return {{"frames", poses.size()},
            {"frames_all_visible", all_visible_frames},
            {"pairs", cfg.n_pairs},
            {"reference_frame", annotation->frame_index},
            {"out", out_dir.string()}};
}

CalibrationOutcome run_calibrate(const std::vector<PosePair>& pairs, std::size_t n_calibration, std::uint64_t seed,
                                 double translation_row_weight) {
    const auto [cal, held_out] = split_pairs(pairs, n_calibration, seed);
    Qr24Options opt;
    opt.translation_row_weight = translation_row_weight;
    CalibrationOutcome out;
    out.solution = solve_qr24(cal, opt);
    out.report = evaluate(out.solution, held_out);
    return out;
}

Json run_label(const fs::path& frames_dir, const ReferenceAnnotation& annotation, const HandEyeSolution& calibration,
               const fs::path& out_dir, const LabelOptions& opts, const LogFn& log) {
    const Intrinsics intr = intrinsics_from_json(read_json_file(frames_dir / "intrinsics.json"));
    const std::vector<FrameEntry> frames = read_frames(frames_dir);
    const fs::path gt_path = frames_dir / "ground_truth.jsonl";
    std::vector<GroundTruthEntry> truth;
    if (fs::exists(gt_path)) {
        truth = read_ground_truth(gt_path);
        if (truth.size() != frames.size()) throw IoError(gt_path.string(), "frame count differs from frames.jsonl");
    }

    const auto ref_it = std::find_if(frames.begin(), frames.end(),
                                     [&](const FrameEntry& f) { return f.index == annotation.frame_index; });
    if (ref_it == frames.end())
        throw InputError("annotation refers to frame " + std::to_string(annotation.frame_index) + ", which does not exist");
    const RgbdFrame ref = load_frame(frames_dir, *ref_it, intr, false);
    const ElectrodeInEndeffector in_ef =
        lift_to_endeffector(ref.endeffector_pose, calibration.y_camera_to_robot, annotate_reference(ref, annotation));
    const std::size_t n = in_ef.poses.size();
    if (!truth.empty() && truth.front().positions.size() != n)
        throw InputError("annotation has " + std::to_string(n) + " clicks but the ground truth has " +
                         std::to_string(truth.front().positions.size()) + " electrodes");

    std::vector<LabeledFrame> labels;
    labels.reserve(frames.size());
    std::vector<std::vector<Pixel>> all_pixels;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        const RgbdFrame f = load_frame(frames_dir, frames[i], intr, false);
        LabeledFrame lf;
        lf.frame_index = frames[i].index;
        lf.positions_3d = propagate(in_ef, f.endeffector_pose, calibration.y_camera_to_robot);
        const PointCloud cloud = to_point_cloud(f);
        if (cloud.valid_count() == 0)
            throw InputError("frame " + std::to_string(lf.frame_index) + " has no valid depth; cannot derive pixel labels");
        for (const auto& p : lf.positions_3d) {
            const NearestHit hit = nearest_point(cloud, p);
            const PixelCoord px = project(intr, hit.xyz);
            lf.pixels_2d.push_back({static_cast<int>(std::floor(px.u + 0.5)), static_cast<int>(std::floor(px.v + 0.5))});
            if (truth.empty()) lf.visibility.push_back(hit.distance <= kVisibilityDepthTolerance);
        }
        if (!truth.empty()) lf.visibility = truth[i].visible;
        all_pixels.push_back(lf.pixels_2d);
        labels.push_back(std::move(lf));
        if ((i + 1) % 50 == 0) say(log, "labeled " + std::to_string(i + 1) + "/" + std::to_string(frames.size()));
    }

    const CropRect crop = compute_crop(all_pixels, opts.margin_u, opts.margin_v, intr.width, intr.height);
    DatasetWriter writer(out_dir, crop, n);
    for (std::size_t i = 0; i < frames.size(); ++i) writer.add(load_frame(frames_dir, frames[i], intr, true), labels[i]);
    const DatasetManifest manifest = writer.finish();

    Json summary = {{"frames", frames.size()},
                    {"electrodes", n},
                    {"crop", crop_to_json(crop)},
                    {"manifest", (out_dir / "manifest.jsonl").string()}};
    if (!truth.empty()) {
        std::vector<double> err3, err2;
        for (std::size_t i = 0; i < frames.size(); ++i) {
            for (std::size_t e = 0; e < n; ++e) {
                err3.push_back((labels[i].positions_3d[e] - truth[i].positions[e]).norm());
                if (truth[i].visible[e]) {
                    const double du = labels[i].pixels_2d[e][0] - truth[i].pixels[e].u;
                    const double dv = labels[i].pixels_2d[e][1] - truth[i].pixels[e].v;
                    err2.push_back(std::hypot(du, dv));
                }
            }
        }
        auto stats = [](const std::vector<double>& xs) {
            double mean = 0.0, var = 0.0, mx = 0.0;
            for (double x : xs) mean += x;
            mean = xs.empty() ? 0.0 : mean / static_cast<double>(xs.size());
            for (double x : xs) {
                var += (x - mean) * (x - mean);
                mx = std::max(mx, x);
            }
            var = xs.empty() ? 0.0 : var / static_cast<double>(xs.size());
            return Json{{"mean", mean}, {"std", std::sqrt(var)}, {"max", mx}, {"count", xs.size()}};
        };
        const Json errors = {{"labels3d_m", stats(err3)}, {"labels2d_px_visible", stats(err2)}};
        write_json_file(out_dir / "label_errors.json", errors);
        summary["label_errors"] = errors;
    }
    say(log, "exported " + std::to_string(manifest.records.size()) + " frames");
    return summary;
}

Json regression_report_to_json(const RegressionReport& r) {
    return {{"mae_mean", r.mae_mean}, {"mae_std", r.mae_std}, {"rmae", r.rmae},         {"acc", r.acc},
            {"n_samples", r.n_samples}, {"n_outputs", r.n_outputs}, {"mae_convention", to_string(r.convention)}};
}

Json run_train(const fs::path& manifest_path, const TrainOptions& opts, const fs::path& model_path, const LogFn& log) {
    const DatasetManifest manifest = read_manifest(manifest_path);
    ModelConfig mc = opts.model;
    mc.n_electrodes = static_cast<int>(manifest.electrode_count);
    const Samples all = load_samples(manifest, mc);
    const auto [tr_idx, val_idx] = split_indices(all.size(), opts.val_fraction, derive_seed(opts.seed, stage::kTrainSplit));
    const Samples tr = subset(all, tr_idx);
    const Samples val = subset(all, val_idx);

    TrainConfig tc = opts.train;
    tc.rng_seed = derive_seed(opts.seed, stage::kTrainShuffle);
    const Model init = Model::initialized(mc, derive_seed(opts.seed, stage::kTrainInit));
    say(log, "training on " + std::to_string(tr.size()) + " frames, validating on " + std::to_string(val.size()));
    const TrainResult result = train(init, tr, val, tc);

    save_model(model_path, result.best);
    std::vector<Json> lines;
    for (const auto& e : result.log)
        lines.push_back({{"epoch", e.epoch}, {"lr", e.lr}, {"train_loss", e.train_loss}, {"val", regression_report_to_json(e.val)}});
    write_json_lines(fs::path(model_path.string() + ".log.jsonl"), lines);
    write_json_file(fs::path(model_path.string() + ".split.json"), {{"train", tr_idx}, {"val", val_idx}});

    // Baseline: predict the training-set mean for every validation frame.
    const Eigen::RowVectorXd mean = tr.targets.colwise().mean();
    const LabelMatrix baseline = mean.replicate(val.targets.rows(), 1);
    const int pdim = point_dim(mc.labels);
    const MeanStd base = mae(baseline, val.targets, pdim);
    const RegressionReport& best = result.log[result.best_epoch].val;
    return {{"model", model_path.string()},
            {"best_epoch", result.best_epoch},
            {"best_val", regression_report_to_json(best)},
            {"baseline_val_mae", base.mean},
            {"train_frames", tr.size()},
            {"val_frames", val.size()}};
}

void run_predict(const fs::path& model_path, const fs::path& manifest_path, const fs::path& out_path) {
    const Model model = load_model(model_path);
    const DatasetManifest manifest = read_manifest(manifest_path);
    const Samples samples = load_samples(manifest, model.config());
    const LabelMatrix pred = predict(model, samples.images);
    const int pdim = point_dim(model.config().labels);
    const std::string key = model.config().labels == LabelMode::Pixels2D ? "labels2d" : "labels3d";
    std::vector<Json> lines;
    for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        Json pts = Json::array();
        for (Eigen::Index e = 0; e < pred.cols() / pdim; ++e) {
            Json pt = Json::array();
            for (int k = 0; k < pdim; ++k) pt.push_back(pred(i, e * pdim + k));
            pts.push_back(pt);
        }
        lines.push_back({{"index", i}, {"rgb", manifest.records[static_cast<std::size_t>(i)].rgb}, {key, pts}});
    }
    write_json_lines(out_path, lines);
}

Json run_eval(const fs::path& pred_path, const fs::path& target_path, const std::string& label_key,
              MaeConvention convention) {
    const std::vector<Json> pred = read_json_lines(pred_path);
    const std::vector<Json> target = read_json_lines(target_path);
    if (pred.empty()) throw IoError(pred_path.string(), "no predictions");
    if (pred.size() != target.size())
        throw InputError("prediction file has " + std::to_string(pred.size()) + " lines, target file has " +
                         std::to_string(target.size()));
    std::string key = label_key;
    if (key.empty()) key = pred.front().contains("labels3d") ? "labels3d" : "labels2d";
    if (key != "labels2d" && key != "labels3d") throw InputError("label key must be labels2d or labels3d");
    const int pdim = key == "labels2d" ? 2 : 3;

    const std::size_t cols = flat_labels(pred.front(), key, pred_path.string()).size();
    LabelMatrix p(static_cast<Eigen::Index>(pred.size()), static_cast<Eigen::Index>(cols));
    LabelMatrix t(p.rows(), p.cols());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const auto a = flat_labels(pred[i], key, pred_path.string());
        const auto b = flat_labels(target[i], key, target_path.string());
        if (a.size() != cols || b.size() != cols)
            throw InputError("line " + std::to_string(i + 1) + ": label arrays differ in size");
        for (std::size_t k = 0; k < cols; ++k) {
            p(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = a[k];
            t(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k)) = b[k];
        }
    }
    Json out = regression_report_to_json(regression_report(p, t, pdim, convention));
    out["labels"] = key;
    return out;
}

Json run_pipeline(const PipelineConfig& cfg, const fs::path& out_dir, const LogFn& log) {
    cfg.validate();
    make_dirs(out_dir);
    {
        std::ofstream c(out_dir / "config.toml");
        c << cfg.to_text();
        if (!c) throw IoError((out_dir / "config.toml").string(), "write failed");
    }
    const fs::path sim_dir = out_dir / "simulate";
    say(log, "simulate");
    const Json sim = run_simulate(cfg, sim_dir, log);

    say(log, "calibrate");
    const auto pairs = pose_pairs_from_json(read_json_file(sim_dir / "pairs.json"));
    const CalibrationOutcome cal =
        run_calibrate(pairs, cfg.n_calibration, derive_seed(cfg.seed, stage::kCalibrationSplit), cfg.translation_row_weight);
    write_json_file(out_dir / "calibration.json", solution_to_json(cal.solution));
    write_json_file(out_dir / "calibration_report.json", report_to_json(cal.report));

    say(log, "label");
    const ReferenceAnnotation ann = annotation_from_json(read_json_file(sim_dir / "annotation.json"));
    const Json lab = run_label(sim_dir, ann, cal.solution, out_dir / "dataset", {cfg.crop_margin_u, cfg.crop_margin_v}, log);

    say(log, "train");
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
    const fs::path manifest = out_dir / "dataset" / "manifest.jsonl";
    const Json tr = run_train(manifest, to, out_dir / "model.bin", log);

    say(log, "predict + eval");
    run_predict(out_dir / "model.bin", manifest, out_dir / "predictions.jsonl");
    const Json split = read_json_file(out_dir / "model.bin.split.json");
    const auto all_pred = read_json_lines(out_dir / "predictions.jsonl");
    const auto all_target = read_json_lines(manifest);
    std::vector<Json> val_pred, val_target;
    for (const auto& idx : split.at("val")) {
        val_pred.push_back(all_pred.at(idx.get<std::size_t>()));
        val_target.push_back(all_target.at(idx.get<std::size_t>()));
    }
    write_json_lines(out_dir / "val_predictions.jsonl", val_pred);
    write_json_lines(out_dir / "val_targets.jsonl", val_target);
    const std::string key = cfg.labels == "2d" ? "labels2d" : "labels3d";
    const Json ev = run_eval(out_dir / "val_predictions.jsonl", out_dir / "val_targets.jsonl", key);
    write_json_file(out_dir / "eval_report.json", ev);

    return {{"simulate", sim}, {"calibration_report", report_to_json(cal.report)}, {"label", lab}, {"train", tr}, {"eval", ev}};
}

}  // namespace calibforge
