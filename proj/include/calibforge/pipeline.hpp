#pragma once

#include "calibforge/calibration.hpp"
#include "calibforge/config.hpp"
#include "calibforge/labeling.hpp"
#include "calibforge/metrics.hpp"
#include "calibforge/phantom.hpp"
#include "calibforge/regressor.hpp"
#include "calibforge/serialization.hpp"

#include <filesystem>
#include <functional>
#include <string>

namespace calibforge {

// Sub-seed derivation: every stage seeds from derive_seed(root, <name>).
namespace stage {
inline constexpr const char* kFrames = "simulate.frames";
inline constexpr const char* kDepthNoise = "simulate.depth";
inline constexpr const char* kPairs = "simulate.pairs";
inline constexpr const char* kClicks = "simulate.clicks";
inline constexpr const char* kCalibrationSplit = "calibrate.split";
inline constexpr const char* kTrainSplit = "train.split";
inline constexpr const char* kTrainInit = "train.init";
inline constexpr const char* kTrainShuffle = "train.shuffle";
}  // namespace stage

using LogFn = std::function<void(const std::string&)>;

AcquisitionConfig acquisition_config(const PipelineConfig& cfg);
Intrinsics pipeline_intrinsics(const PipelineConfig& cfg);

/// Renders cfg.n_frames frames plus calibration pose pairs and a simulated
/// reference annotation. Layout of out_dir:
///   intrinsics.json, frames.jsonl, ground_truth.jsonl, pairs.json,
///   annotation.json, frames/<index>_rgb.ppm, frames/<index>_depth.pfm
Json run_simulate(const PipelineConfig& cfg, const std::filesystem::path& out_dir, const LogFn& log = {});

struct CalibrationOutcome {
    HandEyeSolution solution;
    CalibrationErrorReport report;
};

CalibrationOutcome run_calibrate(const std::vector<PosePair>& pairs, std::size_t n_calibration, std::uint64_t seed,
                                 double translation_row_weight = 1.0);

struct LabelOptions {
    int margin_u = kDefaultCropMarginU;
    int margin_v = kDefaultCropMarginV;
};

/// Propagates the annotation through every frame of a simulate directory and
/// exports the cropped dataset to out_dir. When ground_truth.jsonl is present
/// visibility is copied from it and label_errors.json compares against it.
Json run_label(const std::filesystem::path& frames_dir, const ReferenceAnnotation& annotation,
               const HandEyeSolution& calibration, const std::filesystem::path& out_dir, const LabelOptions& opts,
               const LogFn& log = {});

struct TrainOptions {
    ModelConfig model;
    TrainConfig train;
    double val_fraction = 0.1;
    std::uint64_t seed = 0;
};

/// Trains on a manifest and writes the model file, <model>.log.jsonl and <model>.split.json.
Json run_train(const std::filesystem::path& manifest_path, const TrainOptions& opts,
               const std::filesystem::path& model_path, const LogFn& log = {});

/// One JSON line per manifest record, always with all electrodes.
void run_predict(const std::filesystem::path& model_path, const std::filesystem::path& manifest_path,
                 const std::filesystem::path& out_path);

/// Reads "labels2d"/"labels3d" arrays from two JSON-lines files. An empty
/// label_key picks whichever key the prediction file carries.
Json run_eval(const std::filesystem::path& pred_path, const std::filesystem::path& target_path,
              const std::string& label_key = {}, MaeConvention convention = MaeConvention::Euclidean);

Json regression_report_to_json(const RegressionReport& r);

/// simulate → calibrate → label → train → predict → eval under one directory.
Json run_pipeline(const PipelineConfig& cfg, const std::filesystem::path& out_dir, const LogFn& log = {});

}  // namespace calibforge
