#pragma once

#include "calibforge/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <string>

namespace calibforge {

/// Every tunable of the simulate → calibrate → label → train → eval chain.
///
/// Read from a flat `key = value` file (a TOML subset: numbers, booleans,
/// "strings", [number arrays], `#` comments, no tables). Unknown keys are
/// rejected; missing keys keep the defaults below.
struct PipelineConfig {
    std::uint64_t seed = 0;

    // Acquisition / rendering.
    std::size_t n_frames = 300;
    int image_width = 524;
    int image_height = 424;
    double focal_length = 365.0;
    Vec3 workspace_extent{0.5, 0.5, 0.3};
    Vec3 workspace_center{0.0, 0.0, 1.0};
    Vec3 rotation_range_deg{20.0, 20.0, 20.0};
    double depth_noise_sigma = 0.0;
    double depth_quantization = 2.5e-4;

    // Calibration target poses.
    std::size_t n_pairs = 50;
    std::size_t n_calibration = 40;
    Vec3 calibration_rotation_range_deg{30.0, 30.0, 30.0};
    double pose_noise_t = 0.002;
    double pose_noise_r_deg = 0.3;
    double translation_row_weight = 1.0;

    // Labeling. reference_frame < 0 picks, among frames with every electrode visible,
    // the one whose least frontal electrode is seen most head-on.
    long long reference_frame = -1;
    double click_noise_px = 0.0;
    int crop_margin_u = 35;
    int crop_margin_v = 27;

    // Training.
    std::string channels = "rgb";
    std::string labels = "2d";
    int input_size = 64;
    int conv1_channels = 8;
    int conv2_channels = 16;
    int dense_hidden = 64;
    double lr0 = 1e-3;
    std::size_t batch = 10;
    std::size_t epochs = 200;
    std::size_t halve_every = 50;
    double val_fraction = 0.1;

    static PipelineConfig parse(const std::string& text, const std::string& source = "<string>");
    static PipelineConfig from_file(const std::filesystem::path& path);
    std::string to_text() const;
    void validate() const;
};

}  // namespace calibforge
