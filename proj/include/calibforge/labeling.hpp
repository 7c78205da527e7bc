#pragma once

#include "calibforge/camera.hpp"
#include "calibforge/geometry.hpp"
#include "calibforge/phantom.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace calibforge {

using Pixel = std::array<int, 2>;

/// Electrode clicks in one reference frame, in fixed electrode order.
/// Clicks may be sub-pixel; integer clicks sample the depth map directly,
/// fractional ones interpolate it bilinearly.
struct ReferenceAnnotation {
    std::size_t frame_index = 0;
    std::vector<PixelCoord> clicks;
};

/// Electrode poses relative to the endeffector (^EF T_EL_i). Only the
/// translations are carried; every rotation is the identity.
struct ElectrodeInEndeffector {
    std::vector<RigidTransform> poses;

    std::vector<Vec3> positions() const;
};

struct LabeledFrame {
    std::size_t frame_index = 0;
    std::vector<Vec3> positions_3d;  // camera frame, meters
    std::vector<Pixel> pixels_2d;    // full-image pixels
    std::vector<bool> visibility;
};

struct CropRect {
    int u0 = 0;
    int v0 = 0;
    int width = 0;
    int height = 0;

    bool contains(const Pixel& p) const {
        return p[0] >= u0 && p[1] >= v0 && p[0] < u0 + width && p[1] < v0 + height;
    }
};

// Margins that turn a 200x200 px label extent into a 271x255 crop.
inline constexpr int kDefaultCropMarginU = 35;
inline constexpr int kDefaultCropMarginV = 27;

struct ManifestRecord {
    std::string rgb;    // relative to the manifest directory
    std::string depth;
    RigidTransform ef_pose;
    std::vector<Vec3> labels3d;
    std::vector<Pixel> labels2d;  // crop coordinates
    std::vector<bool> visible;
};

struct DatasetManifest {
    std::filesystem::path directory;
    CropRect crop;
    std::size_t electrode_count = 0;
    std::vector<ManifestRecord> records;

    std::filesystem::path resolve(const std::string& relative) const { return directory / relative; }
};

/// Identity-rotation electrode poses ^K T_EL_i from the clicked pixels.
/// Throws InputError naming the electrode when a click is outside the image
/// or lands on invalid depth.
std::vector<RigidTransform> annotate_reference(const RgbdFrame& frame, const ReferenceAnnotation& ann);

/// ^EF T_EL_i = (^R T_EF)⁻¹ · ^R T_K · ^K T_EL_i, keeping the translations.
ElectrodeInEndeffector lift_to_endeffector(const RigidTransform& ref_ef_pose, const RigidTransform& calib_y,
                                           const std::vector<RigidTransform>& electrode_poses);

/// Translations of ^K T_EL_i^j = (^R T_K)⁻¹ · ^R T_EF^j · ^EF T_EL_i.
std::vector<Vec3> propagate(const ElectrodeInEndeffector& in_ef, const RigidTransform& ef_pose_j,
                            const RigidTransform& calib_y);

/// Nearest cloud point, projected and rounded half-up. Throws InputError when
/// the frame has no valid depth.
std::vector<Pixel> pixel_labels(const std::vector<Vec3>& positions, const RgbdFrame& frame);
std::vector<Pixel> pixel_labels(const std::vector<Vec3>& positions, const PointCloud& cloud, const Intrinsics& intr);

/// Label bounding box grown by the margins and clipped to the image.
CropRect compute_crop(const std::vector<std::vector<Pixel>>& all_pixel_labels, int margin_u, int margin_v,
                      int image_width, int image_height);

/// Exact projections of the ground truth as clicks, or, with noise_px > 0,
/// the projections offset by uniform ±noise_px per axis and rounded to whole
/// pixels (clamped to the image). Noisy draws that land on invalid depth are
/// redrawn; after 64 misses the rounded exact projection is used.
ReferenceAnnotation simulate_clicks(const GroundTruthFrame& gt, std::size_t frame_index, double noise_px,
                                    std::uint64_t rng_seed);

/// Writes cropped images plus manifest.jsonl and dataset.json into a directory, one frame at a time.
class DatasetWriter {
public:
    DatasetWriter(std::filesystem::path out_dir, CropRect crop, std::size_t electrode_count);

    void add(const RgbdFrame& frame, const LabeledFrame& labels);
    DatasetManifest finish();

private:
    std::filesystem::path dir_;
    CropRect crop_;
    std::size_t electrode_count_;
    std::ofstream manifest_;
    DatasetManifest result_;
};

DatasetManifest export_dataset(const std::vector<RgbdFrame>& frames, const std::vector<LabeledFrame>& labels,
                               const CropRect& crop, const std::filesystem::path& out_dir);

/// Reads manifest.jsonl; crop and electrode count come from dataset.json next to it when present.
DatasetManifest read_manifest(const std::filesystem::path& manifest_path);

}  // namespace calibforge
