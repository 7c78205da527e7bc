#include "calibforge/labeling.hpp"

#include "calibforge/error.hpp"
#include "calibforge/image_io.hpp"
#include "calibforge/serialization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <random>

namespace calibforge {
namespace {

int round_half_up(double x) { return static_cast<int>(std::floor(x + 0.5)); }

// Depth at a possibly fractional pixel. Falls back to the nearest pixel when
// any bilinear neighbor has no return. Returns 0 when no depth is available.
double sample_depth(const DepthImage& depth, double u, double v) {
    const int u0 = static_cast<int>(std::floor(u));
    const int v0 = static_cast<int>(std::floor(v));
    const double fu = u - u0;
    const double fv = v - v0;
    if (fu == 0.0 && fv == 0.0) return depth.at(u0, v0);
    const int u1 = std::min(u0 + 1, depth.width - 1);
    const int v1 = std::min(v0 + 1, depth.height - 1);
    const double d00 = depth.at(u0, v0), d10 = depth.at(u1, v0);
    const double d01 = depth.at(u0, v1), d11 = depth.at(u1, v1);
    if (d00 > 0.0 && d10 > 0.0 && d01 > 0.0 && d11 > 0.0)
        return (1 - fv) * ((1 - fu) * d00 + fu * d10) + fv * ((1 - fu) * d01 + fu * d11);
    return depth.at(std::min(round_half_up(u), depth.width - 1), std::min(round_half_up(v), depth.height - 1));
}

std::string frame_stem(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%06zu", index);
    return buf;
}

}  // namespace

std::vector<Vec3> ElectrodeInEndeffector::positions() const {
    std::vector<Vec3> out;
    out.reserve(poses.size());
    for (const auto& p : poses) out.push_back(p.translation);
    return out;
}

std::vector<RigidTransform> annotate_reference(const RgbdFrame& frame, const ReferenceAnnotation& ann) {
    std::vector<RigidTransform> poses;
    poses.reserve(ann.clicks.size());
    for (std::size_t i = 0; i < ann.clicks.size(); ++i) {
        const PixelCoord& c = ann.clicks[i];
        if (!frame.intrinsics.contains(c.u, c.v))
            throw InputError("annotate_reference: click for electrode " + std::to_string(i) + " is outside the image");
        const double d = sample_depth(frame.depth, c.u, c.v);
        if (!(d > 0.0))
            throw InputError("annotate_reference: electrode " + std::to_string(i) + " clicked on a pixel without depth");
        poses.push_back(RigidTransform::from_translation(unproject(frame.intrinsics, c.u, c.v, d)));
    }
    return poses;
}

ElectrodeInEndeffector lift_to_endeffector(const RigidTransform& ref_ef_pose, const RigidTransform& calib_y,
                                           const std::vector<RigidTransform>& electrode_poses) {
    const RigidTransform ef_from_camera = invert(ref_ef_pose) * calib_y;
    ElectrodeInEndeffector out;
    out.poses.reserve(electrode_poses.size());
    // The composed rotation is R_EFᵀ·R_K, not the identity; only the position is a label.
    for (const auto& e : electrode_poses)
        out.poses.push_back(RigidTransform::from_translation((ef_from_camera * e).translation));
    return out;
}

std::vector<Vec3> propagate(const ElectrodeInEndeffector& in_ef, const RigidTransform& ef_pose_j,
                            const RigidTransform& calib_y) {
    const RigidTransform camera_from_ef = invert(calib_y) * ef_pose_j;
    std::vector<Vec3> out;
    out.reserve(in_ef.poses.size());
    for (const auto& e : in_ef.poses) out.push_back((camera_from_ef * e).translation);
    return out;
}

std::vector<Pixel> pixel_labels(const std::vector<Vec3>& positions, const PointCloud& cloud, const Intrinsics& intr) {
    std::vector<Pixel> out;
    out.reserve(positions.size());
    for (const auto& p : positions) {
        const NearestHit hit = nearest_point(cloud, p);
        const PixelCoord px = project(intr, hit.xyz);
        out.push_back({round_half_up(px.u), round_half_up(px.v)});
    }
    return out;
}

std::vector<Pixel> pixel_labels(const std::vector<Vec3>& positions, const RgbdFrame& frame) {
    return pixel_labels(positions, to_point_cloud(frame), frame.intrinsics);
}

CropRect compute_crop(const std::vector<std::vector<Pixel>>& all_pixel_labels, int margin_u, int margin_v,
                      int image_width, int image_height) {
    if (margin_u < 0 || margin_v < 0) throw InputError("compute_crop: margins must be non-negative");
    int umin = std::numeric_limits<int>::max(), vmin = umin;
    int umax = std::numeric_limits<int>::min(), vmax = umax;
    for (const auto& frame : all_pixel_labels) {
        for (const auto& p : frame) {
            umin = std::min(umin, p[0]);
            umax = std::max(umax, p[0]);
            vmin = std::min(vmin, p[1]);
            vmax = std::max(vmax, p[1]);
        }
    }
    if (umin > umax) throw InputError("compute_crop: no labels");
    const int u0 = std::max(0, umin - margin_u);
    const int v0 = std::max(0, vmin - margin_v);
    const int u1 = std::min(image_width - 1, umax + margin_u);
    const int v1 = std::min(image_height - 1, vmax + margin_v);
    if (u1 < u0 || v1 < v0) throw InputError("compute_crop: labels lie outside the image");
    return {u0, v0, u1 - u0 + 1, v1 - v0 + 1};
}

constexpr int kMaxClickDraws = 64;

ReferenceAnnotation simulate_clicks(const GroundTruthFrame& gt, std::size_t frame_index, double noise_px,
                                    std::uint64_t rng_seed) {
    if (!(noise_px >= 0.0)) throw InputError("simulate_clicks: noise must be non-negative");
    const Intrinsics& k = gt.frame.intrinsics;
    ReferenceAnnotation ann;
    ann.frame_index = frame_index;
    std::mt19937_64 rng(rng_seed);
    std::uniform_real_distribution<double> jitter(-noise_px, noise_px);
    for (const auto& px : gt.electrode_pixels) {
        if (noise_px == 0.0) {
            ann.clicks.push_back(px);
            continue;
        }
        // An annotator clicks on the head: draws that miss the depth map are redrawn.
        PixelCoord click{std::clamp<double>(round_half_up(px.u), 0, k.width - 1),
                         std::clamp<double>(round_half_up(px.v), 0, k.height - 1)};
        for (int attempt = 0; attempt < kMaxClickDraws; ++attempt) {
            const double u = std::clamp<double>(round_half_up(px.u + jitter(rng)), 0, k.width - 1);
            const double v = std::clamp<double>(round_half_up(px.v + jitter(rng)), 0, k.height - 1);
            if (gt.frame.depth.at(static_cast<int>(u), static_cast<int>(v)) > 0.0f) {
                click = {u, v};
                break;
            }
        }
        ann.clicks.push_back(click);
    }
    return ann;
}

DatasetWriter::DatasetWriter(std::filesystem::path out_dir, CropRect crop, std::size_t electrode_count)
    : dir_(std::move(out_dir)), crop_(crop), electrode_count_(electrode_count) {
    std::error_code ec;
    std::filesystem::create_directories(dir_ / "images", ec);
    if (ec) throw IoError((dir_ / "images").string(), ec.message());
    const auto manifest_path = dir_ / "manifest.jsonl";
    manifest_.open(manifest_path);
    if (!manifest_) throw IoError(manifest_path.string(), "cannot open for writing");
    result_.directory = dir_;
    result_.crop = crop_;
    result_.electrode_count = electrode_count_;
}

void DatasetWriter::add(const RgbdFrame& frame, const LabeledFrame& labels) {
    if (labels.positions_3d.size() != electrode_count_ || labels.pixels_2d.size() != electrode_count_ ||
        labels.visibility.size() != electrode_count_)
        throw InputError("export_dataset: frame " + std::to_string(labels.frame_index) + " has the wrong label count");

    ManifestRecord rec;
    const std::string stem = frame_stem(labels.frame_index);
    rec.rgb = "images/" + stem + "_rgb.ppm";
    rec.depth = "images/" + stem + "_depth.pfm";
    write_ppm((dir_ / rec.rgb).string(), crop(frame.rgb, crop_.u0, crop_.v0, crop_.width, crop_.height));
    write_pfm((dir_ / rec.depth).string(), crop(frame.depth, crop_.u0, crop_.v0, crop_.width, crop_.height));
    rec.ef_pose = frame.endeffector_pose;
    rec.labels3d = labels.positions_3d;
    rec.visible = labels.visibility;
    for (const auto& p : labels.pixels_2d) rec.labels2d.push_back({p[0] - crop_.u0, p[1] - crop_.v0});

    manifest_ << manifest_record_to_json(rec).dump() << "\n";
    if (!manifest_) throw IoError((dir_ / "manifest.jsonl").string(), "write failed");
    result_.records.push_back(std::move(rec));
}

DatasetManifest DatasetWriter::finish() {
    if (result_.records.empty()) throw InputError("export_dataset: no frames to export");
    manifest_.close();
    if (!manifest_) throw IoError((dir_ / "manifest.jsonl").string(), "close failed");
    write_json_file(dir_ / "dataset.json",
                    {{"crop", crop_to_json(crop_)}, {"electrode_count", electrode_count_}, {"frames", result_.records.size()}});
    return result_;
}

DatasetManifest export_dataset(const std::vector<RgbdFrame>& frames, const std::vector<LabeledFrame>& labels,
                               const CropRect& crop, const std::filesystem::path& out_dir) {
    if (frames.empty()) throw InputError("export_dataset: no frames to export");
    if (frames.size() != labels.size()) throw InputError("export_dataset: frame and label counts differ");
    DatasetWriter writer(out_dir, crop, labels.front().positions_3d.size());
    for (std::size_t i = 0; i < frames.size(); ++i) writer.add(frames[i], labels[i]);
    return writer.finish();
}

DatasetManifest read_manifest(const std::filesystem::path& manifest_path) {
    DatasetManifest m;
    m.directory = manifest_path.parent_path();
    for (const auto& line : read_json_lines(manifest_path)) {
        try {
            m.records.push_back(manifest_record_from_json(line));
        } catch (const InputError& e) {
            throw IoError(manifest_path.string(), "record " + std::to_string(m.records.size()) + ": " + e.what());
        }
    }
    if (m.records.empty()) throw IoError(manifest_path.string(), "manifest has no records");
    m.electrode_count = m.records.front().labels3d.size();
    const auto meta_path = m.directory / "dataset.json";
    if (std::filesystem::exists(meta_path)) {
        const Json meta = read_json_file(meta_path);
        m.crop = crop_from_json(meta.at("crop"));
    }
    for (const auto& r : m.records)
        if (r.labels3d.size() != m.electrode_count)
            throw IoError(manifest_path.string(), "records disagree on the electrode count");
    return m;
}

}  // namespace calibforge
