#include "calibforge/phantom.hpp"

#include "calibforge/error.hpp"
#include "calibforge/rng.hpp"

#include <cmath>
#include <numbers>
#include <random>
#include <string>

namespace calibforge {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

// (polar, azimuth) in degrees: vertex, an inner ring of four and an outer ring of three.
constexpr std::array<std::array<double, 2>, 8> kElectrodeAngles{{
    {0.0, 0.0},
    {35.0, 0.0},
    {35.0, 90.0},
    {35.0, 180.0},
    {35.0, 270.0},
    {65.0, 45.0},
    {65.0, 160.0},
    {65.0, 290.0},
}};

Rotation euler_zyx(double gamma, double beta, double alpha) {
    return rotation_from_axis_angle(Vec3::UnitZ(), gamma) * rotation_from_axis_angle(Vec3::UnitY(), beta) *
           rotation_from_axis_angle(Vec3::UnitX(), alpha);
}

}  // namespace

void HeadPhantom::validate() const {
    if (!(semi_axes.minCoeff() > 0.0)) throw InputError("phantom: semi-axes must be positive");
    if (electrodes.empty()) throw InputError("phantom: need at least one electrode");
    if (!(electrode_radius > 0.0)) throw InputError("phantom: electrode radius must be positive");
    for (std::size_t i = 0; i < electrodes.size(); ++i) {
        const double f = electrodes[i].cwiseQuotient(semi_axes).squaredNorm();
        if (std::abs(f - 1.0) > 1e-9)
            throw InputError("phantom: electrode " + std::to_string(i) + " is not on the ellipsoid surface");
    }
}

Vec3 HeadPhantom::normal_at(const Vec3& p) const {
    return p.cwiseQuotient(semi_axes.cwiseProduct(semi_axes));
}

Vec3 ellipsoid_point(const Vec3& semi_axes, double polar, double azimuth) {
    return {semi_axes.x() * std::sin(polar) * std::cos(azimuth), semi_axes.y() * std::sin(polar) * std::sin(azimuth),
            semi_axes.z() * std::cos(polar)};
}

RigidTransform default_camera_in_robot() {
    // Optical axis along robot −x, image rows along robot −z, tilted 0.2 rad about the camera x axis.
    Mat3 r;
    r << 0.0, 0.0, -1.0,
         1.0, 0.0, 0.0,
         0.0, -1.0, 0.0;
    const Rotation base(r);
    return {base * rotation_from_axis_angle(Vec3::UnitX(), 0.2), Vec3(1.2, 0.0, 0.5)};
}

RigidTransform default_marker_to_ef() {
    return from_axis_angle(Vec3(1.0, 2.0, -1.0).normalized(), 0.3, Vec3(0.02, -0.03, 0.08));
}

HeadPhantom default_phantom() {
    HeadPhantom p;
    p.semi_axes = Vec3(0.08, 0.10, 0.11);
    for (const auto& a : kElectrodeAngles) p.electrodes.push_back(ellipsoid_point(p.semi_axes, a[0] * kDeg, a[1] * kDeg));
    p.electrode_radius = 0.005;
    p.head_to_ef = RigidTransform::from_translation(Vec3(0.0, 0.0, 0.12));
    return p;
}

void AcquisitionConfig::validate() const {
    if (n_frames < 1) throw InputError("acquisition: n_frames must be at least 1");
    if (!(workspace_extent.minCoeff() >= 0.0)) throw InputError("acquisition: workspace extents must be non-negative");
    if (!(rotation_range.minCoeff() >= 0.0)) throw InputError("acquisition: rotation ranges must be non-negative");
    if (!(depth_noise_sigma >= 0.0)) throw InputError("acquisition: depth noise must be non-negative");
    if (!(depth_quantization >= 0.0)) throw InputError("acquisition: depth quantization must be non-negative");
}

std::vector<RigidTransform> sample_poses(const AcquisitionConfig& cfg) {
    cfg.validate();
    std::mt19937_64 rng(cfg.rng_seed);
    std::uniform_real_distribution<double> unit(-0.5, 0.5);
    std::vector<RigidTransform> poses;
    poses.reserve(cfg.n_frames);
    for (std::size_t i = 0; i < cfg.n_frames; ++i) {
        Vec3 offset;
        for (int k = 0; k < 3; ++k) offset(k) = unit(rng) * cfg.workspace_extent(k);
        Vec3 angles;
        for (int k = 0; k < 3; ++k) angles(k) = 2.0 * unit(rng) * cfg.rotation_range(k);
        const RigidTransform ef_in_camera{cfg.nominal_orientation * euler_zyx(angles(2), angles(1), angles(0)),
                                          cfg.workspace_center + offset};
        poses.push_back(cfg.camera_in_robot * ef_in_camera);
    }
    return poses;
}

std::vector<Vec3> electrode_positions_camera(const HeadPhantom& phantom, const RigidTransform& ef_pose,
                                             const RigidTransform& camera_in_robot) {
    const RigidTransform camera_from_head = invert(camera_in_robot) * ef_pose * phantom.head_to_ef;
    std::vector<Vec3> out;
    out.reserve(phantom.electrodes.size());
    for (const auto& e : phantom.electrodes) out.push_back(camera_from_head * e);
    return out;
}

double min_view_cosine(const HeadPhantom& phantom, const RigidTransform& ef_pose, const RigidTransform& camera_in_robot) {
    const RigidTransform camera_from_head = invert(camera_in_robot) * ef_pose * phantom.head_to_ef;
    double worst = 1.0;
    for (const auto& e : phantom.electrodes) {
        const Vec3 p = camera_from_head * e;
        const Vec3 n = (camera_from_head.rotation * phantom.normal_at(e)).normalized();
        worst = std::min(worst, -n.dot(p.normalized()));
    }
    return worst;
}

GroundTruthFrame render(const HeadPhantom& phantom, const RigidTransform& ef_pose, const AcquisitionConfig& cfg,
                        const Intrinsics& intr, std::size_t frame_index) {
    phantom.validate();
    cfg.validate();
    intr.validate();

    const RigidTransform camera_from_head = invert(cfg.camera_in_robot) * ef_pose * phantom.head_to_ef;
    const RigidTransform head_from_camera = invert(camera_from_head);
    const Vec3 inv_axes = phantom.semi_axes.cwiseInverse();
    const Vec3 origin = head_from_camera.translation;  // camera center, phantom frame
    const Vec3 origin_s = origin.cwiseProduct(inv_axes);
    const double c_term = origin_s.squaredNorm() - 1.0;
    const double r2 = phantom.electrode_radius * phantom.electrode_radius;
    const std::uint64_t frame_seed = mix_seeds(cfg.rng_seed, frame_index);

    GroundTruthFrame gt;
    RgbdFrame& frame = gt.frame;
    frame.intrinsics = intr;
    frame.endeffector_pose = ef_pose;
    frame.depth = DepthImage(intr.width, intr.height);
    frame.rgb = RgbImage(intr.width, intr.height);

    for (int v = 0; v < intr.height; ++v) {
        for (int u = 0; u < intr.width; ++u) {
            const Vec3 ray_cam((u - intr.cx) / intr.fx, (v - intr.cy) / intr.fy, 1.0);
            const Vec3 dir = head_from_camera.rotation * ray_cam;
            const Vec3 dir_s = dir.cwiseProduct(inv_axes);
            const double a = dir_s.squaredNorm();
            const double b = origin_s.dot(dir_s);
            const double disc = b * b - a * c_term;
            RgbColor color = kBackgroundColor;
            if (disc >= 0.0) {
                const double t = (-b - std::sqrt(disc)) / a;
                if (t > 0.0) {
                    // The ray has unit z in the camera frame, so t is the depth.
                    double depth = t;
                    if (cfg.depth_noise_sigma > 0.0) {
                        const std::size_t pixel = static_cast<std::size_t>(v) * intr.width + u;
                        SplitMix64 gen(mix_seeds(frame_seed, pixel));
                        std::normal_distribution<double> gauss(0.0, cfg.depth_noise_sigma);
                        depth += gauss(gen);
                    }
                    if (cfg.depth_quantization > 0.0) depth = std::round(depth / cfg.depth_quantization) * cfg.depth_quantization;
                    frame.depth.at(u, v) = static_cast<float>(std::max(depth, 0.0));

                    const Vec3 hit = origin + t * dir;
                    color = kCapColor;
                    for (const auto& e : phantom.electrodes) {
                        if ((hit - e).squaredNorm() <= r2) {
                            color = kElectrodeColor;
                            break;
                        }
                    }
                }
            }
            std::uint8_t* px = frame.rgb.pixel(u, v);
            px[0] = color.r;
            px[1] = color.g;
            px[2] = color.b;
        }
    }

    const std::size_t n = phantom.electrodes.size();
    gt.electrode_positions_camera.reserve(n);
    gt.electrode_pixels.reserve(n);
    gt.visibility.reserve(n);
    for (const auto& e : phantom.electrodes) {
        const Vec3 p = camera_from_head * e;
        gt.electrode_positions_camera.push_back(p);
        if (!(p.z() > 0.0)) {
            gt.electrode_pixels.push_back({-1.0, -1.0});
            gt.visibility.push_back(false);
            continue;
        }
        const PixelCoord px = project(intr, p);
        gt.electrode_pixels.push_back(px);
        const Vec3 normal = camera_from_head.rotation * phantom.normal_at(e);
        bool visible = normal.dot(p) < 0.0 && intr.contains(px.u, px.v);
        if (visible) {
            const int iu = static_cast<int>(std::floor(px.u + 0.5));
            const int iv = static_cast<int>(std::floor(px.v + 0.5));
            const double d = frame.depth.at(iu, iv);
            visible = d > 0.0 && std::abs(d - p.z()) <= kVisibilityDepthTolerance;
        }
        gt.visibility.push_back(visible);
    }
    return gt;
}

std::vector<PosePair> simulate_pose_pairs(const AcquisitionConfig& cfg, const RigidTransform& marker_to_ef,
                                          const NoiseParams& noise) {
    const std::vector<RigidTransform> robot = sample_poses(cfg);
    const RigidTransform camera_from_robot = invert(cfg.camera_in_robot);
    const std::uint64_t noise_seed = derive_seed(cfg.rng_seed, "marker-noise");
    std::vector<PosePair> pairs;
    pairs.reserve(robot.size());
    for (std::size_t i = 0; i < robot.size(); ++i) {
        const RigidTransform exact = camera_from_robot * robot[i] * marker_to_ef;
        pairs.push_back({robot[i], perturb(exact, noise, mix_seeds(noise_seed, i))});
    }
    return pairs;
}

}  // namespace calibforge
