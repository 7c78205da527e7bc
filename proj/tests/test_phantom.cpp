#include "calibforge/error.hpp"
#include "calibforge/phantom.hpp"
#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

using namespace calibforge;

namespace {

// Endeffector pose that puts the phantom origin at `center` (camera frame)
// with the given head orientation.
RigidTransform ef_for_head(const HeadPhantom& ph, const AcquisitionConfig& cfg, const Rotation& head_rot,
                           const Vec3& center) {
    const RigidTransform camera_from_head{head_rot, center};
    return cfg.camera_in_robot * camera_from_head * invert(ph.head_to_ef);
}

}  // namespace

TEST_CASE("default phantom") {
    const HeadPhantom p = default_phantom();
    CHECK_NOTHROW(p.validate());
    CHECK(p.electrode_count() == 8);
    CHECK(p.semi_axes == Vec3(0.08, 0.10, 0.11));
    CHECK(p.electrode_radius == 0.005);
    for (std::size_t i = 0; i < 8; ++i)
        for (std::size_t j = i + 1; j < 8; ++j) CHECK((p.electrodes[i] - p.electrodes[j]).norm() >= 2 * p.electrode_radius);
    for (const auto& e : p.electrodes) CHECK(e.z() >= 0.0);
    HeadPhantom bad = p;
    bad.electrodes[0] *= 1.01;
    CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("sphere on the optical axis: center depth is analytic") {
    HeadPhantom sphere = default_phantom();
    sphere.semi_axes = Vec3(0.1, 0.1, 0.1);
    sphere.electrodes = {Vec3(0, 0, 0.1)};
    AcquisitionConfig cfg;
    cfg.depth_quantization = 0.0;
    const Intrinsics k = Intrinsics::make_default();
    const RigidTransform ef = ef_for_head(sphere, cfg, Rotation(Mat3(Eigen::Vector3d(1, -1, -1).asDiagonal())), Vec3(0, 0, 1.0));
    const GroundTruthFrame gt = render(sphere, ef, cfg, k);
    CHECK(gt.frame.depth.at(static_cast<int>(k.cx), static_cast<int>(k.cy)) == 0.9f);
    CHECK(gt.frame.depth.at(0, 0) == 0.0f);
    // The electrode sits at the front pole.
    CHECK(gt.visibility[0]);
    const std::uint8_t* px = gt.frame.rgb.pixel(static_cast<int>(k.cx), static_cast<int>(k.cy));
    CHECK(px[0] == kElectrodeColor.r);
    const std::uint8_t* corner = gt.frame.rgb.pixel(0, 0);
    CHECK(corner[2] == kBackgroundColor.b);
}

TEST_CASE("rendered depth lies on the ellipsoid") {
    const HeadPhantom ph = default_phantom();
    AcquisitionConfig cfg;
    cfg.n_frames = 3;
    cfg.rng_seed = 21;
    const Intrinsics k = Intrinsics::make_default();
    const auto poses = sample_poses(cfg);
    for (std::size_t f = 0; f < poses.size(); ++f) {
        const GroundTruthFrame gt = render(ph, poses[f], cfg, k, f);
        const RigidTransform head_from_camera = invert(invert(cfg.camera_in_robot) * poses[f] * ph.head_to_ef);
        std::size_t checked = 0;
        for (int v = 0; v < k.height; v += 3) {
            for (int u = 0; u < k.width; u += 3) {
                const double d = gt.frame.depth.at(u, v);
                if (d <= 0.0) continue;
                const Vec3 ray((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0);
                const Vec3 p = head_from_camera * (d * ray);
                const Vec3 s = p.cwiseQuotient(ph.semi_axes);
                const Vec3 grad = 2.0 * p.cwiseQuotient(ph.semi_axes.cwiseProduct(ph.semi_axes));
                // Half a quantization step plus float32 rounding along the ray, to first order.
                const double slack = (0.5 * cfg.depth_quantization + 1e-6) * ray.norm();
                CHECK(std::abs(s.squaredNorm() - 1.0) <= grad.norm() * slack * 1.01 + 1e-9);
                ++checked;
            }
        }
        CHECK(checked > 100);
    }
}

TEST_CASE("ground truth consistency and rigid attachment") {
    const HeadPhantom ph = default_phantom();
    AcquisitionConfig cfg;
    cfg.n_frames = 5;
    cfg.rng_seed = 3;
    const Intrinsics k = Intrinsics::make_default();
    const auto poses = sample_poses(cfg);
    std::vector<GroundTruthFrame> frames;
    for (std::size_t f = 0; f < poses.size(); ++f) frames.push_back(render(ph, poses[f], cfg, k, f));
    for (const auto& gt : frames) {
        for (std::size_t e = 0; e < 8; ++e) {
            const PixelCoord p = project(k, gt.electrode_positions_camera[e]);
            CHECK(std::abs(p.u - gt.electrode_pixels[e].u) < 1e-9);
            CHECK(std::abs(p.v - gt.electrode_pixels[e].v) < 1e-9);
            if (gt.visibility[e]) CHECK(k.contains(p.u, p.v));
        }
    }
    // Electrodes expressed in the endeffector frame do not move between frames.
    for (std::size_t j = 1; j < frames.size(); ++j) {
        for (std::size_t e = 0; e < 8; ++e) {
            const Vec3 a = invert(poses[0]) * (cfg.camera_in_robot * frames[0].electrode_positions_camera[e]);
            const Vec3 b = invert(poses[j]) * (cfg.camera_in_robot * frames[j].electrode_positions_camera[e]);
            CHECK((a - b).norm() < 1e-12);
        }
    }
}

TEST_CASE("an electrode on the far side is invisible but still positioned") {
    const HeadPhantom ph = default_phantom();
    AcquisitionConfig cfg;
    const Intrinsics k = Intrinsics::make_default();
    // Head vertex pointing away from the camera.
    const RigidTransform ef = ef_for_head(ph, cfg, Rotation{}, Vec3(0, 0, 1.0));
    const GroundTruthFrame gt = render(ph, ef, cfg, k);
    CHECK_FALSE(gt.visibility[0]);
    CHECK(gt.electrode_positions_camera[0].z() == doctest::Approx(1.11));
    CHECK(min_view_cosine(ph, ef, cfg.camera_in_robot) < 0.0);
    const RigidTransform facing = ef_for_head(ph, cfg, Rotation(Mat3(Eigen::Vector3d(1, -1, -1).asDiagonal())), Vec3(0, 0, 1.0));
    const GroundTruthFrame gt2 = render(ph, facing, cfg, k);
    CHECK(gt2.visibility[0]);
    CHECK(min_view_cosine(ph, facing, cfg.camera_in_robot) > 0.0);
}

TEST_CASE("sample_poses") {
    AcquisitionConfig cfg;
    cfg.n_frames = 1;
    cfg.workspace_extent = Vec3::Zero();
    cfg.rotation_range = Vec3::Zero();
    const auto one = sample_poses(cfg);
    REQUIRE(one.size() == 1);
    const RigidTransform in_camera = invert(cfg.camera_in_robot) * one[0];
    CHECK((in_camera.translation - cfg.workspace_center).norm() < 1e-12);
    CHECK((in_camera.rotation.matrix() - cfg.nominal_orientation.matrix()).norm() < 1e-12);

    AcquisitionConfig many;
    many.n_frames = 10000;
    many.rng_seed = 17;
    const auto poses = sample_poses(many);
    Vec3 mean = Vec3::Zero(), sq = Vec3::Zero();
    for (const auto& p : poses) {
        const Vec3 off = (invert(many.camera_in_robot) * p).translation - many.workspace_center;
        CHECK((off.cwiseAbs() - 0.5 * many.workspace_extent).maxCoeff() <= 1e-12);
        mean += off;
        sq += off.cwiseProduct(off);
    }
    mean /= 10000.0;
    const Vec3 var = sq / 10000.0 - mean.cwiseProduct(mean);
    for (int a = 0; a < 3; ++a) {
        // A uniform variable on an interval of length L has std L/√12.
        const double ratio = std::sqrt(var(a)) / (many.workspace_extent(a) / std::sqrt(12.0));
        CHECK(ratio == doctest::Approx(1.0).epsilon(0.05));
    }
    const auto again = sample_poses(many);
    CHECK(again[123].translation == poses[123].translation);
}

TEST_CASE("rendering is deterministic per frame index") {
    const HeadPhantom ph = default_phantom();
    AcquisitionConfig cfg;
    cfg.n_frames = 2;
    cfg.depth_noise_sigma = 0.002;
    cfg.rng_seed = 5;
    const Intrinsics k = Intrinsics::make_default(160, 120, 110.0);
    const auto poses = sample_poses(cfg);
    const GroundTruthFrame a = render(ph, poses[1], cfg, k, 1);
    const GroundTruthFrame b = render(ph, poses[1], cfg, k, 1);
    const GroundTruthFrame c = render(ph, poses[1], cfg, k, 2);
    CHECK(a.frame.depth.data == b.frame.depth.data);
    CHECK(a.frame.rgb.data == b.frame.rgb.data);
    CHECK(a.frame.depth.data != c.frame.depth.data);
}

TEST_CASE("simulated pose pairs follow the chain") {
    AcquisitionConfig cfg;
    cfg.n_frames = 10;
    const RigidTransform x = default_marker_to_ef();
    const auto pairs = simulate_pose_pairs(cfg, x, {});
    for (const auto& p : pairs) {
        const RigidTransform expect = invert(cfg.camera_in_robot) * p.robot * x;
        CHECK((p.marker.translation - expect.translation).norm() < 1e-12);
    }
}
