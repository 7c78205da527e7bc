#pragma once

#include "calibforge/calibration.hpp"
#include "calibforge/camera.hpp"
#include "calibforge/geometry.hpp"

#include <array>
#include <cstdint>
#include <vector>

namespace calibforge {

/// Ellipsoidal head with point electrodes on its surface, all in the phantom frame.
struct HeadPhantom {
    Vec3 semi_axes{0.08, 0.10, 0.11};
    std::vector<Vec3> electrodes;
    double electrode_radius = 0.005;
    RigidTransform head_to_ef;  // phantom frame expressed in the endeffector frame

    void validate() const;
    std::size_t electrode_count() const { return electrodes.size(); }
    /// Outward (unnormalized) surface normal at p.
    Vec3 normal_at(const Vec3& p) const;
};

/// Surface point at polar angle θ (from +z) and azimuth φ: (a·sinθ·cosφ, b·sinθ·sinφ, c·cosθ).
Vec3 ellipsoid_point(const Vec3& semi_axes, double polar, double azimuth);

/// The default camera pose in the robot frame used by the simulator.
RigidTransform default_camera_in_robot();

struct AcquisitionConfig {
    std::size_t n_frames = 100;
    Vec3 workspace_extent{0.5, 0.5, 0.3};  // full box size, meters
    Vec3 workspace_center{0.0, 0.0, 1.0};  // endeffector origin, camera frame
    Vec3 rotation_range{0.35, 0.35, 0.35};  // ± radians about the endeffector x, y, z axes
    // Endeffector orientation in the camera frame before perturbation. The
    // default turns the top of the head toward the camera.
    Rotation nominal_orientation{Rotation(Eigen::Vector3d(1.0, -1.0, -1.0).asDiagonal().toDenseMatrix())};
    RigidTransform camera_in_robot = default_camera_in_robot();  // true ^R T_K
    double depth_noise_sigma = 0.0;     // meters
    double depth_quantization = 2.5e-4;  // meters; 0 disables
    std::uint64_t rng_seed = 0;

    void validate() const;
};

struct RgbColor {
    std::uint8_t r = 0, g = 0, b = 0;
};

inline constexpr RgbColor kBackgroundColor{0, 0, 0};
inline constexpr RgbColor kCapColor{40, 70, 170};
inline constexpr RgbColor kElectrodeColor{235, 235, 235};

// Maximum |rendered depth − electrode z| for an electrode to count as unoccluded.
inline constexpr double kVisibilityDepthTolerance = 0.005;

struct GroundTruthFrame {
    RgbdFrame frame;
    std::vector<Vec3> electrode_positions_camera;
    // Exact continuous projections; (-1, -1) for electrodes behind the camera.
    std::vector<PixelCoord> electrode_pixels;
    std::vector<bool> visibility;
};

HeadPhantom default_phantom();

/// n_frames endeffector poses ^R T_EF. The endeffector origin is uniform in the
/// workspace box (camera frame); its orientation is nominal·Rz(γ)·Ry(β)·Rx(α)
/// with α, β, γ uniform in ±rotation_range.
std::vector<RigidTransform> sample_poses(const AcquisitionConfig& cfg);

/// Ray casts every pixel against the ellipsoid. Depth noise for pixel i of
/// frame f is drawn from a generator seeded with (rng_seed, f, i), so output
/// does not depend on evaluation order.
GroundTruthFrame render(const HeadPhantom& phantom, const RigidTransform& ef_pose, const AcquisitionConfig& cfg,
                        const Intrinsics& intr, std::size_t frame_index = 0);

/// Exact electrode positions in the camera frame for an endeffector pose.
std::vector<Vec3> electrode_positions_camera(const HeadPhantom& phantom, const RigidTransform& ef_pose,
                                             const RigidTransform& camera_in_robot);

/// Smallest cosine between an electrode's outward normal and the direction
/// back to the camera. Near 0 means some electrode is seen edge-on; negative
/// means one faces away.
double min_view_cosine(const HeadPhantom& phantom, const RigidTransform& ef_pose, const RigidTransform& camera_in_robot);

/// Calibration-target observations: robot poses from sample_poses(cfg) and
/// marker_i = perturb(Y⁻¹·robot_i·X, noise).
std::vector<PosePair> simulate_pose_pairs(const AcquisitionConfig& cfg, const RigidTransform& marker_to_ef,
                                          const NoiseParams& noise);

RigidTransform default_marker_to_ef();

}  // namespace calibforge
