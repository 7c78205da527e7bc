#pragma once

#include <Eigen/Core>
#include <Eigen/LU>

#include <cstdint>

namespace calibforge {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;

// Tolerance for orthonormality / determinant checks on in-memory rotations.
inline constexpr double kRotationTolerance = 1e-9;

/// Proper rotation stored as a 3x3 matrix.
///
/// Construction from an arbitrary matrix validates mᵀm = I and det(m) = +1
/// entrywise to kRotationTolerance and throws InputError otherwise. Results
/// of compose/invert/nearest_orthogonal skip the check.
class Rotation {
public:
    struct Trusted {};

    Rotation() : m_(Mat3::Identity()) {}
    explicit Rotation(const Mat3& m, double tolerance = kRotationTolerance);
    Rotation(const Mat3& m, Trusted) : m_(m) {}

    static Rotation identity() { return {}; }
    static bool is_valid(const Mat3& m, double tolerance = kRotationTolerance);

    const Mat3& matrix() const { return m_; }
    double operator()(int r, int c) const { return m_(r, c); }

    Rotation operator*(const Rotation& o) const { return {m_ * o.m_, Trusted{}}; }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }
    Rotation transpose() const { return {m_.transpose(), Trusted{}}; }

private:
    Mat3 m_;
};

/// SE(3) element: x ↦ R·x + t, translation in meters.
struct RigidTransform {
    Rotation rotation;
    Vec3 translation = Vec3::Zero();

    static RigidTransform identity() { return {}; }
    static RigidTransform from_translation(const Vec3& t) { return {Rotation{}, t}; }

    Mat4 matrix() const;
};

struct NoiseParams {
    double sigma_t = 0.0;  // meters, per axis
    double sigma_r = 0.0;  // radians, rotation angle

    void validate() const;
};

/// a ∘ b: applies b first, then a.
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& t);
Vec3 transform_point(const RigidTransform& t, const Vec3& p);

inline RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) { return compose(a, b); }
inline Vec3 operator*(const RigidTransform& t, const Vec3& p) { return transform_point(t, p); }

/// Rodrigues rotation about a unit axis. Throws InputError when |axis| differs from 1 by more than 1e-9.
RigidTransform from_axis_angle(const Vec3& axis, double angle, const Vec3& translation = Vec3::Zero());
Rotation rotation_from_axis_angle(const Vec3& axis, double angle);

/// Orthogonal polar factor of m, forced to det +1 when m has negative determinant.
/// Throws NumericError when m is singular.
Rotation nearest_orthogonal(const Mat3& m);

/// Angle of the relative rotation aᵀb in [0, π].
double rotation_angle(const Rotation& r);
double rotation_angle_between(const Rotation& a, const Rotation& b);

/// Adds per-axis Gaussian(0, sigma_t) to the translation and right-multiplies the rotation by
/// a rotation of Gaussian(0, sigma_r) angle about a uniformly random axis. Deterministic in seed.
RigidTransform perturb(const RigidTransform& t, const NoiseParams& noise, std::uint64_t rng_seed);

}  // namespace calibforge
