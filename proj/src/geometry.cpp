#include "calibforge/geometry.hpp"

#include "calibforge/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

namespace calibforge {

bool Rotation::is_valid(const Mat3& m, double tolerance) {
    if (!m.allFinite()) return false;
    const Mat3 gram = m.transpose() * m - Mat3::Identity();
    if (gram.cwiseAbs().maxCoeff() > tolerance) return false;
    return std::abs(m.determinant() - 1.0) <= tolerance;
}

Rotation::Rotation(const Mat3& m, double tolerance) : m_(m) {
    if (!is_valid(m, tolerance))
        throw InputError("matrix is not a proper rotation (tolerance " + std::to_string(tolerance) + ")");
}

Mat4 RigidTransform::matrix() const {
    Mat4 h = Mat4::Identity();
    h.topLeftCorner<3, 3>() = rotation.matrix();
    h.topRightCorner<3, 1>() = translation;
    return h;
}

void NoiseParams::validate() const {
    if (!(sigma_t >= 0.0) || !(sigma_r >= 0.0))
        throw InputError("noise standard deviations must be non-negative");
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
    return {a.rotation * b.rotation, a.rotation * b.translation + a.translation};
}

RigidTransform invert(const RigidTransform& t) {
    const Rotation rt = t.rotation.transpose();
    return {rt, -(rt * t.translation)};
}

Vec3 transform_point(const RigidTransform& t, const Vec3& p) {
    return t.rotation * p + t.translation;
}

Rotation rotation_from_axis_angle(const Vec3& axis, double angle) {
    if (std::abs(axis.norm() - 1.0) > 1e-9)
        throw InputError("rotation axis must have unit length");
    Mat3 k;
    k << 0.0, -axis.z(), axis.y(),
         axis.z(), 0.0, -axis.x(),
         -axis.y(), axis.x(), 0.0;
    const Mat3 r = Mat3::Identity() + std::sin(angle) * k + (1.0 - std::cos(angle)) * (k * k);
    return {r, Rotation::Trusted{}};
}

RigidTransform from_axis_angle(const Vec3& axis, double angle, const Vec3& translation) {
    return {rotation_from_axis_angle(axis, angle), translation};
}

Rotation nearest_orthogonal(const Mat3& m) {
    if (!m.allFinite()) throw NumericError("nearest_orthogonal: non-finite matrix");
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const Vec3 s = svd.singularValues();
    if (!(s(2) > 1e-12 * std::max(s(0), 1e-300)))
        throw NumericError("nearest_orthogonal: matrix is singular");
    Mat3 d = Mat3::Identity();
    if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) d(2, 2) = -1.0;
    return {svd.matrixU() * d * svd.matrixV().transpose(), Rotation::Trusted{}};
}

double rotation_angle(const Rotation& r) {
    // atan2 of sine and cosine parts; acos alone loses half the digits near zero.
    const Mat3& m = r.matrix();
    const double s = 0.5 * Vec3(m(2, 1) - m(1, 2), m(0, 2) - m(2, 0), m(1, 0) - m(0, 1)).norm();
    const double c = 0.5 * (m.trace() - 1.0);
    return std::atan2(s, c);
}

double rotation_angle_between(const Rotation& a, const Rotation& b) {
    return rotation_angle(a.transpose() * b);
}

RigidTransform perturb(const RigidTransform& t, const NoiseParams& noise, std::uint64_t rng_seed) {
    noise.validate();
    std::mt19937_64 rng(rng_seed);
    std::normal_distribution<double> gauss(0.0, 1.0);

    Vec3 offset;
    for (int i = 0; i < 3; ++i) offset(i) = noise.sigma_t * gauss(rng);

    Vec3 axis;
    do {
        for (int i = 0; i < 3; ++i) axis(i) = gauss(rng);
    } while (axis.norm() < 1e-12);
    axis.normalize();
    const double angle = noise.sigma_r * gauss(rng);

    return {t.rotation * rotation_from_axis_angle(axis, angle), t.translation + offset};
}

}  // namespace calibforge
