#pragma once

#include "calibforge/geometry.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace calibforge {

/// Pinhole intrinsics of the depth frame. Pixel centers sit at integer
/// coordinates: pixel (u, v) is the ray through (u, v) exactly.
struct Intrinsics {
    double fx = 365.0;
    double fy = 365.0;
    double cx = 262.0;
    double cy = 212.0;
    int width = 524;
    int height = 424;

    static Intrinsics make_default(int width = 524, int height = 424, double focal = 365.0);
    void validate() const;
    bool contains(double u, double v) const;
};

struct DepthImage {
    int width = 0;
    int height = 0;
    std::vector<float> data;  // meters, row-major; 0 = no return

    DepthImage() = default;
    DepthImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h, 0.0f) {}

    float at(int u, int v) const { return data[static_cast<std::size_t>(v) * width + u]; }
    float& at(int u, int v) { return data[static_cast<std::size_t>(v) * width + u]; }
    void validate() const;
};

struct RgbImage {
    int width = 0;
    int height = 0;
    std::vector<std::uint8_t> data;  // row-major RGB triples

    RgbImage() = default;
    RgbImage(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

    const std::uint8_t* pixel(int u, int v) const { return &data[(static_cast<std::size_t>(v) * width + u) * 3]; }
    std::uint8_t* pixel(int u, int v) { return &data[(static_cast<std::size_t>(v) * width + u) * 3]; }
    void validate() const;
};

struct RgbdFrame {
    RgbImage rgb;
    DepthImage depth;
    Intrinsics intrinsics;
    RigidTransform endeffector_pose;  // ^R T_EF when this frame was taken

    void validate() const;
};

struct PixelCoord {
    double u = 0.0;
    double v = 0.0;
};

struct CloudPoint {
    int u = 0;
    int v = 0;
    Vec3 xyz = Vec3::Zero();
    bool valid = false;
};

/// One entry per pixel, index v·width + u.
struct PointCloud {
    int width = 0;
    int height = 0;
    std::vector<CloudPoint> points;

    std::size_t valid_count() const;
};

struct NearestHit {
    int u = 0;
    int v = 0;
    Vec3 xyz = Vec3::Zero();
    double distance = 0.0;
};

/// Throws InputError when p_cam.z ≤ 0.
PixelCoord project(const Intrinsics& intr, const Vec3& p_cam);

/// Throws InputError when d ≤ 0.
Vec3 unproject(const Intrinsics& intr, double u, double v, double d);

PointCloud to_point_cloud(const RgbdFrame& frame);
PointCloud to_point_cloud(const DepthImage& depth, const Intrinsics& intr);

/// Exhaustive scan for the valid point closest to q; ties go to the lowest
/// pixel index. Throws InputError when the cloud has no valid point.
NearestHit nearest_point(const PointCloud& cloud, const Vec3& q);

}  // namespace calibforge
