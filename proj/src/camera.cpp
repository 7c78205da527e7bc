#include "calibforge/camera.hpp"

#include "calibforge/error.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace calibforge {

Intrinsics Intrinsics::make_default(int width, int height, double focal) {
    Intrinsics k;
    k.width = width;
    k.height = height;
    k.fx = focal;
    k.fy = focal;
    k.cx = width / 2.0;
    k.cy = height / 2.0;
    k.validate();
    return k;
}

void Intrinsics::validate() const {
    if (width <= 0 || height <= 0) throw InputError("intrinsics: image size must be positive");
    if (!(fx > 0.0) || !(fy > 0.0)) throw InputError("intrinsics: focal lengths must be positive");
    if (!(cx >= 0.0 && cx < width) || !(cy >= 0.0 && cy < height))
        throw InputError("intrinsics: principal point outside the image");
}

bool Intrinsics::contains(double u, double v) const {
    return u >= 0.0 && v >= 0.0 && u <= width - 1.0 && v <= height - 1.0;
}

void DepthImage::validate() const {
    if (data.size() != static_cast<std::size_t>(width) * height)
        throw InputError("depth image: data length does not match dimensions");
    for (float d : data)
        if (!std::isfinite(d) || d < 0.0f) throw InputError("depth image: values must be finite and non-negative");
}

void RgbImage::validate() const {
    if (data.size() != static_cast<std::size_t>(width) * height * 3)
        throw InputError("rgb image: data length does not match dimensions");
}

void RgbdFrame::validate() const {
    intrinsics.validate();
    rgb.validate();
    depth.validate();
    if (rgb.width != depth.width || rgb.height != depth.height)
        throw InputError("rgbd frame: color and depth dimensions differ");
    if (depth.width != intrinsics.width || depth.height != intrinsics.height)
        throw InputError("rgbd frame: image size does not match intrinsics");
}

std::size_t PointCloud::valid_count() const {
    std::size_t n = 0;
    for (const auto& p : points) n += p.valid ? 1 : 0;
    return n;
}

PixelCoord project(const Intrinsics& intr, const Vec3& p_cam) {
    if (!(p_cam.z() > 0.0)) throw InputError("project: point is behind the camera");
    return {intr.fx * p_cam.x() / p_cam.z() + intr.cx, intr.fy * p_cam.y() / p_cam.z() + intr.cy};
}

Vec3 unproject(const Intrinsics& intr, double u, double v, double d) {
    if (!(d > 0.0)) throw InputError("unproject: depth must be positive");
    return {(u - intr.cx) * d / intr.fx, (v - intr.cy) * d / intr.fy, d};
}

PointCloud to_point_cloud(const DepthImage& depth, const Intrinsics& intr) {
    PointCloud cloud;
    cloud.width = depth.width;
    cloud.height = depth.height;
    cloud.points.resize(depth.data.size());
    for (int v = 0; v < depth.height; ++v) {
        for (int u = 0; u < depth.width; ++u) {
            auto& p = cloud.points[static_cast<std::size_t>(v) * depth.width + u];
            p.u = u;
            p.v = v;
            const double d = depth.at(u, v);
            if (d > 0.0) {
                p.xyz = unproject(intr, u, v, d);
                p.valid = true;
            }
        }
    }
    return cloud;
}

PointCloud to_point_cloud(const RgbdFrame& frame) {
    return to_point_cloud(frame.depth, frame.intrinsics);
}

NearestHit nearest_point(const PointCloud& cloud, const Vec3& q) {
    const CloudPoint* best = nullptr;
    double best_d2 = std::numeric_limits<double>::infinity();
    for (const auto& p : cloud.points) {
        if (!p.valid) continue;
        const double d2 = (p.xyz - q).squaredNorm();
        if (d2 < best_d2) {
            best_d2 = d2;
            best = &p;
        }
    }
    if (best == nullptr) throw InputError("nearest_point: point cloud has no valid points");
    return {best->u, best->v, best->xyz, std::sqrt(best_d2)};
}

}  // namespace calibforge
