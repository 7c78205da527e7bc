#pragma once

#include "calibforge/geometry.hpp"

#include <Eigen/Geometry>

#include <filesystem>
#include <random>
#include <string>

namespace testsupport {

using calibforge::Mat3;
using calibforge::RigidTransform;
using calibforge::Rotation;
using calibforge::Vec3;

inline Vec3 gaussian_vec(std::mt19937_64& rng, double sigma = 1.0) {
    std::normal_distribution<double> n(0.0, sigma);
    return {n(rng), n(rng), n(rng)};
}

// Uniform rotation from a normalized Gaussian quaternion.
inline Rotation random_rotation(std::mt19937_64& rng) {
    std::normal_distribution<double> n(0.0, 1.0);
    Eigen::Quaterniond q(n(rng), n(rng), n(rng), n(rng));
    q.normalize();
    return Rotation(q.toRotationMatrix());
}

inline RigidTransform random_transform(std::mt19937_64& rng, double translation_scale = 1.0) {
    return {random_rotation(rng), gaussian_vec(rng, translation_scale)};
}

inline Eigen::Matrix4d homogeneous(const RigidTransform& t) {
    Eigen::Matrix4d m = Eigen::Matrix4d::Identity();
    for (int r = 0; r < 3; ++r) {
        for (int c = 0; c < 3; ++c) m(r, c) = t.rotation(r, c);
        m(r, 3) = t.translation(r);
    }
    return m;
}

// Fresh scratch directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        std::random_device rd;
        path_ = std::filesystem::temp_directory_path() / ("calibforge_" + tag + "_" + std::to_string(rd()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

}  // namespace testsupport
