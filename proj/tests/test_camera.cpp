#include "calibforge/camera.hpp"
#include "calibforge/error.hpp"
#include "calibforge/image_io.hpp"
#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <fstream>
#include <numeric>

using namespace calibforge;

TEST_CASE("projection round trip") {
    const Intrinsics k = Intrinsics::make_default();
    CHECK(k.width == 524);
    CHECK(k.height == 424);
    const PixelCoord c = project(k, Vec3(0, 0, 2.0));
    CHECK(c.u == k.cx);
    CHECK(c.v == k.cy);
    CHECK(unproject(k, k.cx, k.cy, 1.0) == Vec3(0, 0, 1.0));
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uu(0, 523), vv(0, 423), dd(0.3, 3.0);
    for (int i = 0; i < 1000; ++i) {
        const double u = uu(rng), v = vv(rng), d = dd(rng);
        const PixelCoord p = project(k, unproject(k, u, v, d));
        CHECK(std::abs(p.u - u) < 1e-10);
        CHECK(std::abs(p.v - v) < 1e-10);
    }
    CHECK_THROWS_AS(project(k, Vec3(0, 0, 0)), InputError);
    CHECK_THROWS_AS(project(k, Vec3(0, 0, -1)), InputError);
    CHECK_THROWS_AS(unproject(k, 10, 10, 0.0), InputError);
}

TEST_CASE("point cloud validity") {
    const Intrinsics k = Intrinsics::make_default(8, 6, 5.0);
    DepthImage depth(8, 6);
    CHECK(to_point_cloud(depth, k).valid_count() == 0);
    CHECK_THROWS_AS(nearest_point(to_point_cloud(depth, k), Vec3::Zero()), InputError);
    depth.at(static_cast<int>(k.cx), static_cast<int>(k.cy)) = 1.5f;
    const PointCloud cloud = to_point_cloud(depth, k);
    CHECK(cloud.valid_count() == 1);
    const NearestHit h = nearest_point(cloud, Vec3(100, 100, 100));
    CHECK(h.xyz == Vec3(0, 0, 1.5));
    CHECK(h.u == static_cast<int>(k.cx));
}

TEST_CASE("nearest_point agrees with a sorted exhaustive search") {
    const Intrinsics k = Intrinsics::make_default(40, 30, 30.0);
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> depth_draw(0.5, 1.5);
    std::bernoulli_distribution hole(0.2);
    DepthImage depth(40, 30);
    for (auto& d : depth.data) d = hole(rng) ? 0.0f : static_cast<float>(depth_draw(rng));
    const PointCloud cloud = to_point_cloud(depth, k);

    std::vector<std::size_t> order;
    std::uniform_real_distribution<double> q(-0.8, 0.8), qz(0.3, 1.7);
    for (int i = 0; i < 10000; ++i) {
        const Vec3 p(q(rng), q(rng), qz(rng));
        order.resize(cloud.points.size());
        std::iota(order.begin(), order.end(), 0);
        std::erase_if(order, [&](std::size_t j) { return !cloud.points[j].valid; });
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return (cloud.points[a].xyz - p).squaredNorm() < (cloud.points[b].xyz - p).squaredNorm();
        });
        const NearestHit h = nearest_point(cloud, p);
        const CloudPoint& best = cloud.points[order.front()];
        REQUIRE(h.u == best.u);
        REQUIRE(h.v == best.v);
        CHECK(h.distance == doctest::Approx((best.xyz - p).norm()));
    }
}

TEST_CASE("nearest_point breaks ties by lowest pixel index") {
    const Intrinsics k = Intrinsics::make_default(4, 1, 1.0);
    DepthImage depth(4, 1);
    depth.at(1, 0) = 1.0f;
    depth.at(3, 0) = 1.0f;
    const PointCloud cloud = to_point_cloud(depth, k);
    // Equidistant from pixels 1 and 3.
    const Vec3 mid = 0.5 * (cloud.points[1].xyz + cloud.points[3].xyz);
    CHECK(nearest_point(cloud, mid).u == 1);
}

TEST_CASE("PFM round trip and on-disk layout") {
    testsupport::TempDir dir("pfm");
    DepthImage d(5, 3);
    for (std::size_t i = 0; i < d.data.size(); ++i) d.data[i] = 0.25f * static_cast<float>(i);
    const std::string path = (dir.path() / "d.pfm").string();
    write_pfm(path, d);
    const DepthImage back = read_pfm(path);
    CHECK(back.width == 5);
    CHECK(back.height == 3);
    CHECK(back.data == d.data);

    std::ifstream in(path, std::ios::binary);
    std::string magic, dims_w, dims_h, scale;
    in >> magic >> dims_w >> dims_h >> scale;
    in.get();
    CHECK(magic == "Pf");
    CHECK(std::stod(scale) < 0.0);
    float first = 0.0f;
    in.read(reinterpret_cast<char*>(&first), sizeof first);
    // Bottom scanline first.
    CHECK(first == d.at(0, 2));
}

TEST_CASE("PPM round trip and errors") {
    testsupport::TempDir dir("ppm");
    RgbImage img(4, 2);
    for (std::size_t i = 0; i < img.data.size(); ++i) img.data[i] = static_cast<std::uint8_t>(i * 7);
    const std::string path = (dir.path() / "c.ppm").string();
    write_ppm(path, img);
    const RgbImage back = read_ppm(path);
    CHECK(back.data == img.data);
    try {
        read_ppm((dir.path() / "missing.ppm").string());
        FAIL("expected IoError");
    } catch (const IoError& e) {
        CHECK(e.path().find("missing.ppm") != std::string::npos);
    }
    std::ofstream(dir.path() / "bad.pfm") << "P6\n1 1\n255\nxyz";
    CHECK_THROWS_AS(read_pfm((dir.path() / "bad.pfm").string()), IoError);
}

TEST_CASE("crop") {
    DepthImage d(6, 4);
    for (int v = 0; v < 4; ++v)
        for (int u = 0; u < 6; ++u) d.at(u, v) = static_cast<float>(10 * v + u);
    const DepthImage c = crop(d, 2, 1, 3, 2);
    CHECK(c.width == 3);
    CHECK(c.at(0, 0) == 12.0f);
    CHECK(c.at(2, 1) == 24.0f);
    CHECK_THROWS_AS(crop(d, 4, 0, 3, 1), InputError);
}
