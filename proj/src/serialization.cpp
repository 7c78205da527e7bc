#include "calibforge/serialization.hpp"

#include "calibforge/error.hpp"

#include <fstream>
#include <sstream>

namespace calibforge {
namespace {

double number(const Json& j, const char* what) {
    if (!j.is_number()) throw InputError(std::string("expected a number for ") + what);
    return j.get<double>();
}

const Json& member(const Json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) throw InputError(std::string("missing key '") + key + "'");
    return j.at(key);
}

const Json& array_of(const Json& j, std::size_t n, const char* what) {
    if (!j.is_array() || (n != 0 && j.size() != n))
        throw InputError(std::string("expected an array") + (n ? " of " + std::to_string(n) : std::string()) +
                         " for " + what);
    return j;
}

}  // namespace

Json pose_to_json(const RigidTransform& t) {
    Json r = Json::array();
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) r.push_back(t.rotation(i, k));
    return {{"r", r}, {"t", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

RigidTransform pose_from_json(const Json& j) {
    const Json& r = array_of(member(j, "r"), 9, "pose rotation");
    const Json& t = array_of(member(j, "t"), 3, "pose translation");
    Mat3 m;
    for (int i = 0; i < 3; ++i)
        for (int k = 0; k < 3; ++k) m(i, k) = number(r[static_cast<std::size_t>(i * 3 + k)], "pose rotation");
    if (!Rotation::is_valid(m, kWireRotationTolerance))
        throw InputError("pose rotation violates orthonormality/determinant at tolerance 1e-6");
    return {Rotation(m, Rotation::Trusted{}), Vec3(number(t[0], "t"), number(t[1], "t"), number(t[2], "t"))};
}

Json intrinsics_to_json(const Intrinsics& k) {
    return {{"fx", k.fx}, {"fy", k.fy}, {"cx", k.cx}, {"cy", k.cy}, {"width", k.width}, {"height", k.height}};
}

Intrinsics intrinsics_from_json(const Json& j) {
    Intrinsics k;
    k.fx = number(member(j, "fx"), "fx");
    k.fy = number(member(j, "fy"), "fy");
    k.cx = number(member(j, "cx"), "cx");
    k.cy = number(member(j, "cy"), "cy");
    k.width = static_cast<int>(number(member(j, "width"), "width"));
    k.height = static_cast<int>(number(member(j, "height"), "height"));
    k.validate();
    return k;
}

Json points_to_json(const std::vector<Vec3>& pts) {
    Json out = Json::array();
    for (const auto& p : pts) out.push_back({p.x(), p.y(), p.z()});
    return out;
}

std::vector<Vec3> points_from_json(const Json& j) {
    std::vector<Vec3> out;
    for (const auto& p : array_of(j, 0, "point list")) {
        array_of(p, 3, "3D point");
        out.emplace_back(number(p[0], "x"), number(p[1], "y"), number(p[2], "z"));
    }
    return out;
}

Json pixels_to_json(const std::vector<Pixel>& px) {
    Json out = Json::array();
    for (const auto& p : px) out.push_back({p[0], p[1]});
    return out;
}

std::vector<Pixel> pixels_from_json(const Json& j) {
    std::vector<Pixel> out;
    for (const auto& p : array_of(j, 0, "pixel list")) {
        array_of(p, 2, "pixel");
        if (!p[0].is_number_integer() || !p[1].is_number_integer()) throw InputError("pixel labels must be integers");
        out.push_back({p[0].get<int>(), p[1].get<int>()});
    }
    return out;
}

Json pose_pairs_to_json(const std::vector<PosePair>& pairs) {
    Json out = Json::array();
    for (const auto& p : pairs) out.push_back({{"robot", pose_to_json(p.robot)}, {"marker", pose_to_json(p.marker)}});
    return out;
}

std::vector<PosePair> pose_pairs_from_json(const Json& j) {
    std::vector<PosePair> out;
    for (const auto& p : array_of(j, 0, "pose pair file"))
        out.push_back({pose_from_json(member(p, "robot")), pose_from_json(member(p, "marker"))});
    return out;
}

Json solution_to_json(const HandEyeSolution& sol) {
    return {{"x_marker_to_ef", pose_to_json(sol.x_marker_to_ef)},
            {"y_camera_to_robot", pose_to_json(sol.y_camera_to_robot)},
            {"residual_rms", sol.residual_rms}};
}

HandEyeSolution solution_from_json(const Json& j) {
    HandEyeSolution sol;
    sol.y_camera_to_robot = pose_from_json(member(j, "y_camera_to_robot"));
    if (j.contains("x_marker_to_ef")) sol.x_marker_to_ef = pose_from_json(j.at("x_marker_to_ef"));
    if (j.contains("residual_rms")) sol.residual_rms = number(j.at("residual_rms"), "residual_rms");
    return sol;
}

Json report_to_json(const CalibrationErrorReport& r) {
    return {{"position_error_mean", r.position_error_mean},
            {"position_error_std", r.position_error_std},
            {"rotation_error_mean", r.rotation_error_mean},
            {"rotation_error_std", r.rotation_error_std},
            {"n_eval", r.n_eval}};
}

Json annotation_to_json(const ReferenceAnnotation& a) {
    Json clicks = Json::array();
    for (const auto& c : a.clicks) {
        // Whole-pixel clicks are written as integers.
        auto as_json = [](double x) { return x == std::floor(x) ? Json(static_cast<long long>(x)) : Json(x); };
        clicks.push_back({as_json(c.u), as_json(c.v)});
    }
    return {{"frame_index", a.frame_index}, {"clicks", clicks}};
}

ReferenceAnnotation annotation_from_json(const Json& j) {
    ReferenceAnnotation a;
    const Json& idx = member(j, "frame_index");
    if (!idx.is_number_integer() || idx.get<long long>() < 0) throw InputError("frame_index must be a non-negative integer");
    a.frame_index = idx.get<std::size_t>();
    for (const auto& c : array_of(member(j, "clicks"), 0, "clicks")) {
        array_of(c, 2, "click");
        a.clicks.push_back({number(c[0], "click u"), number(c[1], "click v")});
    }
    return a;
}

Json manifest_record_to_json(const ManifestRecord& r) {
    Json visible = Json::array();
    for (bool b : r.visible) visible.push_back(b);
    return {{"rgb", r.rgb},
            {"depth", r.depth},
            {"ef_pose", pose_to_json(r.ef_pose)},
            {"labels3d", points_to_json(r.labels3d)},
            {"labels2d", pixels_to_json(r.labels2d)},
            {"visible", visible}};
}

ManifestRecord manifest_record_from_json(const Json& j) {
    ManifestRecord r;
    const Json& rgb = member(j, "rgb");
    const Json& depth = member(j, "depth");
    if (!rgb.is_string() || !depth.is_string()) throw InputError("manifest paths must be strings");
    r.rgb = rgb.get<std::string>();
    r.depth = depth.get<std::string>();
    r.ef_pose = pose_from_json(member(j, "ef_pose"));
    r.labels3d = points_from_json(member(j, "labels3d"));
    r.labels2d = pixels_from_json(member(j, "labels2d"));
    for (const auto& b : array_of(member(j, "visible"), 0, "visible")) {
        if (!b.is_boolean()) throw InputError("visible flags must be booleans");
        r.visible.push_back(b.get<bool>());
    }
    if (r.labels3d.size() != r.labels2d.size() || r.labels3d.size() != r.visible.size())
        throw InputError("manifest record: label arrays differ in length");
    return r;
}

Json crop_to_json(const CropRect& c) {
    return {{"u0", c.u0}, {"v0", c.v0}, {"width", c.width}, {"height", c.height}};
}

CropRect crop_from_json(const Json& j) {
    return {static_cast<int>(number(member(j, "u0"), "u0")), static_cast<int>(number(member(j, "v0"), "v0")),
            static_cast<int>(number(member(j, "width"), "width")),
            static_cast<int>(number(member(j, "height"), "height"))};
}

Json read_json_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw IoError(path.string(), std::string("invalid JSON: ") + e.what());
    }
}

void write_json_file(const std::filesystem::path& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError(path.string(), "write failed");
}

std::vector<Json> read_json_lines(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError(path.string(), "cannot open for reading");
    std::vector<Json> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.push_back(Json::parse(line));
        } catch (const Json::exception& e) {
            throw IoError(path.string(), "line " + std::to_string(lineno) + ": invalid JSON: " + e.what());
        }
    }
    return out;
}

void write_json_lines(const std::filesystem::path& path, const std::vector<Json>& lines) {
    std::ofstream out(path);
    if (!out) throw IoError(path.string(), "cannot open for writing");
    for (const auto& j : lines) out << j.dump() << "\n";
    if (!out) throw IoError(path.string(), "write failed");
}

}  // namespace calibforge
