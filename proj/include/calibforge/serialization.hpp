#pragma once

#include "calibforge/calibration.hpp"
#include "calibforge/camera.hpp"
#include "calibforge/labeling.hpp"
#include "calibforge/phantom.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace calibforge {

using Json = nlohmann::json;

// Rotations read from files must pass this looser orthonormality check.
inline constexpr double kWireRotationTolerance = 1e-6;

/// { "r": [9 numbers, row-major], "t": [3 numbers, meters] }
Json pose_to_json(const RigidTransform& t);
RigidTransform pose_from_json(const Json& j);

Json intrinsics_to_json(const Intrinsics& k);
Intrinsics intrinsics_from_json(const Json& j);

Json points_to_json(const std::vector<Vec3>& pts);
std::vector<Vec3> points_from_json(const Json& j);

Json pixels_to_json(const std::vector<Pixel>& px);
std::vector<Pixel> pixels_from_json(const Json& j);

Json pose_pairs_to_json(const std::vector<PosePair>& pairs);
std::vector<PosePair> pose_pairs_from_json(const Json& j);

Json solution_to_json(const HandEyeSolution& sol);
HandEyeSolution solution_from_json(const Json& j);

Json report_to_json(const CalibrationErrorReport& r);

/// { "frame_index": i, "clicks": [[u, v], ...] }
Json annotation_to_json(const ReferenceAnnotation& a);
ReferenceAnnotation annotation_from_json(const Json& j);

Json manifest_record_to_json(const ManifestRecord& r);
ManifestRecord manifest_record_from_json(const Json& j);

Json crop_to_json(const CropRect& c);
CropRect crop_from_json(const Json& j);

// File helpers. Errors carry the path.
Json read_json_file(const std::filesystem::path& path);
void write_json_file(const std::filesystem::path& path, const Json& j);
std::vector<Json> read_json_lines(const std::filesystem::path& path);
void write_json_lines(const std::filesystem::path& path, const std::vector<Json>& lines);

}  // namespace calibforge
