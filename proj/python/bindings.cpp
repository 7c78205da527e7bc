// Python bindings. Poses cross the boundary as 4x4 homogeneous arrays and
// structured results as plain dicts (via JSON).
#include "calibforge/error.hpp"
#include "calibforge/pipeline.hpp"
#include "calibforge/rng.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace calibforge;

namespace {

using Mat4 = Eigen::Matrix4d;

RigidTransform to_pose(const Mat4& m) {
    if ((m.row(3) - Eigen::RowVector4d(0, 0, 0, 1)).norm() > 1e-12)
        throw InputError("pose: last row must be [0, 0, 0, 1]");
    return {Rotation(m.topLeftCorner<3, 3>()), m.topRightCorner<3, 1>()};
}

Mat4 to_mat4(const RigidTransform& t) {
    Mat4 m = Mat4::Identity();
    m.topLeftCorner<3, 3>() = t.rotation.matrix();
    m.topRightCorner<3, 1>() = t.translation;
    return m;
}

std::vector<PosePair> to_pairs(const std::vector<Mat4>& robot, const std::vector<Mat4>& marker) {
    if (robot.size() != marker.size()) throw InputError("robot and marker pose lists differ in length");
    std::vector<PosePair> pairs;
    for (std::size_t i = 0; i < robot.size(); ++i) pairs.push_back({to_pose(robot[i]), to_pose(marker[i])});
    return pairs;
}

py::object to_py(const Json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

MaeConvention parse_convention(const std::string& s) {
    if (s == "euclidean") return MaeConvention::Euclidean;
    if (s == "per_coordinate") return MaeConvention::PerCoordinate;
    throw InputError("mae convention must be 'euclidean' or 'per_coordinate'");
}

}  // namespace

PYBIND11_MODULE(_calibforge, m) {
    m.doc() = "Robot-assisted electrode label generation: calibration, label chains, metrics";

    py::register_exception<InputError>(m, "InputError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def("derive_seed", [](std::uint64_t root, const std::string& stage) { return derive_seed(root, stage); },
          py::arg("root"), py::arg("stage"));

    m.def(
        "solve_qr24",
        [](const std::vector<Mat4>& robot, const std::vector<Mat4>& marker, double translation_row_weight) {
            Qr24Options opts;
            opts.translation_row_weight = translation_row_weight;
            const HandEyeSolution s = solve_qr24(to_pairs(robot, marker), opts);
            return py::make_tuple(to_mat4(s.x_marker_to_ef), to_mat4(s.y_camera_to_robot), s.residual_rms);
        },
        py::arg("robot_poses"), py::arg("marker_poses"), py::arg("translation_row_weight") = 1.0,
        "Solve A_i X = Y B_i. Returns (X marker-to-endeffector, Y camera-to-robot, residual_rms).");

    m.def(
        "evaluate_calibration",
        [](const Mat4& x, const Mat4& y, const std::vector<Mat4>& robot, const std::vector<Mat4>& marker) {
            return to_py(report_to_json(evaluate({to_pose(x), to_pose(y), 0.0}, to_pairs(robot, marker))));
        },
        py::arg("x"), py::arg("y"), py::arg("robot_poses"), py::arg("marker_poses"));

    m.def(
        "lift_to_endeffector",
        [](const Mat4& ref_ef_pose, const Mat4& calib_y, const std::vector<Eigen::Vector3d>& positions) {
            std::vector<RigidTransform> poses;
            for (const auto& p : positions) poses.push_back(RigidTransform::from_translation(p));
            return lift_to_endeffector(to_pose(ref_ef_pose), to_pose(calib_y), poses).positions();
        },
        py::arg("ref_ef_pose"), py::arg("calib_y"), py::arg("positions"));

    m.def(
        "propagate",
        [](const std::vector<Eigen::Vector3d>& in_ef, const Mat4& ef_pose, const Mat4& calib_y) {
            ElectrodeInEndeffector e;
            for (const auto& p : in_ef) e.poses.push_back(RigidTransform::from_translation(p));
            return propagate(e, to_pose(ef_pose), to_pose(calib_y));
        },
        py::arg("positions_in_ef"), py::arg("ef_pose"), py::arg("calib_y"));

    m.def(
        "regression_report",
        [](const LabelMatrix& pred, const LabelMatrix& target, int point_dim, const std::string& convention) {
            return to_py(regression_report_to_json(regression_report(pred, target, point_dim, parse_convention(convention))));
        },
        py::arg("pred"), py::arg("target"), py::arg("point_dim") = 2, py::arg("convention") = "euclidean");

    m.def(
        "run_pipeline",
        [](const std::string& config_text, const std::filesystem::path& out_dir, std::optional<std::uint64_t> seed) {
            PipelineConfig cfg = PipelineConfig::parse(config_text);
            if (seed) cfg.seed = *seed;
            Json r;
            {
                py::gil_scoped_release release;
                r = run_pipeline(cfg, out_dir);
            }
            return to_py(r);
        },
        py::arg("config_text") = "", py::arg("out_dir"), py::arg("seed") = py::none(),
        "simulate, calibrate, label, train, predict and eval under out_dir; returns the summary dict.");

    m.def(
        "evaluate_predictions",
        [](const std::filesystem::path& pred, const std::filesystem::path& target, const std::string& labels,
           const std::string& convention) { return to_py(run_eval(pred, target, labels, parse_convention(convention))); },
        py::arg("pred"), py::arg("target"), py::arg("labels") = "", py::arg("convention") = "euclidean");
}
