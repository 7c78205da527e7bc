#pragma once

#include "calibforge/geometry.hpp"

#include <cstdint>
#include <utility>
#include <vector>

namespace calibforge {

/// One robot/camera observation of the calibration target.
struct PosePair {
    RigidTransform robot;   // endeffector in robot base frame (^R T_EF)
    RigidTransform marker;  // calibration target in camera frame (^K T_CB)
};

/// Solution of A_i·X = Y·B_i with A_i = robot pose, B_i = marker pose.
struct HandEyeSolution {
    RigidTransform x_marker_to_ef;
    RigidTransform y_camera_to_robot;  // ^R T_K
    double residual_rms = 0.0;         // of the raw linear solution, before re-orthonormalization
};

struct CalibrationErrorReport {
    double position_error_mean = 0.0;  // meters
    double position_error_std = 0.0;
    double rotation_error_mean = 0.0;  // radians
    double rotation_error_std = 0.0;
    std::size_t n_eval = 0;
};

struct Qr24Options {
    // Multiplier on the translation rows of the stacked system. Rotation rows
    // are dimensionless, translation rows are in meters.
    double translation_row_weight = 1.0;
    // Minimum second singular value of the stacked relative rotation axes.
    double degeneracy_threshold = 1e-6;
};

/// Linear least-squares hand-eye/robot-world calibration with 24 unknowns
/// (the upper 3x4 blocks of X and Y). Each pair contributes 12 rows:
///
///     R_A·R_X − R_Y·R_B = 0                  (9 rows)
///     R_A·t_X − R_Y·t_B − t_Y = −t_A          (3 rows)
///
/// Solved with column-pivoting Householder QR; the rotation blocks are then
/// replaced by their nearest rotations.
///
/// Throws InputError for fewer than 3 pairs, DegenerateError when the robot
/// motions do not rotate about at least two independent axes, NumericError
/// when the system is rank deficient anyway.
HandEyeSolution solve_qr24(const std::vector<PosePair>& pairs, const Qr24Options& options = {});

/// Second singular value of the stacked relative-rotation axis vectors
/// (sin θ · axis of R_A0ᵀ·R_Ai). Exposed for diagnostics.
double rotation_axis_diversity(const std::vector<PosePair>& pairs);

/// Predicts marker_i = Y⁻¹·robot_i·X and compares against the observation.
/// Population standard deviations. Throws InputError on an empty set.
CalibrationErrorReport evaluate(const HandEyeSolution& sol, const std::vector<PosePair>& held_out);

/// Seeded shuffle, then the first n_calibration pairs solve and the rest evaluate.
std::pair<std::vector<PosePair>, std::vector<PosePair>> split_pairs(const std::vector<PosePair>& pairs,
                                                                    std::size_t n_calibration,
                                                                    std::uint64_t rng_seed);

}  // namespace calibforge
