#include "calibforge/calibration.hpp"

#include "calibforge/error.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>

namespace calibforge {
namespace {

// Unknown layout: vec(R_X) column-major, vec(R_Y) column-major, t_X, t_Y.
constexpr int kRx = 0;
constexpr int kRy = 9;
constexpr int kTx = 18;
constexpr int kTy = 21;
constexpr int kUnknowns = 24;
constexpr int kRowsPerPair = 12;

Vec3 skew_vector(const Mat3& r) {
    return 0.5 * Vec3(r(2, 1) - r(1, 2), r(0, 2) - r(2, 0), r(1, 0) - r(0, 1));
}

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;
};

MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd out;
    for (double x : xs) out.mean += x;
    out.mean /= static_cast<double>(xs.size());
    double var = 0.0;
    for (double x : xs) var += (x - out.mean) * (x - out.mean);
    out.std = std::sqrt(var / static_cast<double>(xs.size()));
    return out;
}

}  // namespace

double rotation_axis_diversity(const std::vector<PosePair>& pairs) {
    if (pairs.size() < 2) return 0.0;
    Eigen::MatrixXd axes(static_cast<Eigen::Index>(pairs.size() - 1), 3);
    const Mat3 r0t = pairs.front().robot.rotation.matrix().transpose();
    for (std::size_t i = 1; i < pairs.size(); ++i)
        axes.row(static_cast<Eigen::Index>(i - 1)) = skew_vector(r0t * pairs[i].robot.rotation.matrix()).transpose();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(axes);
    const auto s = svd.singularValues();
    return s.size() >= 2 ? s(1) : 0.0;
}

HandEyeSolution solve_qr24(const std::vector<PosePair>& pairs, const Qr24Options& options) {
    if (pairs.size() < 3)
        throw InputError("solve_qr24: need at least 3 pose pairs, got " + std::to_string(pairs.size()));
    if (!(options.translation_row_weight > 0.0))
        throw InputError("solve_qr24: translation row weight must be positive");
    const double diversity = rotation_axis_diversity(pairs);
    if (!(diversity > options.degeneracy_threshold))
        throw DegenerateError("solve_qr24: robot rotations span fewer than two independent axes (diversity " +
                              std::to_string(diversity) + ")");

    const auto n = static_cast<Eigen::Index>(pairs.size());
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(kRowsPerPair * n, kUnknowns);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(kRowsPerPair * n);
    const double wt = options.translation_row_weight;

    for (Eigen::Index p = 0; p < n; ++p) {
        const Mat3& ra = pairs[p].robot.rotation.matrix();
        const Vec3& ta = pairs[p].robot.translation;
        const Mat3& rb = pairs[p].marker.rotation.matrix();
        const Vec3& tb = pairs[p].marker.translation;
        const Eigen::Index row0 = kRowsPerPair * p;

        // R_A·R_X − R_Y·R_B = 0, one row per entry (r, c).
        for (int c = 0; c < 3; ++c) {
            for (int r = 0; r < 3; ++r) {
                const Eigen::Index row = row0 + c * 3 + r;
                for (int k = 0; k < 3; ++k) {
                    a(row, kRx + c * 3 + k) += ra(r, k);
                    a(row, kRy + k * 3 + r) -= rb(k, c);
                }
            }
        }
        // R_A·t_X − R_Y·t_B − t_Y = −t_A.
        for (int r = 0; r < 3; ++r) {
            const Eigen::Index row = row0 + 9 + r;
            for (int k = 0; k < 3; ++k) {
                a(row, kTx + k) += wt * ra(r, k);
                a(row, kRy + k * 3 + r) -= wt * tb(k);
            }
            a(row, kTy + r) -= wt;
            b(row) = -wt * ta(r);
        }
    }

    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
    if (qr.rank() < kUnknowns)
        throw NumericError("solve_qr24: linear system is rank deficient (rank " + std::to_string(qr.rank()) + ")");
    const Eigen::VectorXd w = qr.solve(b);
    if (!w.allFinite()) throw NumericError("solve_qr24: non-finite solution");

    HandEyeSolution sol;
    sol.residual_rms = std::sqrt((a * w - b).squaredNorm() / static_cast<double>(a.rows()));

    const Mat3 rx = Eigen::Map<const Mat3>(w.data() + kRx);
    const Mat3 ry = Eigen::Map<const Mat3>(w.data() + kRy);
    sol.x_marker_to_ef = {nearest_orthogonal(rx), w.segment<3>(kTx)};
    sol.y_camera_to_robot = {nearest_orthogonal(ry), w.segment<3>(kTy)};
    return sol;
}

CalibrationErrorReport evaluate(const HandEyeSolution& sol, const std::vector<PosePair>& held_out) {
    if (held_out.empty()) throw InputError("evaluate: held-out set is empty");
    const RigidTransform y_inv = invert(sol.y_camera_to_robot);
    std::vector<double> pos;
    std::vector<double> rot;
    pos.reserve(held_out.size());
    rot.reserve(held_out.size());
    for (const auto& pair : held_out) {
        const RigidTransform predicted = y_inv * pair.robot * sol.x_marker_to_ef;
        pos.push_back((predicted.translation - pair.marker.translation).norm());
        rot.push_back(rotation_angle_between(predicted.rotation, pair.marker.rotation));
    }
    const MeanStd p = mean_std(pos);
    const MeanStd r = mean_std(rot);
    return {p.mean, p.std, r.mean, r.std, held_out.size()};
}

std::pair<std::vector<PosePair>, std::vector<PosePair>> split_pairs(const std::vector<PosePair>& pairs,
                                                                    std::size_t n_calibration,
                                                                    std::uint64_t rng_seed) {
    if (n_calibration >= pairs.size())
        throw InputError("split_pairs: n_calibration (" + std::to_string(n_calibration) +
                         ") must be smaller than the number of pairs (" + std::to_string(pairs.size()) + ")");
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::mt19937_64 rng(rng_seed);
    std::shuffle(order.begin(), order.end(), rng);

    std::pair<std::vector<PosePair>, std::vector<PosePair>> out;
    for (std::size_t i = 0; i < order.size(); ++i)
        (i < n_calibration ? out.first : out.second).push_back(pairs[order[i]]);
    return out;
}

}  // namespace calibforge
