#include "calibforge/metrics.hpp"

#include "calibforge/error.hpp"

#include <algorithm>
#include <cmath>

namespace calibforge {
namespace {

void check_shapes(const LabelMatrix& pred, const LabelMatrix& target) {
    if (pred.rows() != target.rows() || pred.cols() != target.cols())
        throw InputError("metrics: prediction is " + std::to_string(pred.rows()) + "x" + std::to_string(pred.cols()) +
                         " but target is " + std::to_string(target.rows()) + "x" + std::to_string(target.cols()));
    if (pred.rows() < 1 || pred.cols() < 1) throw InputError("metrics: empty label matrix");
}

Eigen::RowVectorXd column_std(const LabelMatrix& m) {
    const Eigen::RowVectorXd mean = m.colwise().mean();
    return ((m.rowwise() - mean).array().square().colwise().sum() / static_cast<double>(m.rows())).sqrt();
}

}  // namespace

const char* to_string(MaeConvention c) {
    return c == MaeConvention::Euclidean ? "euclidean" : "per_coordinate";
}

MeanStd mae(const LabelMatrix& pred, const LabelMatrix& target, int point_dim, MaeConvention convention) {
    check_shapes(pred, target);
    if (point_dim < 1 || pred.cols() % point_dim != 0)
        throw InputError("metrics: output count " + std::to_string(pred.cols()) + " is not a multiple of " +
                         std::to_string(point_dim));
    const LabelMatrix diff = pred - target;
    Eigen::ArrayXd dist;
    if (convention == MaeConvention::PerCoordinate) {
        dist = diff.cwiseAbs().reshaped();
    } else {
        // Columns of the reshaped view are single points.
        const auto points = diff.transpose().reshaped(point_dim, diff.size() / point_dim);
        dist = points.colwise().norm().transpose().array();
    }
    const double mean = dist.mean();
    const double var = (dist - mean).square().mean();
    return {mean, std::sqrt(var)};
}

double rmae(const LabelMatrix& pred, const LabelMatrix& target) {
    check_shapes(pred, target);
    const Eigen::RowVectorXd sd = column_std(target);
    const Eigen::RowVectorXd abs_err = (pred - target).cwiseAbs().colwise().mean();
    double sum = 0.0;
    int used = 0;
    for (Eigen::Index d = 0; d < target.cols(); ++d) {
        if (sd(d) > kZeroVarianceThreshold) {
            sum += abs_err(d) / sd(d);
            ++used;
        }
    }
    if (used == 0) throw InputError("rmae: every target dimension has zero variance");
    return sum / used;
}

double acc(const LabelMatrix& pred, const LabelMatrix& target) {
    check_shapes(pred, target);
    if (pred.rows() < 2) throw InputError("acc: need at least two samples");
    const LabelMatrix pc = pred.rowwise() - pred.colwise().mean();
    const LabelMatrix tc = target.rowwise() - target.colwise().mean();
    const double n = static_cast<double>(pred.rows());
    double sum = 0.0;
    for (Eigen::Index d = 0; d < pred.cols(); ++d) {
        const double spp = pc.col(d).dot(pc.col(d));
        const double stt = tc.col(d).dot(tc.col(d));
        if (std::sqrt(spp / n) <= kZeroVarianceThreshold || std::sqrt(stt / n) <= kZeroVarianceThreshold) continue;
        // sqrt(s·s) == s in IEEE arithmetic, so identical series give exactly 1.
        sum += std::clamp(pc.col(d).dot(tc.col(d)) / std::sqrt(spp * stt), -1.0, 1.0);
    }
    return sum / static_cast<double>(pred.cols());
}

RegressionReport regression_report(const LabelMatrix& pred, const LabelMatrix& target, int point_dim,
                                   MaeConvention convention) {
    const MeanStd m = mae(pred, target, point_dim, convention);
    RegressionReport r;
    r.mae_mean = m.mean;
    r.mae_std = m.std;
    r.rmae = rmae(pred, target);
    r.acc = pred.rows() >= 2 ? acc(pred, target) : 0.0;
    r.n_samples = static_cast<std::size_t>(pred.rows());
    r.n_outputs = static_cast<std::size_t>(pred.cols());
    r.convention = convention;
    return r;
}

}  // namespace calibforge
