#pragma once

#include <Eigen/Core>

#include <string>

namespace calibforge {

// Rows are samples, columns are the flattened outputs (electrode-major:
// x0 y0 [z0] x1 y1 [z1] ...).
using LabelMatrix = Eigen::MatrixXd;

enum class MaeConvention {
    // Distance between predicted and target point per sample and electrode.
    Euclidean,
    // |pred − target| per scalar output.
    PerCoordinate,
};

const char* to_string(MaeConvention c);

struct MeanStd {
    double mean = 0.0;
    double std = 0.0;  // population
};

struct RegressionReport {
    double mae_mean = 0.0;
    double mae_std = 0.0;
    double rmae = 0.0;
    double acc = 0.0;
    std::size_t n_samples = 0;
    std::size_t n_outputs = 0;
    MaeConvention convention = MaeConvention::Euclidean;
};

// Output dimensions with a target standard deviation at or below this are
// treated as constant.
inline constexpr double kZeroVarianceThreshold = 1e-12;

/// point_dim is 3 for 3D labels and 2 for pixel labels. Throws InputError on
/// shape mismatch, an empty set, or a column count not divisible by point_dim.
MeanStd mae(const LabelMatrix& pred, const LabelMatrix& target, int point_dim,
            MaeConvention convention = MaeConvention::Euclidean);

/// Mean over non-constant target dimensions of mean|pred_d − target_d| / std(target_d).
/// Throws InputError when every target dimension is constant.
double rmae(const LabelMatrix& pred, const LabelMatrix& target);

/// Mean per-dimension Pearson correlation; a dimension where either series is
/// constant contributes 0. Throws InputError for fewer than two samples.
double acc(const LabelMatrix& pred, const LabelMatrix& target);

RegressionReport regression_report(const LabelMatrix& pred, const LabelMatrix& target, int point_dim,
                                   MaeConvention convention = MaeConvention::Euclidean);

}  // namespace calibforge
