#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "duplex/errors.hpp"
#include "duplex/rng.hpp"

namespace duplex {

// Activations are oriented frames x features throughout, so the Gram products
// below are feature-space alignments.

template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> center_columns(
    const Eigen::MatrixBase<Derived>& x) {
    if (x.rows() < 2)
        throw InsufficientFramesError("center_columns: need at least 2 frames, got " +
                                      std::to_string(x.rows()));
    Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> out = x;
    out.rowwise() -= x.colwise().mean();
    return out;
}

// ||Y^T X||_F^2 / (||X^T X||_F ||Y^T Y||_F) on column-centered inputs.
// Invariant to orthogonal transforms and isotropic scaling of either side.
template <typename DerivedX, typename DerivedY>
double linear_cka(const Eigen::MatrixBase<DerivedX>& x, const Eigen::MatrixBase<DerivedY>& y,
                  bool center = true) {
    if (x.rows() != y.rows())
        throw ValidationError("linear_cka: frame counts differ (" + std::to_string(x.rows()) +
                              " vs " + std::to_string(y.rows()) + ")");
    if (x.rows() < 2)
        throw InsufficientFramesError("linear_cka: need at least 2 frames, got " +
                                      std::to_string(x.rows()));

    using Mat = Eigen::MatrixXd;
    Mat xc = x.template cast<double>();
    Mat yc = y.template cast<double>();
    if (center) {
        xc.rowwise() -= xc.colwise().mean().eval();
        yc.rowwise() -= yc.colwise().mean().eval();
    }

    const double x_gram_norm = (xc.transpose() * xc).norm();
    const double y_gram_norm = (yc.transpose() * yc).norm();
    if (x_gram_norm == 0.0 || y_gram_norm == 0.0)
        throw DegenerateInputError("linear_cka: zero-variance input");

    const double cross = (yc.transpose() * xc).squaredNorm();
    const double value = cross / (x_gram_norm * y_gram_norm);
    if (!(value >= -1e-9 && value <= 1.0 + 1e-9))
        throw NumericFault("linear_cka: value " + std::to_string(value) + " outside [0,1] slack");
    return std::min(1.0, std::max(0.0, value));
}

// Positive lags correspond to A leading B; negative lags to B leading A.
struct CkaCurve {
    std::vector<int> lags_frames;
    std::vector<double> values;          // NaN where skipped
    std::vector<std::int64_t> n_overlap;
    std::vector<std::uint8_t> valid;     // 0 = skipped (overlap below minimum)
};

inline std::vector<int> default_lag_grid(int max_lag = 60) {
    std::vector<int> lags;
    for (int lag = -max_lag; lag <= max_lag; ++lag) lags.push_back(lag);
    return lags;
}

// For lag l >= 0 pairs A[t] with B[t+l]; for l < 0 pairs A[t-l] with B[t].
// Lags whose overlap falls below min_overlap are marked, never dropped.
template <typename DerivedX, typename DerivedY>
CkaCurve lagged_cka(const Eigen::MatrixBase<DerivedX>& a, const Eigen::MatrixBase<DerivedY>& b,
                    const std::vector<int>& lags_frames, std::int64_t min_overlap = 50,
                    bool center = true) {
    const std::int64_t n = a.rows();
    if (b.rows() != n)
        throw ValidationError("lagged_cka: frame counts differ");
    for (int lag : lags_frames)
        if (std::abs(static_cast<std::int64_t>(lag)) >= n - 1)
            throw ValidationError("lagged_cka: |lag| " + std::to_string(lag) +
                                  " must be < n_frames - 1 = " + std::to_string(n - 1));

    CkaCurve curve;
    curve.lags_frames = lags_frames;
    curve.values.reserve(lags_frames.size());
    curve.n_overlap.reserve(lags_frames.size());
    curve.valid.reserve(lags_frames.size());
    const std::int64_t effective_min = std::max<std::int64_t>(min_overlap, 2);
    for (int lag : lags_frames) {
        const std::int64_t shift = std::abs(static_cast<std::int64_t>(lag));
        const std::int64_t overlap = n - shift;
        curve.n_overlap.push_back(overlap);
        if (overlap < effective_min) {
            curve.values.push_back(std::numeric_limits<double>::quiet_NaN());
            curve.valid.push_back(0);
            continue;
        }
        double value;
        if (lag >= 0)
            value = linear_cka(a.derived().topRows(overlap), b.derived().bottomRows(overlap), center);
        else
            value = linear_cka(a.derived().bottomRows(overlap), b.derived().topRows(overlap), center);
        curve.values.push_back(value);
        curve.valid.push_back(1);
    }
    return curve;
}

enum class CiMethod : std::uint8_t { Normal, Bootstrap };

struct CurveStats {
    std::vector<int> lags_frames;
    std::vector<double> mean;
    std::vector<double> ci_lo;
    std::vector<double> ci_hi;
    std::vector<std::int64_t> n_overlap;
    std::vector<std::uint8_t> valid;
    int peak_lag = 0;
    double peak_value = 0.0;
    double baseline_value = 0.0;
    std::size_t n_curves = 0;
};

CurveStats curve_stats(const std::vector<CkaCurve>& curves, int baseline_threshold_frames = 50,
                       CiMethod method = CiMethod::Normal, std::uint64_t bootstrap_seed = 0,
                       int bootstrap_samples = 1000);

}  // namespace duplex
