#include "duplex/cka.hpp"

#include <algorithm>
#include <numeric>

namespace duplex {

namespace {

// Compensated (Kahan) summation: aggregation results must not depend on how
// callers batch curves across workers.
class KahanSum {
public:
    void add(double x) {
        const double y = x - compensation_;
        const double t = sum_ + y;
        compensation_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

}  // namespace

CurveStats curve_stats(const std::vector<CkaCurve>& curves, int baseline_threshold_frames,
                       CiMethod method, std::uint64_t bootstrap_seed, int bootstrap_samples) {
    if (curves.empty()) throw ValidationError("curve_stats: no curves");
    const std::size_t n_lags = curves.front().lags_frames.size();
    for (const CkaCurve& c : curves) {
        if (c.lags_frames != curves.front().lags_frames)
            throw GridMismatchError("curve_stats: curves use different lag grids");
        if (c.values.size() != n_lags || c.valid.size() != n_lags)
            throw GridMismatchError("curve_stats: malformed curve");
    }

    const std::size_t m = curves.size();
    CurveStats stats;
    stats.lags_frames = curves.front().lags_frames;
    stats.n_overlap = curves.front().n_overlap;
    stats.n_curves = m;
    stats.mean.resize(n_lags);
    stats.ci_lo.resize(n_lags);
    stats.ci_hi.resize(n_lags);
    stats.valid.resize(n_lags);

    for (std::size_t i = 0; i < n_lags; ++i) {
        bool all_valid = true;
        for (const CkaCurve& c : curves) all_valid = all_valid && c.valid[i];
        stats.valid[i] = all_valid ? 1 : 0;
        if (!all_valid) {
            stats.mean[i] = stats.ci_lo[i] = stats.ci_hi[i] =
                std::numeric_limits<double>::quiet_NaN();
            continue;
        }

        bool all_equal = true;
        for (const CkaCurve& c : curves) all_equal = all_equal && c.values[i] == curves.front().values[i];

        KahanSum sum;
        for (const CkaCurve& c : curves) sum.add(c.values[i]);
        // Identical samples must yield their exact value with zero spread.
        const double mean = all_equal ? curves.front().values[i]
                                      : sum.value() / static_cast<double>(m);
        stats.mean[i] = mean;

        if (method == CiMethod::Normal) {
            double half = 0.0;
            if (m >= 2 && !all_equal) {
                KahanSum sq;
                for (const CkaCurve& c : curves) {
                    const double d = c.values[i] - mean;
                    sq.add(d * d);
                }
                const double sd = std::sqrt(sq.value() / static_cast<double>(m - 1));
                half = 1.96 * sd / std::sqrt(static_cast<double>(m));
            }
            stats.ci_lo[i] = mean - half;
            stats.ci_hi[i] = mean + half;
        }
    }

    if (method == CiMethod::Bootstrap) {
        RngStream rng(bootstrap_seed, "cka-bootstrap");
        std::vector<std::vector<double>> boot_means(n_lags);
        for (auto& v : boot_means) v.reserve(static_cast<std::size_t>(bootstrap_samples));
        for (int rep = 0; rep < bootstrap_samples; ++rep) {
            std::vector<std::size_t> pick(m);
            for (std::size_t j = 0; j < m; ++j) pick[j] = rng.uniform_below(m);
            for (std::size_t i = 0; i < n_lags; ++i) {
                if (!stats.valid[i]) continue;
                KahanSum sum;
                for (std::size_t j : pick) sum.add(curves[j].values[i]);
                boot_means[i].push_back(sum.value() / static_cast<double>(m));
            }
        }
        for (std::size_t i = 0; i < n_lags; ++i) {
            if (!stats.valid[i]) continue;
            auto& samples = boot_means[i];
            std::sort(samples.begin(), samples.end());
            const auto rank = [&](double q) {
                const auto idx = static_cast<std::size_t>(
                    std::llround(q * static_cast<double>(samples.size() - 1)));
                return samples[idx];
            };
            stats.ci_lo[i] = rank(0.025);
            stats.ci_hi[i] = rank(0.975);
        }
    }

    // Peak = argmax of the mean curve; ties resolve to the smallest |lag|,
    // negative before positive.
    std::vector<std::size_t> order(n_lags);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        const int ai = std::abs(stats.lags_frames[i]);
        const int aj = std::abs(stats.lags_frames[j]);
        if (ai != aj) return ai < aj;
        return stats.lags_frames[i] < stats.lags_frames[j];
    });
    bool have_peak = false;
    for (std::size_t i : order) {
        if (!stats.valid[i]) continue;
        if (!have_peak || stats.mean[i] > stats.peak_value) {
            stats.peak_value = stats.mean[i];
            stats.peak_lag = stats.lags_frames[i];
            have_peak = true;
        }
    }
    if (!have_peak) throw ValidationError("curve_stats: no valid lag in any curve");

    KahanSum baseline;
    std::size_t baseline_count = 0;
    for (std::size_t i = 0; i < n_lags; ++i) {
        if (!stats.valid[i]) continue;
        if (std::abs(stats.lags_frames[i]) >= baseline_threshold_frames) {
            baseline.add(stats.mean[i]);
            ++baseline_count;
        }
    }
    if (baseline_count == 0)
        throw ValidationError("curve_stats: baseline threshold leaves no valid lags");
    stats.baseline_value = baseline.value() / static_cast<double>(baseline_count);
    return stats;
}

}  // namespace duplex
