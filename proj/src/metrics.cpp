#include "duplex/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace duplex {

double auc_roc(std::span<const double> scores, std::span<const std::uint8_t> labels) {
    if (scores.size() != labels.size())
        throw ValidationError("auc_roc: scores/labels length mismatch");
    std::size_t n_pos = 0;
    for (std::uint8_t y : labels) n_pos += y ? 1 : 0;
    const std::size_t n_neg = labels.size() - n_pos;
    if (n_pos == 0 || n_neg == 0)
        throw UndefinedAucError("auc_roc: need at least one positive and one negative");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return scores[i] < scores[j]; });

    // Average ranks within tie groups (1-based ranks).
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && scores[order[j + 1]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j + 1));
        for (std::size_t k = i; k <= j; ++k)
            if (labels[order[k]]) rank_sum_pos += avg_rank;
        i = j + 1;
    }

    const double u = rank_sum_pos - static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0) / 2.0;
    return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

double bce_with_logits(const Eigen::VectorXd& logits, std::span<const std::uint8_t> labels,
                       std::span<const std::uint8_t> mask) {
    const auto n = static_cast<std::size_t>(logits.size());
    if (labels.size() != n || mask.size() != n)
        throw ValidationError("bce_with_logits: length mismatch");
    double sum = 0.0;
    std::size_t count = 0;
    for (std::size_t t = 0; t < n; ++t) {
        if (!mask[t]) continue;
        const double z = logits(static_cast<Eigen::Index>(t));
        const double y = labels[t] ? 1.0 : 0.0;
        sum += std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)));
        ++count;
    }
    if (count == 0) throw EmptyMaskError("bce_with_logits: empty mask");
    return sum / static_cast<double>(count);
}

}  // namespace duplex
