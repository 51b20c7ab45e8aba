#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <span>
#include <vector>

#include "duplex/errors.hpp"

namespace duplex {

// Mann-Whitney AUC: probability a uniformly chosen positive outranks a
// uniformly chosen negative, ties counted 1/2. Sort-and-rank, O(n log n).
double auc_roc(std::span<const double> scores, std::span<const std::uint8_t> labels);

// Mean binary cross entropy over masked-in frames, log-sum-exp stable form.
double bce_with_logits(const Eigen::VectorXd& logits, std::span<const std::uint8_t> labels,
                       std::span<const std::uint8_t> mask);

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

}  // namespace duplex
