#pragma once

#include "duplex/lstm.hpp"

namespace duplex {

struct AdamConfig {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    LstmGrads m;  // first moment
    LstmGrads v;  // second moment
    long step = 0;

    static AdamState zeros_like(const LstmParams& params) {
        return {LstmGrads::zeros_like(params), LstmGrads::zeros_like(params), 0};
    }
};

// Bias-corrected Adam update over every parameter tensor. Throws NumericFault
// on non-finite gradients.
void adam_step(LstmParams& params, const LstmGrads& grads, AdamState& state,
               const AdamConfig& cfg);

}  // namespace duplex
