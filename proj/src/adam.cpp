#include "duplex/adam.hpp"

#include <cmath>

#include "duplex/errors.hpp"

namespace duplex {

namespace {

template <typename T>
void update_tensor(T& param, const T& grad, T& m, T& v, double lr, double beta1, double beta2,
                   double eps, double bc1, double bc2) {
    m = beta1 * m + (1.0 - beta1) * grad;
    v = (beta2 * v.array() + (1.0 - beta2) * grad.array().square()).matrix();
    param.array() -= lr * (m.array() / bc1) / ((v.array() / bc2).sqrt() + eps);
}

}  // namespace

void adam_step(LstmParams& params, const LstmGrads& grads, AdamState& state,
               const AdamConfig& cfg) {
    if (!grads.allFinite())
        throw NumericFault("adam_step: non-finite gradient at step " + std::to_string(state.step + 1));

    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));

    update_tensor(params.w_input, grads.w_input, state.m.w_input, state.v.w_input,
                  cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2);
    update_tensor(params.w_recur, grads.w_recur, state.m.w_recur, state.v.w_recur,
                  cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2);
    update_tensor(params.bias, grads.bias, state.m.bias, state.v.bias, cfg.learning_rate,
                  cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2);
    update_tensor(params.readout_w, grads.readout_w, state.m.readout_w, state.v.readout_w,
                  cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.eps, bc1, bc2);

    state.m.readout_b = cfg.beta1 * state.m.readout_b + (1.0 - cfg.beta1) * grads.readout_b;
    state.v.readout_b =
        cfg.beta2 * state.v.readout_b + (1.0 - cfg.beta2) * grads.readout_b * grads.readout_b;
    params.readout_b -= cfg.learning_rate * (state.m.readout_b / bc1) /
                        (std::sqrt(state.v.readout_b / bc2) + cfg.eps);
}

}  // namespace duplex
