#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>

#include "duplex/rng.hpp"

namespace duplex {

// Single-layer causal LSTM with a per-frame scalar readout. Gate blocks are
// packed rows of w_input / w_recur / bias in the order i, f, g, o.
struct LstmParams {
    Eigen::MatrixXd w_input;      // 4H x d
    Eigen::MatrixXd w_recur;      // 4H x H
    Eigen::VectorXd bias;         // 4H
    Eigen::RowVectorXd readout_w; // 1 x H
    double readout_b = 0.0;

    int hidden() const { return static_cast<int>(w_recur.cols()); }
    int input_dim() const { return static_cast<int>(w_input.cols()); }

    // All entries uniform on +/- 1/sqrt(H); forget-gate bias set to 1.
    static LstmParams init(int input_dim, int hidden, RngStream& rng);
};

// Gradient (and Adam moment) buffers, same shapes as the parameters.
struct LstmGrads {
    Eigen::MatrixXd w_input;
    Eigen::MatrixXd w_recur;
    Eigen::VectorXd bias;
    Eigen::RowVectorXd readout_w;
    double readout_b = 0.0;

    static LstmGrads zeros_like(const LstmParams& p);
    void setZero();
    bool allFinite() const;
};

// Per-step values cached by the forward pass for backpropagation through time.
struct LstmCache {
    Eigen::MatrixXd gate_i, gate_f, gate_g, gate_o;  // H x T
    Eigen::MatrixXd cell, cell_tanh, hidden;         // H x T
};

// Strictly causal: logit_t depends only on features rows <= t. Throws
// NumericFault naming the frame if a state goes non-finite.
Eigen::VectorXd lstm_forward(const LstmParams& params, const Eigen::MatrixXd& features,
                             LstmCache* cache = nullptr);

// Full-sequence BPTT; dlogits is dLoss/dlogit per frame.
LstmGrads lstm_backward(const LstmParams& params, const Eigen::MatrixXd& features,
                        const LstmCache& cache, const Eigen::VectorXd& dlogits);

// Raw-float container in the trace style: params.json + little-endian float32
// payloads.
void save_lstm_params(const LstmParams& params, const std::filesystem::path& dir);
LstmParams load_lstm_params(const std::filesystem::path& dir);

}  // namespace duplex
