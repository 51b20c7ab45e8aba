#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <utility>
#include <vector>

#include "duplex/rng.hpp"
#include "duplex/trace.hpp"

namespace duplex {

// Tunable constants for the coupled recurrent toy agents. The two structured
// mechanisms are (i) an input embedding of the partner's token into the
// recurrence and (ii) a speak-state direction u wired from the self-embedding
// table into the PAD logit, which gives turn persistence without training.
struct ToyHyperparams {
    int dim = 64;
    std::uint32_t vocab_size = 32;
    std::uint32_t pad_id = 0;

    double spectral_radius = 0.9;  // W rescaled after random init; contractive but long-memory
    double input_scale = 0.5;      // E entries
    double self_scale = 0.25;      // random part of S entries
    double speak_drive = 1.2;      // +/- u component added to S rows (sign by PAD vs non-PAD)
    double output_scale = 1.5;     // O entries, scaled by 1/sqrt(dim)
    double pad_readout_gain = 2.8; // -gain * u wired into O's PAD row
    double pad_base_logit = 3.2;   // resting PAD advantage over the 31 content tokens
    double inhibition_gain = 4.0;  // gamma: PAD logit boost while the partner is speaking
    double temperature = 1.0;      // tau
    double finetune_scale = 0.1;   // relative Frobenius perturbation of the finetuned variant

    std::uint64_t model_seed_a = 101;  // fixed per role, like fixed checkpoints
    std::uint64_t model_seed_b = 202;

    int prompt_frames = 25;          // scripted token prefix injected into incoming streams
    std::uint64_t prompt_seed = 77;  // shared across dialogues
};

struct ToyAgentParams {
    int dim = 0;
    std::uint32_t vocab_size = 0;
    std::uint32_t pad_id = 0;
    Eigen::MatrixXd recurrence;   // W, dim x dim
    Eigen::MatrixXd input_embed;  // E, vocab x dim (row per incoming token)
    Eigen::MatrixXd self_embed;   // S, vocab x dim (row per own previous token)
    Eigen::MatrixXd output;       // O, vocab x dim
    Eigen::VectorXd output_bias;  // vocab
    double inhibition_gain = 0.0;
    double temperature = 1.0;
    AgentVariant variant = AgentVariant::Default;
};

struct ToyAgentState {
    Eigen::VectorXd h;  // tanh-bounded, |h_i| <= 1
    std::uint32_t prev_self_token = 0;
    RngStream rng{0};
};

// Weights drawn deterministically from seed; the finetuned variant applies a
// seed-derived perturbation whose relative Frobenius magnitude equals
// finetune_scale exactly, per parameter tensor.
std::pair<ToyAgentParams, ToyAgentState> init_agent(std::uint64_t seed, AgentVariant variant,
                                                    const ToyHyperparams& hp);

// logits[pad_id] -= bias; everything else untouched.
void apply_pad_bias(Eigen::VectorXd& logits, double bias, std::uint32_t pad_id);

// One frame: consume the incoming token, update the hidden state, sample the
// outgoing token. The recorded activation is state.h after the call.
std::uint32_t agent_step(const ToyAgentParams& params, ToyAgentState& state,
                         std::uint32_t incoming_token, double decode_pad_bias = 0.0);

// Frame-synchronous run of both agents through the corruptible channel.
// Pure function of (condition, duration_frames, hp).
DialogueTrace simulate_dialogue(const ExperimentCondition& condition, std::int64_t duration_frames,
                                const ToyHyperparams& hp = {});

// The scripted incoming prefix (one track per agent), fixed by hp.prompt_seed.
std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> prompt_tracks(
    const ToyHyperparams& hp);

}  // namespace duplex
