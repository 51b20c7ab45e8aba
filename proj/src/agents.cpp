#include "duplex/agents.hpp"

#include <cmath>
#include <string>

#include "duplex/channel.hpp"
#include "duplex/errors.hpp"

namespace duplex {

namespace {

Eigen::MatrixXd draw_gaussian(RngStream& rng, Eigen::Index rows, Eigen::Index cols, double scale) {
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = scale * rng.normal();
    return m;
}

// Rescale so the largest eigenvalue magnitude equals the target.
void set_spectral_radius(Eigen::MatrixXd& w, double target) {
    const double rho = w.eigenvalues().cwiseAbs().maxCoeff();
    if (rho > 0.0) w *= target / rho;
}

// Perturbation direction is multiplicative (elementwise w * r), renormalized
// so ||delta||_F / ||w||_F equals scale exactly.
void perturb_tensor(Eigen::Ref<Eigen::MatrixXd> w, RngStream& rng, double scale) {
    const double base_norm = w.norm();
    if (base_norm == 0.0) return;
    Eigen::MatrixXd direction(w.rows(), w.cols());
    for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) direction(r, c) = w(r, c) * rng.normal();
    const double dir_norm = direction.norm();
    if (dir_norm == 0.0) return;
    w += direction * (scale * base_norm / dir_norm);
}

}  // namespace

std::pair<ToyAgentParams, ToyAgentState> init_agent(std::uint64_t seed, AgentVariant variant,
                                                    const ToyHyperparams& hp) {
    if (hp.dim < 1) throw ValidationError("init_agent: dim must be >= 1");
    if (hp.vocab_size < 2) throw InvalidVocabError("init_agent: vocab_size must be >= 2");
    if (hp.pad_id >= hp.vocab_size) throw ValidationError("init_agent: pad_id >= vocab_size");
    if (hp.temperature <= 0.0) throw ValidationError("init_agent: temperature must be > 0");
    if (hp.inhibition_gain < 0.0) throw ValidationError("init_agent: inhibition gain must be >= 0");

    const auto dim = static_cast<Eigen::Index>(hp.dim);
    const auto vocab = static_cast<Eigen::Index>(hp.vocab_size);

    ToyAgentParams params;
    params.dim = hp.dim;
    params.vocab_size = hp.vocab_size;
    params.pad_id = hp.pad_id;
    params.inhibition_gain = hp.inhibition_gain;
    params.temperature = hp.temperature;
    params.variant = variant;

    // Draw order is fixed; reordering would silently change every golden run.
    RngStream rng(seed, "agent-init");
    params.recurrence = draw_gaussian(rng, dim, dim, 1.0);
    set_spectral_radius(params.recurrence, hp.spectral_radius);

    Eigen::VectorXd speak_dir(dim);
    for (Eigen::Index i = 0; i < dim; ++i) speak_dir(i) = rng.normal();
    speak_dir.normalize();

    params.input_embed = draw_gaussian(rng, vocab, dim, hp.input_scale);
    params.self_embed = draw_gaussian(rng, vocab, dim, hp.self_scale);
    for (Eigen::Index tok = 0; tok < vocab; ++tok) {
        const double sign = (static_cast<std::uint32_t>(tok) == hp.pad_id) ? -1.0 : 1.0;
        params.self_embed.row(tok) += sign * hp.speak_drive * speak_dir.transpose();
    }

    params.output = draw_gaussian(rng, vocab, dim, hp.output_scale / std::sqrt(hp.dim));
    params.output.row(hp.pad_id) -= hp.pad_readout_gain * speak_dir.transpose();

    params.output_bias = Eigen::VectorXd::Zero(vocab);
    params.output_bias(hp.pad_id) = hp.pad_base_logit;

    if (variant == AgentVariant::Finetuned) {
        RngStream ft(seed, "agent-finetune");
        perturb_tensor(params.recurrence, ft, hp.finetune_scale);
        perturb_tensor(params.input_embed, ft, hp.finetune_scale);
        perturb_tensor(params.self_embed, ft, hp.finetune_scale);
        perturb_tensor(params.output, ft, hp.finetune_scale);
        perturb_tensor(params.output_bias, ft, hp.finetune_scale);
    }

    ToyAgentState state;
    state.h = Eigen::VectorXd::Zero(dim);
    state.prev_self_token = hp.pad_id;
    state.rng = RngStream(seed, "agent-sample");
    return {std::move(params), std::move(state)};
}

void apply_pad_bias(Eigen::VectorXd& logits, double bias, std::uint32_t pad_id) {
    logits(static_cast<Eigen::Index>(pad_id)) -= bias;
}

std::uint32_t agent_step(const ToyAgentParams& params, ToyAgentState& state,
                         std::uint32_t incoming_token, double decode_pad_bias) {
    if (incoming_token >= params.vocab_size)
        throw ValidationError("agent_step: incoming token " + std::to_string(incoming_token) +
                              " out of range");

    state.h = (params.recurrence * state.h +
               params.input_embed.row(incoming_token).transpose() +
               params.self_embed.row(state.prev_self_token).transpose())
                  .array()
                  .tanh();

    Eigen::VectorXd logits = params.output * state.h + params.output_bias;
    if (incoming_token != params.pad_id)
        logits(static_cast<Eigen::Index>(params.pad_id)) += params.inhibition_gain;
    apply_pad_bias(logits, decode_pad_bias, params.pad_id);

    // Stable softmax sampling at temperature tau; inverse-CDF walk.
    Eigen::VectorXd z = (logits.array() - logits.maxCoeff()) / params.temperature;
    Eigen::VectorXd probs = z.array().exp();
    probs /= probs.sum();

    const double u = state.rng.uniform();
    double cumulative = 0.0;
    std::uint32_t sampled = params.vocab_size - 1;  // residual bucket
    for (Eigen::Index k = 0; k < probs.size(); ++k) {
        cumulative += probs(k);
        if (u < cumulative) {
            sampled = static_cast<std::uint32_t>(k);
            break;
        }
    }
    state.prev_self_token = sampled;
    return sampled;
}

std::pair<std::vector<std::uint32_t>, std::vector<std::uint32_t>> prompt_tracks(
    const ToyHyperparams& hp) {
    // Role script: A first hears a short burst (the "customer" opening), B hears
    // silence, then the roles flip for the back half of the prompt.
    RngStream rng(hp.prompt_seed, "prompt");
    const int half = hp.prompt_frames / 2;
    std::vector<std::uint32_t> for_a(static_cast<std::size_t>(hp.prompt_frames), hp.pad_id);
    std::vector<std::uint32_t> for_b(static_cast<std::size_t>(hp.prompt_frames), hp.pad_id);
    auto non_pad = [&]() {
        const auto draw = static_cast<std::uint32_t>(rng.uniform_below(hp.vocab_size - 1));
        return draw >= hp.pad_id ? draw + 1 : draw;
    };
    for (int t = 0; t < hp.prompt_frames; ++t) {
        if (t < half)
            for_a[static_cast<std::size_t>(t)] = non_pad();
        else
            for_b[static_cast<std::size_t>(t)] = non_pad();
    }
    return {std::move(for_a), std::move(for_b)};
}

DialogueTrace simulate_dialogue(const ExperimentCondition& condition, std::int64_t duration_frames,
                                const ToyHyperparams& hp) {
    if (duration_frames < 2) throw ValidationError("simulate_dialogue: duration must be >= 2 frames");
    if (condition.noise_p < 0.0 || condition.noise_p > 1.0)
        throw ValidationError("simulate_dialogue: noise_p outside [0,1]");
    if (condition.pad_bias_a < 0.0 || condition.pad_bias_b < 0.0)
        throw ValidationError("simulate_dialogue: pad bias must be nonnegative");

    auto [params_a, state_a] = init_agent(hp.model_seed_a, condition.variant_a, hp);
    auto [params_b, state_b] = init_agent(hp.model_seed_b, condition.variant_b, hp);
    // Model weights are fixed per role; the dialogue seed only drives sampling
    // and channel corruption.
    state_a.rng = RngStream(condition.seed, "sample/A");
    state_b.rng = RngStream(condition.seed, "sample/B");

    DuplexChannel channel({condition.noise_p, condition.seed}, hp.vocab_size);
    const auto [prompt_a, prompt_b] = prompt_tracks(hp);

    DialogueTrace trace;
    trace.clock = FrameClock{};
    trace.condition = condition;
    trace.duration_frames = duration_frames;
    trace.a.activations.resize(duration_frames, hp.dim);
    trace.b.activations.resize(duration_frames, hp.dim);
    trace.a.tokens = TokenTrack{hp.vocab_size, hp.pad_id, {}};
    trace.b.tokens = TokenTrack{hp.vocab_size, hp.pad_id, {}};
    trace.a.tokens.tokens.resize(static_cast<std::size_t>(duration_frames));
    trace.b.tokens.tokens.resize(static_cast<std::size_t>(duration_frames));

    std::uint32_t out_a = hp.pad_id;
    std::uint32_t out_b = hp.pad_id;
    for (std::int64_t t = 0; t < duration_frames; ++t) {
        std::uint32_t in_a;
        std::uint32_t in_b;
        if (t < hp.prompt_frames) {
            // The prompt bypasses the channel, like prerecorded local audio.
            in_a = prompt_a[static_cast<std::size_t>(t)];
            in_b = prompt_b[static_cast<std::size_t>(t)];
        } else {
            std::tie(in_b, in_a) = channel.route_step(out_a, out_b);
        }
        out_a = agent_step(params_a, state_a, in_a, condition.pad_bias_a);
        out_b = agent_step(params_b, state_b, in_b, condition.pad_bias_b);

        // Recorded states are rounded through float32 so the on-disk container
        // round-trips bit-exactly.
        trace.a.activations.row(t) = state_a.h.cast<float>().cast<double>();
        trace.b.activations.row(t) = state_b.h.cast<float>().cast<double>();
        trace.a.tokens.tokens[static_cast<std::size_t>(t)] = out_a;
        trace.b.tokens.tokens[static_cast<std::size_t>(t)] = out_b;
    }

    trace.a.vad = derive_vad(trace.a.tokens);
    trace.b.vad = derive_vad(trace.b.tokens);
    validate_trace(trace, /*require_vad_token_consistency=*/true);
    return trace;
}

}  // namespace duplex
