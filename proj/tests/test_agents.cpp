#include <doctest.h>

#include <cmath>
#include <vector>

#include "duplex/agents.hpp"
#include "duplex/segmentation.hpp"

using namespace duplex;

namespace {

double relative_frobenius_diff(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y) {
    return (x - y).norm() / y.norm();
}

struct BehaviorSummary {
    double voiced_a = 0.0;
    double voiced_b = 0.0;
    double overlap = 0.0;
    double both_silent = 0.0;
    std::size_t ipus_a = 0;
    std::size_t ipus_b = 0;
};

BehaviorSummary summarize(const DialogueTrace& trace) {
    BehaviorSummary s;
    const auto n = static_cast<double>(trace.duration_frames);
    for (std::int64_t t = 0; t < trace.duration_frames; ++t) {
        const bool va = trace.a.vad.voiced[static_cast<std::size_t>(t)] != 0;
        const bool vb = trace.b.vad.voiced[static_cast<std::size_t>(t)] != 0;
        s.voiced_a += va ? 1 : 0;
        s.voiced_b += vb ? 1 : 0;
        s.overlap += (va && vb) ? 1 : 0;
        s.both_silent += (!va && !vb) ? 1 : 0;
    }
    s.voiced_a /= n;
    s.voiced_b /= n;
    s.overlap /= n;
    s.both_silent /= n;
    s.ipus_a = extract_ipus(trace.a.vad, trace.clock, Speaker::A).size();
    s.ipus_b = extract_ipus(trace.b.vad, trace.clock, Speaker::B).size();
    return s;
}

}  // namespace

TEST_CASE("init is deterministic per (seed, variant)") {
    const ToyHyperparams hp;
    const auto [p1, s1] = init_agent(11, AgentVariant::Default, hp);
    const auto [p2, s2] = init_agent(11, AgentVariant::Default, hp);
    CHECK(p1.recurrence == p2.recurrence);
    CHECK(p1.input_embed == p2.input_embed);
    CHECK(p1.self_embed == p2.self_embed);
    CHECK(p1.output == p2.output);
    CHECK(p1.output_bias == p2.output_bias);
    CHECK(s1.h == s2.h);
    CHECK(s1.prev_self_token == s2.prev_self_token);
}

TEST_CASE("finetuned variant differs by exactly the configured relative scale") {
    const ToyHyperparams hp;
    const auto [base, s0] = init_agent(11, AgentVariant::Default, hp);
    const auto [tuned, s1] = init_agent(11, AgentVariant::Finetuned, hp);
    CHECK(std::abs(relative_frobenius_diff(tuned.recurrence, base.recurrence) - hp.finetune_scale) < 1e-12);
    CHECK(std::abs(relative_frobenius_diff(tuned.input_embed, base.input_embed) - hp.finetune_scale) < 1e-12);
    CHECK(std::abs(relative_frobenius_diff(tuned.self_embed, base.self_embed) - hp.finetune_scale) < 1e-12);
    CHECK(std::abs(relative_frobenius_diff(tuned.output, base.output) - hp.finetune_scale) < 1e-12);
}

TEST_CASE("different seeds draw different weights") {
    const ToyHyperparams hp;
    const auto [p1, s1] = init_agent(11, AgentVariant::Default, hp);
    const auto [p2, s2] = init_agent(12, AgentVariant::Default, hp);
    CHECK((p1.recurrence - p2.recurrence).cwiseAbs().maxCoeff() > 0.0);
}

TEST_CASE("recurrence is rescaled to the configured spectral radius") {
    const ToyHyperparams hp;
    const auto [params, state] = init_agent(3, AgentVariant::Default, hp);
    const double rho = params.recurrence.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(rho == doctest::Approx(hp.spectral_radius).epsilon(1e-9));
}

TEST_CASE("pad bias: zero is identity, positive shifts only the pad entry") {
    Eigen::VectorXd logits(3);
    logits << 1.0, 2.0, 3.0;
    Eigen::VectorXd same = logits;
    apply_pad_bias(same, 0.0, 0);
    CHECK(same == logits);

    apply_pad_bias(logits, 0.5, 0);
    CHECK(logits(0) == 0.5);
    CHECK(logits(1) == 2.0);
    CHECK(logits(2) == 3.0);
}

TEST_CASE("any positive bias strictly lowers the pad softmax probability") {
    RngStream rng(5);
    for (int rep = 0; rep < 100; ++rep) {
        Eigen::VectorXd logits(8);
        for (int k = 0; k < 8; ++k) logits(k) = 4.0 * (rng.uniform() - 0.5);
        const double bias = 0.01 + 3.0 * rng.uniform();

        auto pad_prob = [](const Eigen::VectorXd& z) {
            const Eigen::VectorXd p = (z.array() - z.maxCoeff()).exp();
            return p(0) / p.sum();
        };
        const double before = pad_prob(logits);
        Eigen::VectorXd biased = logits;
        apply_pad_bias(biased, bias, 0);
        CHECK(pad_prob(biased) < before);
    }
}

TEST_CASE("extreme inhibition forces silence while the partner speaks") {
    ToyHyperparams hp;
    hp.inhibition_gain = 1e6;
    const auto [params, state0] = init_agent(7, AgentVariant::Default, hp);
    ToyAgentState state = state0;
    for (int t = 0; t < 200; ++t) {
        const std::uint32_t tok = agent_step(params, state, /*incoming=*/5);
        CHECK(tok == hp.pad_id);
    }
}

TEST_CASE("near-zero temperature reduces to argmax decoding") {
    ToyHyperparams hp;
    hp.temperature = 1e-9;
    const auto [params, state0] = init_agent(9, AgentVariant::Default, hp);

    // Independent recomputation of the logits the step sees.
    ToyAgentState state = state0;
    const std::uint32_t incoming = 3;
    Eigen::VectorXd h = (params.recurrence * state.h +
                         params.input_embed.row(incoming).transpose() +
                         params.self_embed.row(state.prev_self_token).transpose())
                            .array()
                            .tanh();
    Eigen::VectorXd logits = params.output * h + params.output_bias;
    logits(params.pad_id) += params.inhibition_gain;  // incoming is non-pad
    Eigen::Index argmax = 0;
    logits.maxCoeff(&argmax);

    const std::uint32_t tok = agent_step(params, state, incoming);
    CHECK(tok == static_cast<std::uint32_t>(argmax));
}

TEST_CASE("scripted replay is bit-identical") {
    const ToyHyperparams hp;
    std::vector<std::uint32_t> incoming;
    RngStream feed(77);
    for (int t = 0; t < 50; ++t)
        incoming.push_back(static_cast<std::uint32_t>(feed.uniform_below(hp.vocab_size)));

    std::vector<std::uint32_t> tokens_first;
    Eigen::MatrixXd acts_first(50, hp.dim);
    for (int run = 0; run < 2; ++run) {
        auto [params, state] = init_agent(21, AgentVariant::Default, hp);
        for (int t = 0; t < 50; ++t) {
            const std::uint32_t tok = agent_step(params, state, incoming[static_cast<std::size_t>(t)]);
            if (run == 0) {
                tokens_first.push_back(tok);
                acts_first.row(t) = state.h;
            } else {
                CHECK(tok == tokens_first[static_cast<std::size_t>(t)]);
                CHECK(state.h == acts_first.row(t).transpose());
            }
        }
    }
}

TEST_CASE("simulated dialogues are pure functions of the condition") {
    ExperimentCondition cond;
    cond.noise_p = 0.45;
    cond.seed = 1234;
    const DialogueTrace t1 = simulate_dialogue(cond, 200);
    const DialogueTrace t2 = simulate_dialogue(cond, 200);
    CHECK(t1.a.activations == t2.a.activations);
    CHECK(t1.b.activations == t2.b.activations);
    CHECK(t1.a.tokens.tokens == t2.a.tokens.tokens);
    CHECK(t1.b.tokens.tokens == t2.b.tokens.tokens);
}

TEST_CASE("activations stay inside the tanh box") {
    ExperimentCondition cond;
    cond.seed = 5;
    const DialogueTrace trace = simulate_dialogue(cond, 300);
    CHECK(trace.a.activations.cwiseAbs().maxCoeff() <= 1.0);
    CHECK(trace.b.activations.cwiseAbs().maxCoeff() <= 1.0);
}

TEST_CASE("100 s dialogue at the default clock is 1250 frames") {
    ExperimentCondition cond;
    cond.seed = 6;
    const std::int64_t frames = (100 * 1000) / 80;
    CHECK(frames == 1250);
    const DialogueTrace trace = simulate_dialogue(cond, frames);
    CHECK(trace.duration_frames == 1250);
    CHECK(trace.clock.frame_ms == 80);
}

TEST_CASE("behavioral envelope at zero noise (reduced-seed smoke)") {
    double voiced_sum = 0.0, overlap_sum = 0.0, both_silent_sum = 0.0;
    std::size_t min_ipus = 100000;
    const int seeds = 6;
    for (int seed = 0; seed < seeds; ++seed) {
        ExperimentCondition cond;
        cond.seed = static_cast<std::uint64_t>(1000 + seed);
        const auto s = summarize(simulate_dialogue(cond, 1250));
        voiced_sum += 0.5 * (s.voiced_a + s.voiced_b);
        overlap_sum += s.overlap;
        both_silent_sum += s.both_silent;
        min_ipus = std::min({min_ipus, s.ipus_a, s.ipus_b});
    }
    const double voiced = voiced_sum / seeds;
    CHECK(voiced > 0.15);
    CHECK(voiced < 0.7);
    CHECK(overlap_sum / seeds < 0.25);
    CHECK(both_silent_sum / seeds < 0.5);
    CHECK(min_ipus >= 3);
}

TEST_CASE("pad bias raises the voiced fraction, pairwise by seed") {
    int wins = 0;
    const int seeds = 5;
    for (int seed = 0; seed < seeds; ++seed) {
        ExperimentCondition plain;
        plain.seed = static_cast<std::uint64_t>(2000 + seed);
        ExperimentCondition biased = plain;
        biased.pad_bias_a = 2.0;
        biased.pad_bias_b = 2.0;
        const auto s0 = summarize(simulate_dialogue(plain, 600));
        const auto s1 = summarize(simulate_dialogue(biased, 600));
        const double v0 = 0.5 * (s0.voiced_a + s0.voiced_b);
        const double v1 = 0.5 * (s1.voiced_a + s1.voiced_b);
        wins += v1 > v0 ? 1 : 0;
    }
    CHECK(wins == seeds);
}

TEST_CASE("prompt prefix is shared across dialogue seeds") {
    const ToyHyperparams hp;
    const auto [a1, b1] = prompt_tracks(hp);
    const auto [a2, b2] = prompt_tracks(hp);
    CHECK(a1 == a2);
    CHECK(b1 == b2);
    CHECK(a1.size() == static_cast<std::size_t>(hp.prompt_frames));
}

TEST_CASE("duration below two frames is rejected") {
    ExperimentCondition cond;
    CHECK_THROWS_AS(simulate_dialogue(cond, 1), ValidationError);
}
