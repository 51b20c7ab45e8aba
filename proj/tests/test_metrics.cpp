#include <doctest.h>

#include <cmath>
#include <vector>

#include "duplex/metrics.hpp"
#include "duplex/rng.hpp"

using namespace duplex;

namespace {

// O(n^2) pairwise-count reference, ties counted 1/2.
double pairwise_auc(const std::vector<double>& scores, const std::vector<std::uint8_t>& labels) {
    double wins = 0.0;
    std::size_t pairs = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (!labels[i]) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j]) continue;
            ++pairs;
            if (scores[i] > scores[j])
                wins += 1.0;
            else if (scores[i] == scores[j])
                wins += 0.5;
        }
    }
    return wins / static_cast<double>(pairs);
}

}  // namespace

TEST_CASE("separated, reversed, and all-tied extremes") {
    const std::vector<double> separated{0.1, 0.2, 0.8, 0.9};
    const std::vector<std::uint8_t> labels{0, 0, 1, 1};
    CHECK(auc_roc(separated, labels) == 1.0);

    const std::vector<double> reversed{0.9, 0.8, 0.2, 0.1};
    CHECK(auc_roc(reversed, labels) == 0.0);

    const std::vector<double> ties{0.5, 0.5, 0.5, 0.5};
    CHECK(auc_roc(ties, labels) == 0.5);
}

TEST_CASE("single-class input is an error") {
    const std::vector<double> scores{0.1, 0.2};
    CHECK_THROWS_AS(auc_roc(scores, std::vector<std::uint8_t>{1, 1}), UndefinedAucError);
    CHECK_THROWS_AS(auc_roc(scores, std::vector<std::uint8_t>{0, 0}), UndefinedAucError);
}

TEST_CASE("matches the pairwise oracle exactly, including ties") {
    RngStream rng(5);
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t n = 20 + rng.uniform_below(181);  // up to 200
        std::vector<double> scores(n);
        std::vector<std::uint8_t> labels(n);
        bool has_pos = false, has_neg = false;
        for (std::size_t i = 0; i < n; ++i) {
            // Coarse quantization forces plenty of exact ties.
            scores[i] = std::floor(rng.uniform() * 8.0) / 8.0;
            labels[i] = rng.uniform() < 0.4 ? 1 : 0;
            has_pos = has_pos || labels[i];
            has_neg = has_neg || !labels[i];
        }
        if (!has_pos) labels[0] = 1;
        if (!has_neg) labels[1] = 0;
        CHECK(auc_roc(scores, labels) == pairwise_auc(scores, labels));
    }
}

TEST_CASE("bce closed forms and stability at extreme logits") {
    const std::vector<std::uint8_t> one{1};
    const std::vector<std::uint8_t> on{1};
    Eigen::VectorXd z(1);

    z << 0.0;
    CHECK(bce_with_logits(z, one, on) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    z << 50.0;
    CHECK(bce_with_logits(z, one, on) < 1e-20);
    CHECK(std::isfinite(bce_with_logits(z, one, on)));

    z << -50.0;
    CHECK(bce_with_logits(z, one, on) == doctest::Approx(50.0).epsilon(1e-12));
}

TEST_CASE("bce matches a naive two-branch long-double reference") {
    RngStream rng(6);
    for (int rep = 0; rep < 30; ++rep) {
        const std::size_t n = 64;
        Eigen::VectorXd z(n);
        std::vector<std::uint8_t> labels(n);
        std::vector<std::uint8_t> mask(n);
        for (std::size_t i = 0; i < n; ++i) {
            z(static_cast<Eigen::Index>(i)) = 6.0 * (rng.uniform() - 0.5);
            labels[i] = rng.uniform() < 0.5 ? 1 : 0;
            mask[i] = rng.uniform() < 0.8 ? 1 : 0;
        }
        mask[0] = 1;

        long double sum = 0.0L;
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!mask[i]) continue;
            const long double p = 1.0L / (1.0L + expl(-static_cast<long double>(z(static_cast<Eigen::Index>(i)))));
            sum += labels[i] ? -logl(p) : -logl(1.0L - p);
            ++count;
        }
        const double reference = static_cast<double>(sum / static_cast<long double>(count));
        CHECK(bce_with_logits(z, labels, mask) == doctest::Approx(reference).epsilon(1e-10));
    }
}

TEST_CASE("empty mask is an error") {
    Eigen::VectorXd z(3);
    z << 1.0, 2.0, 3.0;
    const std::vector<std::uint8_t> labels{1, 0, 1};
    const std::vector<std::uint8_t> mask{0, 0, 0};
    CHECK_THROWS_AS(bce_with_logits(z, labels, mask), EmptyMaskError);
}
