#include <doctest.h>

#include <cmath>
#include <vector>

#include "duplex/rng.hpp"

using duplex::RngStream;

TEST_CASE("identical seeds replay identical sequences") {
    RngStream a(42);
    RngStream b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("labeled substreams differ from each other and the parent") {
    RngStream parent(7);
    RngStream s1 = parent.substream("one");
    RngStream s2 = parent.substream("two");
    bool differ12 = false;
    bool differ1p = false;
    RngStream parent_replay(7);
    for (int i = 0; i < 64; ++i) {
        const auto x1 = s1.next_u64();
        const auto x2 = s2.next_u64();
        const auto xp = parent_replay.next_u64();
        differ12 = differ12 || (x1 != x2);
        differ1p = differ1p || (x1 != xp);
    }
    CHECK(differ12);
    CHECK(differ1p);
}

TEST_CASE("substream derivation is stable, not positional") {
    RngStream a(9);
    a.next_u64();
    a.next_u64();
    RngStream b(9);
    CHECK(a.substream("x").next_u64() == b.substream("x").next_u64());
}

TEST_CASE("uniform stays in [0,1) and covers the range") {
    RngStream rng(1);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.uniform();
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 0.01);
    CHECK(hi > 0.99);
}

TEST_CASE("uniform_below is in range and roughly uniform") {
    RngStream rng(2);
    const std::uint64_t bound = 7;
    std::vector<int> counts(bound, 0);
    const int n = 140000;
    for (int i = 0; i < n; ++i) {
        const auto v = rng.uniform_below(bound);
        REQUIRE(v < bound);
        counts[v]++;
    }
    const double expected = static_cast<double>(n) / static_cast<double>(bound);
    for (int c : counts) CHECK(std::abs(c - expected) < 5.0 * std::sqrt(expected));
}

TEST_CASE("normal draws have the right first two moments") {
    RngStream rng(3);
    const int n = 200000;
    double sum = 0.0, sum_sq = 0.0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        sum += x;
        sum_sq += x * x;
    }
    const double mean = sum / n;
    const double var = sum_sq / n - mean * mean;
    CHECK(std::abs(mean) < 0.01);
    CHECK(std::abs(var - 1.0) < 0.02);
}
