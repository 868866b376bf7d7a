#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ponderlab/numerics.hpp"

using namespace ponderlab;

TEST_CASE("layer_norm collapses constant vectors to the bias") {
    const Vec v{1.0, 1.0, 1.0, 1.0};
    const Vec gain(4, 1.0), bias(4, 0.0);
    const Vec out = layer_norm(v, gain, bias);
    for (double x : out) CHECK(std::abs(x) < 1e-6);
}

TEST_CASE("layer_norm leaves a zero-mean unit-variance vector almost unchanged") {
    const Vec out = layer_norm({1.0, -1.0}, {1.0, 1.0}, {0.0, 0.0});
    CHECK(out[0] == Catch::Approx(1.0).margin(1e-4));
    CHECK(out[1] == Catch::Approx(-1.0).margin(1e-4));
}

TEST_CASE("layer_norm matches the population-variance formula") {
    // Independent evaluation of (x - mu)/sqrt(sigma^2 + eps) for v = [0, 2].
    const double expected = 1.0 / std::sqrt(1.0 + 1e-5);
    const Vec out = layer_norm({0.0, 2.0}, {1.0, 1.0}, {0.0, 0.0});
    CHECK(out[0] == Catch::Approx(-expected).margin(1e-12));
    CHECK(out[1] == Catch::Approx(expected).margin(1e-12));
}

TEST_CASE("layer_norm rejects bad inputs") {
    CHECK_THROWS_AS(layer_norm({1.0, 2.0}, {1.0}, {0.0, 0.0}), DimensionError);
    CHECK_THROWS_AS(layer_norm({1.0, 2.0}, {1.0, 1.0}, {0.0, 0.0}, 0.0), DomainError);
}

TEST_CASE("layer_norm output is standardized for random non-constant inputs") {
    RngStream rng(123, "ln-prop");
    for (int trial = 0; trial < 50; ++trial) {
        Vec v(64);
        for (double& x : v) x = 10.0 * rng.gaussian() + 3.0;
        Vec gain(64, 1.0), bias(64, 0.0);
        const Vec out = layer_norm(v, gain, bias, 1e-12);
        double mean = 0.0;
        for (double x : out) mean += x;
        mean /= 64.0;
        double var = 0.0;
        for (double x : out) var += (x - mean) * (x - mean);
        var /= 64.0;
        CHECK(std::abs(mean) <= 1e-9);
        CHECK(std::abs(var - 1.0) <= 1e-6);
    }
}

TEST_CASE("sigmoid_temp evaluates and sharpens") {
    CHECK(sigmoid_temp(0.0, 1.0) == Catch::Approx(0.5).margin(1e-15));
    CHECK(sigmoid_temp(1.0, 1.0) == Catch::Approx(1.0 / (1.0 + std::exp(-1.0))).margin(1e-12));
    CHECK(sigmoid_temp(1.0, 0.1) == Catch::Approx(1.0 / (1.0 + std::exp(-10.0))).margin(1e-12));
    CHECK(sigmoid_temp(1.0, 0.1) > 0.9999);
    CHECK_THROWS_AS(sigmoid_temp(1.0, 0.0), DomainError);
    CHECK_THROWS_AS(sigmoid_temp(1.0, -2.0), DomainError);
}

TEST_CASE("sigmoid_temp symmetry") {
    RngStream rng(7, "sig-prop");
    for (int i = 0; i < 200; ++i) {
        const double x = 20.0 * (rng.uniform() - 0.5);
        const double t = 0.05 + 2.0 * rng.uniform();
        CHECK(std::abs(sigmoid_temp(x, t) + sigmoid_temp(-x, t) - 1.0) <= 1e-12);
    }
}

TEST_CASE("kl_divergence evaluates known cases") {
    CHECK(kl_divergence({0.5, 0.5}, {0.5, 0.5}) == Catch::Approx(0.0).margin(1e-15));
    CHECK(kl_divergence({1.0, 0.0}, {0.5, 0.5}) == Catch::Approx(std::log(2.0)).margin(1e-12));
    const double expected = 0.9 * std::log(9.0) + 0.1 * std::log(1.0 / 9.0);
    CHECK(kl_divergence({0.9, 0.1}, {0.1, 0.9}) == Catch::Approx(expected).margin(1e-12));
    CHECK(expected == Catch::Approx(1.7578).margin(1e-4));
}

TEST_CASE("kl_divergence rejects support violations and non-distributions") {
    CHECK_THROWS_AS(kl_divergence({1.0, 0.0}, {0.0, 1.0}), DomainError);
    CHECK_THROWS_AS(kl_divergence({0.6, 0.6}, {0.5, 0.5}), DomainError);
}

TEST_CASE("kl_divergence nonnegative, zero iff equal") {
    RngStream rng(99, "kl-prop");
    for (int trial = 0; trial < 100; ++trial) {
        Vec p(8), q(8);
        double sp = 0.0, sq = 0.0;
        for (int i = 0; i < 8; ++i) {
            p[i] = rng.uniform() + 1e-3;
            q[i] = rng.uniform() + 1e-3;
            sp += p[i];
            sq += q[i];
        }
        for (int i = 0; i < 8; ++i) {
            p[i] /= sp;
            q[i] /= sq;
        }
        CHECK(kl_divergence(p, q) >= 0.0);
        CHECK(kl_divergence(p, p) <= 1e-12);
    }
}

TEST_CASE("RngStream replays identically for the same seed and label") {
    RngStream a(42, "ponder");
    RngStream b(42, "ponder");
    for (int i = 0; i < 10000; ++i) {
        REQUIRE(a.next_u64() == b.next_u64());
    }
}

TEST_CASE("RngStream streams with different labels are distinct") {
    RngStream a(42, "ponder");
    RngStream b(42, "grpo");
    int same = 0;
    for (int i = 0; i < 1000; ++i) {
        if (a.next_u64() == b.next_u64()) ++same;
    }
    CHECK(same == 0);
}

TEST_CASE("RngStream seek supports resuming mid-stream") {
    RngStream a(1, "x");
    for (int i = 0; i < 17; ++i) a.next_u64();
    RngStream b(1, "x");
    b.seek(a.cursor());
    CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("RngStream uniform draws stay in range and look uniform") {
    RngStream rng(5, "u");
    double sum = 0.0;
    for (int i = 0; i < 20000; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    CHECK(sum / 20000.0 == Catch::Approx(0.5).margin(0.01));
}
