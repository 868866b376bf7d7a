#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <map>

#include "ponderlab/tasks.hpp"

using namespace ponderlab;

namespace {

// Independent reference solver: re-evaluates the prompt tokens left-to-right.
double oracle_solve(const TokenSeq& prompt) {
    double value = 0.0;
    bool have = false;
    Token op = tok::pad;
    for (Token t : prompt) {
        if (tok::is_digit(t)) {
            if (!have) {
                value = t;
                have = true;
            } else {
                if (op == tok::plus) value += t;
                if (op == tok::minus) value -= t;
                if (op == tok::times) value *= t;
                op = tok::pad;
            }
        } else if (t == tok::plus || t == tok::minus || t == tok::times) {
            op = t;
        }
    }
    return value;
}

} // namespace

TEST_CASE("generation is deterministic per (seed, level, index)") {
    const auto a = generate_tasks(3, 50, 7);
    const auto b = generate_tasks(3, 50, 7);
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].prompt == b[i].prompt);
        CHECK(a[i].ground_truth == b[i].ground_truth);
        CHECK(a[i].id == b[i].id);
    }
    CHECK(generate_one_task(3, 7, 11).prompt == a[11].prompt);
}

TEST_CASE("suite level proportions are exact") {
    const auto suite = generate_suite(250, 3);
    std::map<int, int> by_level;
    for (const auto& t : suite) by_level[t.level] += 1;
    for (int level = 1; level <= 5; ++level) CHECK(by_level[level] == 50);
}

TEST_CASE("invalid generator arguments are rejected") {
    CHECK_THROWS_AS(generate_tasks(0, 5, 1), DomainError);
    CHECK_THROWS_AS(generate_tasks(6, 5, 1), DomainError);
    CHECK_THROWS_AS(generate_tasks(2, 0, 1), DomainError);
    CHECK_THROWS_AS(generate_suite(7, 1), DomainError);
}

TEST_CASE("oracle solver agrees with stored ground truth on a large sample") {
    // 100k instances spread across levels.
    for (int level = 1; level <= 5; ++level) {
        const auto tasks = generate_tasks(level, 20000, 99);
        for (const auto& t : tasks) {
            REQUIRE(oracle_solve(t.prompt) == t.ground_truth);
            REQUIRE(std::abs(t.ground_truth) <= 500.0);
            REQUIRE(t.level == level);
        }
    }
}

TEST_CASE("prompts have the declared shape") {
    const auto tasks = generate_tasks(5, 100, 13);
    for (const auto& t : tasks) {
        CHECK(t.prompt.size() == 11); // 6 operands, 5 operators
        const auto padded = build_prompt(t, Mode::direct);
        CHECK(padded.size() == static_cast<std::size_t>(prompt_width));
        CHECK(padded[0] == tok::mark_direct);
        CHECK(t.reference_stages.size() == 4);
    }
}

TEST_CASE("grade distinguishes exact from approximate") {
    const auto exact = grade(42.0, 42.0);
    CHECK(exact.exact);
    CHECK(exact.rel_error == 0.0);

    const auto near = grade(101.0, 100.0);
    CHECK_FALSE(near.exact);
    CHECK(near.rel_error == Catch::Approx(0.01).margin(1e-9));

    const auto zero = grade(0.0, 0.0);
    CHECK(zero.exact);
}
