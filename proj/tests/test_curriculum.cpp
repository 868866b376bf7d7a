#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "ponderlab/curriculum.hpp"

using namespace ponderlab;

TEST_CASE("schedule boundary values and shape") {
    CHECK(curriculum_schedule(0, 500, 1500) == 1.0);
    CHECK(curriculum_schedule(499, 500, 1500) == 1.0);
    CHECK(curriculum_schedule(500, 500, 1500) == 1.0); // continuous at T1
    CHECK(curriculum_schedule(1000, 500, 1500) == 0.5);
    CHECK(curriculum_schedule(1500, 500, 1500) == 0.0);
    CHECK(curriculum_schedule(99999, 500, 1500) == 0.0);
    CHECK_THROWS_AS(curriculum_schedule(-1, 500, 1500), DomainError);
    CHECK_THROWS_AS(curriculum_schedule(5, 500, 400), DomainError);
}

TEST_CASE("schedule is monotone nonincreasing") {
    double prev = 2.0;
    for (int t = 0; t <= 2000; ++t) {
        const double p = curriculum_schedule(t, 500, 1500);
        CHECK(p <= prev + 1e-15);
        CHECK(p >= 0.0);
        CHECK(p <= 1.0);
        prev = p;
    }
}

TEST_CASE("guidance source sampling") {
    RngStream rng(1, "cur");
    for (int i = 0; i < 100; ++i) {
        CHECK(sample_source(1.0, rng) == GuidanceSource::teacher);
        CHECK(sample_source(0.0, rng) == GuidanceSource::student);
    }
    CHECK_THROWS_AS(sample_source(1.5, rng), DomainError);

    int teacher = 0;
    for (int i = 0; i < 10000; ++i) {
        if (sample_source(0.5, rng) == GuidanceSource::teacher) ++teacher;
    }
    CHECK(teacher >= 4800);
    CHECK(teacher <= 5200);
}

TEST_CASE("teacher action: continue to the target, then halt") {
    CHECK(teacher_action(0, 3) == 1);
    CHECK(teacher_action(1, 3) == 1);
    CHECK(teacher_action(2, 3) == 1);
    CHECK(teacher_action(3, 3) == 0);
    CHECK(teacher_action(5, 5) == 0); // halts at 5 before an 8-step cap
    CHECK_THROWS_AS(teacher_action(-1, 3), DomainError);
}

TEST_CASE("teacher targets drawn from [3,5] average to 4 halting steps") {
    RngStream rng(2, "teacher");
    double total = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
        const int target = static_cast<int>(rng.uniform_int(3, 5));
        int k = 0;
        while (teacher_action(k, target) == 1) ++k;
        total += k;
    }
    const double mean = total / n;
    CHECK(mean >= 3.9);
    CHECK(mean <= 4.1);
}

TEST_CASE("quality gate uses strict thresholds") {
    CHECK(quality_gate(0.3, 0.2, 0.2, 0.1));
    CHECK_FALSE(quality_gate(0.2, 0.2, 0.2, 0.1)); // equality rejects
    CHECK_FALSE(quality_gate(0.3, 0.05, 0.2, 0.1));
    CHECK_FALSE(quality_gate(0.1, 0.05, 0.2, 0.1));
}

TEST_CASE("FLOPs diversity and the alert threshold") {
    const auto equal = flops_diversity({100, 100, 100}, 1e-6);
    CHECK(equal.value == 0.0);
    CHECK(equal.alert);

    const auto pair = flops_diversity({1, 3}, 1e-6);
    CHECK(pair.value == Catch::Approx(0.25).margin(1e-12));
    CHECK_FALSE(pair.alert);

    // Threshold comparison is strict on the configured epsilon.
    const auto near = flops_diversity({1, 3}, 0.3);
    CHECK(near.alert);
    CHECK_THROWS_AS(flops_diversity({}, 1e-6), DomainError);

    const auto zeros = flops_diversity({0, 0}, 1e-6);
    CHECK(zeros.alert);
    CHECK(zeros.value == 0.0);
}

TEST_CASE("alert reinitialization draws fresh parameters each time") {
    const auto before = controller_init(64, 5, 0.7);
    RngStream cur(9, "curriculum");
    const auto after1 = reinit_on_alert(before, cur);
    const auto after2 = reinit_on_alert(after1, cur);

    CHECK(after1.temp == before.temp);
    CHECK(after1.d == before.d);
    CHECK(after1.t.checksum() != before.t.checksum());
    CHECK(after2.t.checksum() != after1.t.checksum());

    int differing = 0;
    for (std::size_t i = 0; i < before.t.w1.size(); ++i) {
        if (before.t.w1[i] != after1.t.w1[i]) ++differing;
    }
    CHECK(static_cast<double>(differing) >= 0.99 * static_cast<double>(before.t.w1.size()));
}

TEST_CASE("curriculum state validation") {
    CurriculumState c;
    CHECK_NOTHROW(c.validate());
    c.t1 = 1500;
    c.t2 = 500;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = CurriculumState{};
    c.eps_div = 0.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}
