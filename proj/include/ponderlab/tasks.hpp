#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ponderlab/numerics.hpp"
#include "ponderlab/vocab.hpp"

namespace ponderlab {

// One synthetic arithmetic problem. The prompt holds the problem tokens only;
// a mode marker is prepended by the caller (see build_prompt).
struct TaskInstance {
    std::string id;
    int level = 1; // 1..5 = number of chained operations
    TokenSeq prompt;
    double ground_truth = 0.0;
    TokenSeq reference_stages; // markers a complete reference solution would carry
};

struct GradeResult {
    bool exact = false;
    double rel_error = 0.0;
};

inline GradeResult grade(double y_hat, double y) {
    if (!std::isfinite(y)) throw DomainError("grade: ground truth not finite");
    GradeResult g;
    const double err = std::abs(y_hat - y);
    g.exact = err <= 1e-9;
    g.rel_error = err / (std::abs(y) + 1e-8);
    return g;
}

namespace task_detail {

constexpr long long value_cap = 500; // keeps exact float comparison safe

struct Chain {
    std::vector<long long> operands; // level+1 entries, each 1..9
    std::vector<Token> ops;          // level entries from {+,-,*}
};

// Left-to-right evaluation of the first n_ops operations.
inline long long eval_chain(const Chain& c, std::size_t n_ops) {
    long long v = c.operands.at(0);
    for (std::size_t i = 0; i < n_ops; ++i) {
        const long long rhs = c.operands.at(i + 1);
        switch (c.ops.at(i)) {
            case tok::plus: v += rhs; break;
            case tok::minus: v -= rhs; break;
            case tok::times: v *= rhs; break;
            default: throw DomainError("eval_chain: bad operator token");
        }
    }
    return v;
}

inline bool chain_ok(const Chain& c) {
    int n_times = 0;
    for (Token t : c.ops) {
        if (t == tok::times) ++n_times;
    }
    if (n_times > 2) return false;
    for (std::size_t k = 1; k <= c.ops.size(); ++k) {
        if (std::llabs(eval_chain(c, k)) > value_cap) return false;
    }
    // The "direct guess" (chain with the last op dropped) must differ from the
    // full answer, otherwise the task cannot distinguish shallow from deep work.
    return eval_chain(c, c.ops.size()) != eval_chain(c, c.ops.size() - 1);
}

inline Chain sample_chain(int level, RngStream& rng) {
    for (int attempt = 0; attempt < 1000; ++attempt) {
        Chain c;
        c.operands.resize(static_cast<std::size_t>(level) + 1);
        c.ops.resize(static_cast<std::size_t>(level));
        for (auto& v : c.operands) v = rng.uniform_int(1, 9);
        for (auto& o : c.ops) {
            switch (rng.uniform_int(0, 2)) {
                case 0: o = tok::plus; break;
                case 1: o = tok::minus; break;
                default: o = tok::times; break;
            }
        }
        if (chain_ok(c)) return c;
    }
    throw DomainError("sample_chain: rejection sampling failed"); // unreachable in practice
}

inline TokenSeq chain_tokens(const Chain& c) {
    TokenSeq t;
    t.push_back(static_cast<Token>(c.operands[0]));
    for (std::size_t i = 0; i < c.ops.size(); ++i) {
        t.push_back(c.ops[i]);
        t.push_back(static_cast<Token>(c.operands[i + 1]));
    }
    return t;
}

} // namespace task_detail

// Deterministic generation: instance (seed, level, index) always yields the
// same task regardless of batch composition.
inline TaskInstance generate_one_task(int level, std::uint64_t seed, int index) {
    if (level < 1 || level > 5) throw DomainError("generate_one_task: level must be in [1,5]");
    RngStream rng(seed, "tasks/L" + std::to_string(level) + "#" + std::to_string(index));
    task_detail::Chain c = task_detail::sample_chain(level, rng);
    TaskInstance t;
    t.id = "L" + std::to_string(level) + "-" + std::to_string(seed) + "-" + std::to_string(index);
    t.level = level;
    t.prompt = task_detail::chain_tokens(c);
    t.ground_truth = static_cast<double>(task_detail::eval_chain(c, c.ops.size()));
    t.reference_stages = {tok::stage_setup, tok::stage_compute, tok::stage_verify,
                          tok::stage_conclude};
    return t;
}

inline std::vector<TaskInstance> generate_tasks(int level, int count, std::uint64_t seed) {
    if (count < 1) throw DomainError("generate_tasks: count must be >= 1");
    std::vector<TaskInstance> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) out.push_back(generate_one_task(level, seed, i));
    return out;
}

// count must divide evenly across the five levels so proportions are exact.
inline std::vector<TaskInstance> generate_suite(int count, std::uint64_t seed) {
    if (count < 5 || count % 5 != 0) {
        throw DomainError("generate_suite: count must be a positive multiple of 5");
    }
    std::vector<TaskInstance> suite;
    suite.reserve(static_cast<std::size_t>(count));
    const int per_level = count / 5;
    for (int level = 1; level <= 5; ++level) {
        auto part = generate_tasks(level, per_level, seed);
        suite.insert(suite.end(), part.begin(), part.end());
    }
    return suite;
}

// Fixed-width prompt: [marker?] + problem + pads. Constant length keeps encode
// FLOPs identical across tasks, so batch FLOPs variance reflects pondering only.
constexpr int prompt_width = 16;

inline TokenSeq build_prompt(const TaskInstance& task, Mode mode) {
    TokenSeq p;
    p.reserve(prompt_width);
    if (mode == Mode::think) p.push_back(tok::mark_think);
    if (mode == Mode::direct) p.push_back(tok::mark_direct);
    p.insert(p.end(), task.prompt.begin(), task.prompt.end());
    if (p.size() > prompt_width) throw DomainError("build_prompt: prompt exceeds fixed width");
    p.resize(prompt_width, tok::pad);
    return p;
}

} // namespace ponderlab
