#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "ponderlab/controller.hpp"
#include "ponderlab/numerics.hpp"
#include "ponderlab/ponder.hpp"

namespace ponderlab {

enum class BaselineMode { group_mean, leave_one_out };

struct GrpoConfig {
    int group_size = 8;
    double learning_rate = 5e-4;
    double entropy_coeff = 0.005;
    BaselineMode baseline = BaselineMode::group_mean;
    bool include_teacher_steps = true;
    double clip_norm = 25.0;

    void validate() const {
        if (group_size < 2) throw ConfigError("GrpoConfig: group_size must be >= 2");
        if (learning_rate <= 0.0) throw ConfigError("GrpoConfig: learning_rate must be > 0");
        if (entropy_coeff < 0.0) throw ConfigError("GrpoConfig: entropy_coeff must be >= 0");
        if (clip_norm <= 0.0) throw ConfigError("GrpoConfig: clip_norm must be > 0");
    }
};

struct Grouping {
    std::vector<std::vector<int>> groups; // trajectory indices, every group exactly G strong
};

// Random permutation, then contiguous chunks of G. Batches that do not divide
// evenly are rejected rather than padded.
inline Grouping partition(int batch_size, int group_size, RngStream& rng) {
    if (group_size < 2) throw DomainError("partition: group size must be >= 2");
    if (batch_size <= 0 || batch_size % group_size != 0) {
        throw DomainError("partition: batch size " + std::to_string(batch_size) +
                          " not divisible by group size " + std::to_string(group_size));
    }
    std::vector<int> perm(static_cast<std::size_t>(batch_size));
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = batch_size - 1; i > 0; --i) {
        const auto j = static_cast<std::size_t>(rng.uniform_int(0, i));
        std::swap(perm[static_cast<std::size_t>(i)], perm[j]);
    }
    Grouping g;
    for (int start = 0; start < batch_size; start += group_size) {
        g.groups.emplace_back(perm.begin() + start, perm.begin() + start + group_size);
    }
    return g;
}

// Group-relative advantages. group_mean subtracts the within-group average
// (zero-sum per group); leave_one_out excludes the trajectory itself from its
// baseline, which keeps the policy-gradient estimator exactly unbiased.
inline std::vector<double> advantages(const std::vector<double>& rewards, const Grouping& grouping,
                                      BaselineMode mode) {
    std::vector<double> out(rewards.size(), 0.0);
    std::vector<bool> covered(rewards.size(), false);
    for (const auto& group : grouping.groups) {
        double sum = 0.0;
        for (int idx : group) {
            if (idx < 0 || static_cast<std::size_t>(idx) >= rewards.size() ||
                covered[static_cast<std::size_t>(idx)]) {
                throw DomainError("advantages: invalid grouping");
            }
            covered[static_cast<std::size_t>(idx)] = true;
            sum += rewards[static_cast<std::size_t>(idx)];
        }
        const auto g = static_cast<double>(group.size());
        for (int idx : group) {
            const double r = rewards[static_cast<std::size_t>(idx)];
            if (mode == BaselineMode::group_mean) {
                out[static_cast<std::size_t>(idx)] = r - sum / g;
            } else {
                out[static_cast<std::size_t>(idx)] = r - (sum - r) / (g - 1.0);
            }
        }
    }
    for (bool c : covered) {
        if (!c) throw DomainError("advantages: grouping does not cover the batch");
    }
    return out;
}

// Ascent gradient of the GRPO objective over a contiguous trajectory range:
// sum_i A_i sum_k grad log pi(a_k|z_k) plus the entropy bonus. Teacher-sourced
// steps are included by default.
inline void assemble_gradient_range(const std::vector<Trajectory>& batch,
                                    const std::vector<double>& advs,
                                    const ControllerParams& controller, double entropy_coeff,
                                    bool include_teacher_steps, std::size_t begin,
                                    std::size_t end, ControllerTensors& grad) {
    controller_detail::ForwardCache cache;
    for (std::size_t i = begin; i < end; ++i) {
        for (const StepRecord& step : batch[i].steps) {
            if (!include_teacher_steps && step.source == StepSource::teacher) continue;
            controller_detail::forward_cached(controller, step.z, cache);
            const double p = cache.p;
            double d_logit = advs[i] * (static_cast<double>(step.action) - p) / controller.temp;
            if (entropy_coeff > 0.0) {
                d_logit += entropy_coeff * p * (1.0 - p) * std::log((1.0 - p) / p) /
                           controller.temp;
            }
            controller_detail::backprop_accumulate(controller, cache, d_logit, grad);
        }
    }
}

inline ControllerTensors assemble_gradient(const std::vector<Trajectory>& batch,
                                           const std::vector<double>& advs,
                                           const ControllerParams& controller,
                                           double entropy_coeff, bool include_teacher_steps = true) {
    if (batch.size() != advs.size()) {
        throw DomainError("assemble_gradient: per-trajectory records missing (batch/advantage "
                          "size mismatch)");
    }
    ControllerTensors grad = ControllerTensors::zeros(controller.d);
    assemble_gradient_range(batch, advs, controller, entropy_coeff, include_teacher_steps, 0,
                            batch.size(), grad);
    return grad;
}

// Returns the scale factor applied (1.0 when no clipping happened).
inline double clip_global_norm(ControllerTensors& grad, double max_norm) {
    const double n = std::sqrt(grad.sq_norm());
    if (n <= max_norm || n == 0.0) return 1.0;
    grad.scale(max_norm / n);
    return max_norm / n;
}

// Plain ascent step; rejects non-finite gradients and re-checks the budget.
inline ControllerParams apply_update(ControllerParams params, const ControllerTensors& grad,
                                     double learning_rate) {
    if (!grad.finite()) throw DomainError("apply_update: non-finite gradient");
    params.t.add_scaled(grad, learning_rate);
    params.check_budget();
    return params;
}

// ---------------------------------------------------------------------------
// Diagnostic probes
// ---------------------------------------------------------------------------

// Two-state, at-most-two-step MDP small enough to enumerate: halt at step 0,
// continue then halt, or continue twice and hit the cap.
struct TinyMdp {
    Vec z0, z1;
    double reward_halt0 = 0.0;
    double reward_cont_halt = 0.0;
    double reward_cont_cont = 0.0;
};

struct UnbiasednessReport {
    int samples = 0;
    int group_size = 0;
    double max_abs_z = 0.0;      // max |mc - exact| / SE over coordinates
    int coords_checked = 0;
    int coords_over_3se = 0;
    bool within_3se = false;
    double exact_grad_norm = 0.0;
    double mc_grad_norm = 0.0;
};

// Compares the Monte-Carlo mean of the GRPO estimator (leave-one-out baseline;
// the group-mean variant contracts the expectation by (G-1)/G) against the
// exact policy gradient from full trajectory enumeration.
inline UnbiasednessReport unbiasedness_probe(const ControllerParams& controller,
                                             const TinyMdp& mdp, int samples, int group_size,
                                             RngStream& rng,
                                             BaselineMode mode = BaselineMode::leave_one_out) {
    if (samples <= 0) throw DomainError("unbiasedness_probe: samples must be > 0");
    if (group_size < 2) throw DomainError("unbiasedness_probe: group size must be >= 2");
    if (samples % group_size != 0) {
        throw DomainError("unbiasedness_probe: samples must divide into full groups");
    }

    const double p0 = controller_forward(controller, mdp.z0);
    const double p1 = controller_forward(controller, mdp.z1);

    // Primitive per-(state, action) score gradients.
    const LogProbGradient g_halt0 = logprob_and_grad(controller, mdp.z0, 0).grad;
    const LogProbGradient g_cont0 = logprob_and_grad(controller, mdp.z0, 1).grad;
    const LogProbGradient g_halt1 = logprob_and_grad(controller, mdp.z1, 0).grad;
    const LogProbGradient g_cont1 = logprob_and_grad(controller, mdp.z1, 1).grad;
    const ControllerTensors* prim[4] = {&g_halt0, &g_cont0, &g_halt1, &g_cont1};

    // Exact gradient: sum over the three outcomes of r * P * grad log P.
    // Outcome coefficient vectors over the primitives above.
    const double probs[3] = {1.0 - p0, p0 * (1.0 - p1), p0 * p1};
    const double rewards[3] = {mdp.reward_halt0, mdp.reward_cont_halt, mdp.reward_cont_cont};
    const double outcome_w[3][4] = {
        {1.0, 0.0, 0.0, 0.0}, // halt at 0
        {0.0, 1.0, 1.0, 0.0}, // continue, halt
        {0.0, 1.0, 0.0, 1.0}, // continue, continue (cap)
    };
    double exact_coeff[4] = {0, 0, 0, 0};
    for (int o = 0; o < 3; ++o) {
        for (int q = 0; q < 4; ++q) exact_coeff[q] += rewards[o] * probs[o] * outcome_w[o][q];
    }

    // Monte-Carlo: accumulate per-sample primitive coefficients w_i = A_i *
    // outcome_w, their first moment, and the 4x4 second-moment matrix. The
    // per-coordinate mean and variance follow from these because every sample
    // gradient is a linear combination of the four primitives.
    double s1[4] = {0, 0, 0, 0};
    double s2[4][4] = {{0}};
    std::vector<int> outcome(static_cast<std::size_t>(group_size));
    std::vector<double> reward(static_cast<std::size_t>(group_size));
    const int n_groups = samples / group_size;
    for (int g = 0; g < n_groups; ++g) {
        double sum_r = 0.0;
        for (int i = 0; i < group_size; ++i) {
            const bool cont0 = rng.bernoulli(p0);
            int o = 0;
            if (cont0) o = rng.bernoulli(p1) ? 2 : 1;
            outcome[static_cast<std::size_t>(i)] = o;
            reward[static_cast<std::size_t>(i)] = rewards[o];
            sum_r += rewards[o];
        }
        for (int i = 0; i < group_size; ++i) {
            const double r = reward[static_cast<std::size_t>(i)];
            const double adv = (mode == BaselineMode::group_mean)
                                   ? r - sum_r / group_size
                                   : r - (sum_r - r) / (group_size - 1.0);
            const double* w = outcome_w[outcome[static_cast<std::size_t>(i)]];
            for (int q = 0; q < 4; ++q) {
                const double wq = adv * w[q];
                s1[q] += wq;
                for (int q2 = 0; q2 < 4; ++q2) s2[q][q2] += wq * adv * w[q2];
            }
        }
    }

    UnbiasednessReport rep;
    rep.samples = samples;
    rep.group_size = group_size;
    const double n = static_cast<double>(samples);
    double exact_sq = 0.0, mc_sq = 0.0;

    auto check_coord = [&](double prim_vals[4]) {
        double exact = 0.0, mean = 0.0, second = 0.0;
        for (int q = 0; q < 4; ++q) {
            exact += exact_coeff[q] * prim_vals[q];
            mean += s1[q] * prim_vals[q];
            for (int q2 = 0; q2 < 4; ++q2) {
                second += s2[q][q2] * prim_vals[q] * prim_vals[q2];
            }
        }
        mean /= n;
        const double var = std::max(0.0, (second - n * mean * mean) / (n - 1.0));
        const double se = std::sqrt(var / n);
        exact_sq += exact * exact;
        mc_sq += mean * mean;
        rep.coords_checked += 1;
        double zscore = 0.0;
        if (se > 0.0) {
            zscore = std::abs(mean - exact) / se;
        } else if (std::abs(mean - exact) > 1e-12) {
            zscore = 1e9; // deterministic disagreement
        }
        rep.max_abs_z = std::max(rep.max_abs_z, zscore);
        if (zscore > 3.0) rep.coords_over_3se += 1;
    };

    auto prim_arrays0 = prim[0]->arrays();
    auto prim_arrays1 = prim[1]->arrays();
    auto prim_arrays2 = prim[2]->arrays();
    auto prim_arrays3 = prim[3]->arrays();
    for (std::size_t a = 0; a < prim_arrays0.size(); ++a) {
        for (std::size_t i = 0; i < prim_arrays0[a]->size(); ++i) {
            double vals[4] = {(*prim_arrays0[a])[i], (*prim_arrays1[a])[i], (*prim_arrays2[a])[i],
                              (*prim_arrays3[a])[i]};
            check_coord(vals);
        }
    }
    double vals_b[4] = {prim[0]->head_b, prim[1]->head_b, prim[2]->head_b, prim[3]->head_b};
    check_coord(vals_b);

    rep.exact_grad_norm = std::sqrt(exact_sq);
    rep.mc_grad_norm = std::sqrt(mc_sq);
    rep.within_3se = rep.coords_over_3se == 0;
    return rep;
}

struct VarianceProbeModel {
    double reward_mean = 2.0;
    double reward_sigma = 1.0;
    double continue_prob = 0.5;
    double temp = 1.0;
};

struct VarianceProbeResult {
    std::vector<std::pair<int, double>> grpo_variance_by_group; // (G, Var)
    double reinforce_variance = 0.0;
};

// Single-state Bernoulli policy with rewards i.i.d. and independent of actions;
// reports the empirical variance of the per-trajectory gradient contribution at
// the logit coordinate, for REINFORCE (raw reward) and GRPO (leave-one-out).
inline VarianceProbeResult variance_probe(const std::vector<int>& group_sizes, int trials,
                                          const VarianceProbeModel& model, RngStream& rng) {
    if (trials < 1000) throw DomainError("variance_probe: trials must be >= 1000");
    for (int g : group_sizes) {
        if (g < 2) throw DomainError("variance_probe: group sizes must be >= 2");
    }

    auto score = [&model](RngStream& r) {
        const int a = r.bernoulli(model.continue_prob) ? 1 : 0;
        return (static_cast<double>(a) - model.continue_prob) / model.temp;
    };
    auto draw_reward = [&model](RngStream& r) {
        return model.reward_mean + model.reward_sigma * r.gaussian();
    };

    VarianceProbeResult res;
    {
        double sum = 0.0, sum2 = 0.0;
        for (int t = 0; t < trials; ++t) {
            const double est = draw_reward(rng) * score(rng);
            sum += est;
            sum2 += est * est;
        }
        const double n = trials;
        res.reinforce_variance = (sum2 - sum * sum / n) / (n - 1.0);
    }
    for (int g : group_sizes) {
        double sum = 0.0, sum2 = 0.0;
        std::int64_t n_samples = 0;
        std::vector<double> rewards(static_cast<std::size_t>(g));
        const int n_groups = trials / g;
        for (int t = 0; t < n_groups; ++t) {
            double total = 0.0;
            for (int i = 0; i < g; ++i) {
                rewards[static_cast<std::size_t>(i)] = draw_reward(rng);
                total += rewards[static_cast<std::size_t>(i)];
            }
            for (int i = 0; i < g; ++i) {
                const double r = rewards[static_cast<std::size_t>(i)];
                const double adv = r - (total - r) / (g - 1.0);
                const double est = adv * score(rng);
                sum += est;
                sum2 += est * est;
                ++n_samples;
            }
        }
        const double n = static_cast<double>(n_samples);
        res.grpo_variance_by_group.emplace_back(g, (sum2 - sum * sum / n) / (n - 1.0));
    }
    return res;
}

} // namespace ponderlab
