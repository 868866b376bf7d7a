#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ponderlab/numerics.hpp"
#include "ponderlab/vocab.hpp"

namespace ponderlab {

constexpr int reward_component_count = 5;
inline const char* reward_component_name(int i) {
    static const char* names[reward_component_count] = {"acc", "flops", "comp", "qual", "rep"};
    return names[i];
}

struct RewardWeights {
    // Outer mixture weights (the flops and repetition terms carry their own
    // lambda/beta scaling and sign inside the component functions).
    double w_acc = 1.0;
    double w_flops = 0.15; // lambda_flops; z-score tails must stay under the exact-match gap
    double w_comp = 0.25;
    double w_qual = 0.5; // applied inside quality_reward
    double w_rep = 1.0;

    double w_exact = 1.0;
    double w_partial = 0.5;
    double theta_tol = 0.05;

    std::array<double, 4> w_stage = {0.25, 0.25, 0.25, 0.25}; // setup, compute, verify, conclude
    std::array<double, 3> beta_g = {0.1, 0.2, 0.3};           // 1/2/3-gram penalties

    int len_target = 8;
    double ppl_baseline = 25.0;
    double sigma_ppl = 20.0;

    double rho = 5.0;            // max imbalance ratio, must stay in [2, 10]
    double rebalance_rate = 0.1; // eta_w
    double target_magnitude = 0.5;

    void validate() const {
        if (w_acc < 0 || w_flops < 0 || w_comp < 0 || w_qual < 0 || w_rep < 0) {
            throw ConfigError("RewardWeights: mixture weights must be >= 0");
        }
        if (w_partial > w_exact) throw ConfigError("RewardWeights: w_partial must be <= w_exact");
        if (theta_tol <= 0) throw ConfigError("RewardWeights: theta_tol must be > 0");
        if (rho < 2.0 || rho > 10.0) throw ConfigError("RewardWeights: rho must be in [2,10]");
        if (sigma_ppl <= 0) throw ConfigError("RewardWeights: sigma_ppl must be > 0");
        if (len_target < 1) throw ConfigError("RewardWeights: len_target must be >= 1");
        if (rebalance_rate <= 0) throw ConfigError("RewardWeights: rebalance_rate must be > 0");
        if (target_magnitude <= 0) throw ConfigError("RewardWeights: target_magnitude must be > 0");
    }
};

// Exponential-moving-average FLOPs statistics; empty before the first sample.
struct FlopsStats {
    double mean = 0.0;
    double var = 0.0;
    double decay = 0.99;
    std::int64_t count = 0;

    bool empty() const { return count == 0; }
    double sigma() const { return std::sqrt(var); }
};

inline FlopsStats observe_flops(FlopsStats stats, std::int64_t flops) {
    if (flops < 0) throw DomainError("observe_flops: negative FLOPs");
    const double f = static_cast<double>(flops);
    if (stats.count == 0) {
        stats.mean = f;
        stats.var = 0.0;
    } else {
        stats.mean = stats.decay * stats.mean + (1.0 - stats.decay) * f;
        const double dev = f - stats.mean;
        stats.var = stats.decay * stats.var + (1.0 - stats.decay) * dev * dev;
    }
    ++stats.count;
    return stats;
}

struct RewardBreakdown {
    double acc = 0.0;
    double flops = 0.0;
    double comp = 0.0;
    double qual = 0.0;
    double rep = 0.0;
    double total = 0.0;
};

// Graduated accuracy: full credit on exact match, exponential partial credit
// inside the relative-error tolerance, nothing beyond it.
inline double accuracy_reward(double y_hat, double y, const RewardWeights& w) {
    if (!std::isfinite(y)) throw DomainError("accuracy_reward: ground truth not finite");
    const double err = std::abs(y_hat - y);
    if (err <= 1e-9) return w.w_exact;
    const double rel = err / (std::abs(y) + 1e-8);
    if (rel < w.theta_tol) return w.w_partial * std::exp(-rel);
    return 0.0;
}

// Z-scored against running history; zero until history exists.
inline double flops_reward(std::int64_t flops, const FlopsStats& stats, double lambda) {
    if (flops < 0) throw DomainError("flops_reward: negative FLOPs");
    if (stats.empty()) return 0.0;
    return -lambda * (static_cast<double>(flops) - stats.mean) / (stats.sigma() + 1e-8);
}

inline double completeness_reward(const TokenSeq& tokens, const RewardWeights& w) {
    constexpr Token stages[4] = {tok::stage_setup, tok::stage_compute, tok::stage_verify,
                                 tok::stage_conclude};
    double r = 0.0;
    for (int s = 0; s < 4; ++s) {
        for (Token t : tokens) {
            if (t == stages[s]) {
                r += w.w_stage[static_cast<std::size_t>(s)];
                break;
            }
        }
    }
    return r;
}

inline double quality_reward(int output_len, double ppl_proxy, const RewardWeights& w) {
    if (output_len < 0) throw DomainError("quality_reward: negative output length");
    if (ppl_proxy <= 0.0) throw DomainError("quality_reward: perplexity proxy must be > 0");
    if (w.sigma_ppl <= 0.0) throw ConfigError("quality_reward: sigma_ppl must be > 0");
    const double len_factor =
        std::min(1.0, static_cast<double>(output_len) / static_cast<double>(w.len_target));
    return w.w_qual * len_factor * std::exp(-(ppl_proxy - w.ppl_baseline) / w.sigma_ppl);
}

// repeated_g counts g-gram occurrences beyond each first distinct appearance.
inline double antirep_reward(const TokenSeq& tokens, double beta1, double beta2, double beta3) {
    if (tokens.empty()) return 0.0;
    const double betas[3] = {beta1, beta2, beta3};
    const double len = static_cast<double>(tokens.size());
    double r = 0.0;
    for (int g = 1; g <= 3; ++g) {
        if (static_cast<int>(tokens.size()) < g) continue;
        std::map<std::vector<Token>, int> seen;
        const int occ = static_cast<int>(tokens.size()) - g + 1;
        for (int i = 0; i < occ; ++i) {
            seen[std::vector<Token>(tokens.begin() + i, tokens.begin() + i + g)] += 1;
        }
        const int repeated = occ - static_cast<int>(seen.size());
        r -= betas[g - 1] * static_cast<double>(repeated) / len;
    }
    return r;
}

inline double antirep_reward(const TokenSeq& tokens, const RewardWeights& w) {
    return antirep_reward(tokens, w.beta_g[0], w.beta_g[1], w.beta_g[2]);
}

// Weighted total; flops and rep parts arrive already signed and lambda/beta
// scaled, quality arrives already w_qual scaled.
inline double reward_total(const RewardBreakdown& parts, const RewardWeights& w) {
    return w.w_acc * parts.acc + parts.flops + w.w_comp * parts.comp + parts.qual +
           w.w_rep * parts.rep;
}

inline RewardBreakdown score_output(double y_hat, double y, std::int64_t flops,
                                    const FlopsStats& stats, const TokenSeq& output_tokens,
                                    double ppl_proxy, const RewardWeights& w) {
    RewardBreakdown b;
    b.acc = accuracy_reward(y_hat, y, w);
    b.flops = flops_reward(flops, stats, w.w_flops);
    b.comp = completeness_reward(output_tokens, w);
    b.qual = quality_reward(static_cast<int>(output_tokens.size()), ppl_proxy, w);
    b.rep = antirep_reward(output_tokens, w);
    b.total = reward_total(b, w);
    return b;
}

// Multiplicative magnitude matching: w_i <- w_i exp(eta (ln target - ln mag_i)).
// Components with non-positive observed magnitude are left untouched.
inline RewardWeights rebalance(RewardWeights w,
                               const std::array<double, reward_component_count>& magnitudes,
                               double eta_w, double target_magnitude) {
    if (eta_w <= 0.0) throw DomainError("rebalance: eta_w must be > 0");
    if (target_magnitude <= 0.0) throw DomainError("rebalance: target magnitude must be > 0");
    double* weights[reward_component_count] = {&w.w_acc, &w.w_flops, &w.w_comp, &w.w_qual,
                                               &w.w_rep};
    for (int i = 0; i < reward_component_count; ++i) {
        const double mag = magnitudes[static_cast<std::size_t>(i)];
        if (mag <= 0.0) continue;
        *weights[i] *= std::exp(eta_w * (std::log(target_magnitude) - std::log(mag)));
    }
    return w;
}

struct BalanceReport {
    bool ok = true;
    std::vector<std::string> violations;
};

// Pairwise magnitude ratios must sit in [1/rho, rho]; additionally the
// efficiency-to-accuracy ratio must sit in the [0.1, 1.0] monitoring window.
inline BalanceReport balance_check(const std::array<double, reward_component_count>& magnitudes,
                                   double rho, double mean_acc_reward) {
    if (rho < 2.0 || rho > 10.0) throw DomainError("balance_check: rho must be in [2,10]");
    BalanceReport rep;
    for (int i = 0; i < reward_component_count; ++i) {
        for (int j = i + 1; j < reward_component_count; ++j) {
            const double a = magnitudes[static_cast<std::size_t>(i)];
            const double b = magnitudes[static_cast<std::size_t>(j)];
            if (a <= 0.0 && b <= 0.0) continue;
            const std::string pair = std::string(reward_component_name(i)) + "/" +
                                     reward_component_name(j);
            if (a <= 0.0 || b <= 0.0) {
                rep.ok = false;
                rep.violations.push_back(pair + ": zero magnitude");
                continue;
            }
            const double ratio = a / b;
            if (ratio < 1.0 / rho || ratio > rho) {
                rep.ok = false;
                rep.violations.push_back(pair + ": ratio " + std::to_string(ratio) +
                                         " outside [1/rho, rho]");
            }
        }
    }
    const double flops_mag = magnitudes[1];
    if (mean_acc_reward <= 0.0) {
        rep.ok = false;
        rep.violations.push_back("flops/acc: mean accuracy reward is not positive");
    } else {
        const double window = flops_mag / mean_acc_reward;
        if (window < 0.1 || window > 1.0) {
            rep.ok = false;
            rep.violations.push_back("flops/acc: ratio " + std::to_string(window) +
                                     " outside [0.1, 1.0]");
        }
    }
    return rep;
}

} // namespace ponderlab
