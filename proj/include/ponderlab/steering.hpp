#pragma once

#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "ponderlab/backbone.hpp"
#include "ponderlab/numerics.hpp"
#include "ponderlab/tasks.hpp"

namespace ponderlab {

struct SteeringVector {
    Vec direction; // unit L2 norm
    int layer = 0;
    int extraction_size = 0;
    double raw_norm = 0.0;
    std::uint64_t backbone_checksum = 0;
};

// Problems only; the think/direct variants differ in the prepended marker.
struct ContrastiveSet {
    std::vector<TokenSeq> problems;
};

inline TokenSeq contrast_prompt(const TokenSeq& problem, Mode mode) {
    TokenSeq p;
    p.reserve(prompt_width);
    p.push_back(mode == Mode::think ? tok::mark_think : tok::mark_direct);
    p.insert(p.end(), problem.begin(), problem.end());
    if (p.size() > prompt_width) throw DomainError("contrast_prompt: problem too long");
    p.resize(prompt_width, tok::pad);
    return p;
}

// Mean contrastive activation difference at one layer, normalized to unit L2.
inline SteeringVector extract_from_pairs(const Backbone& backbone,
                                         const std::vector<TokenSeq>& plus_prompts,
                                         const std::vector<TokenSeq>& minus_prompts, int layer) {
    if (plus_prompts.empty() || plus_prompts.size() != minus_prompts.size()) {
        throw DomainError("extract_from_pairs: need matching non-empty prompt lists");
    }
    if (layer < 0 || layer >= backbone.config().num_layers) {
        throw DomainError("extract_from_pairs: layer out of range");
    }
    Vec sum(static_cast<std::size_t>(backbone.config().dim), 0.0);
    for (std::size_t i = 0; i < plus_prompts.size(); ++i) {
        const auto plus = backbone.encode(plus_prompts[i]);
        const auto minus = backbone.encode(minus_prompts[i]);
        const Vec& hp = plus.per_layer[static_cast<std::size_t>(layer)];
        const Vec& hm = minus.per_layer[static_cast<std::size_t>(layer)];
        for (std::size_t j = 0; j < sum.size(); ++j) sum[j] += hp[j] - hm[j];
    }
    const double z = norm2(sum);
    if (z < 1e-12) {
        throw DegenerateContrast("extract: aggregate contrast difference is (near) zero");
    }
    SteeringVector sv;
    sv.direction = scaled(sum, 1.0 / z);
    sv.layer = layer;
    sv.extraction_size = static_cast<int>(plus_prompts.size());
    sv.raw_norm = z;
    sv.backbone_checksum = backbone.checksum();
    return sv;
}

inline SteeringVector extract(const Backbone& backbone, const ContrastiveSet& set, int layer) {
    std::vector<TokenSeq> plus, minus;
    plus.reserve(set.problems.size());
    minus.reserve(set.problems.size());
    for (const auto& prob : set.problems) {
        plus.push_back(contrast_prompt(prob, Mode::think));
        minus.push_back(contrast_prompt(prob, Mode::direct));
    }
    return extract_from_pairs(backbone, plus, minus, layer);
}

inline int default_extraction_layer(const Backbone& backbone) {
    return backbone.config().num_layers - 2; // second-to-last
}

// Extraction problems drawn uniformly over the five difficulty levels.
inline ContrastiveSet make_contrastive_set(int count, std::uint64_t seed) {
    if (count < 1) throw DomainError("make_contrastive_set: count must be >= 1");
    ContrastiveSet set;
    set.problems.reserve(static_cast<std::size_t>(count));
    RngStream levels(seed, "contrast-levels");
    for (int i = 0; i < count; ++i) {
        const int level = static_cast<int>(levels.uniform_int(1, 5));
        set.problems.push_back(generate_one_task(level, seed, i).prompt);
    }
    return set;
}

// Mean angle (radians) between size-N estimates and the max-N estimate.
inline std::vector<std::pair<int, double>> convergence_probe(const Backbone& backbone,
                                                             const std::vector<int>& n_list,
                                                             int trials, std::uint64_t seed) {
    if (n_list.empty()) throw DomainError("convergence_probe: empty size list");
    for (std::size_t i = 1; i < n_list.size(); ++i) {
        if (n_list[i] <= n_list[i - 1]) throw DomainError("convergence_probe: sizes must increase");
    }
    if (trials < 10) throw DomainError("convergence_probe: trials must be >= 10");

    const int layer = default_extraction_layer(backbone);
    const int n_ref = n_list.back();
    const auto ref = extract(backbone, make_contrastive_set(n_ref, seed ^ 0x5EEDULL), layer);

    std::vector<std::pair<int, double>> out;
    for (std::size_t ni = 0; ni < n_list.size(); ++ni) {
        double angle_sum = 0.0;
        for (int t = 0; t < trials; ++t) {
            const std::uint64_t trial_seed =
                detail::splitmix64(seed ^ (ni * 1000003ULL + static_cast<std::uint64_t>(t)));
            const auto est =
                extract(backbone, make_contrastive_set(n_list[ni], trial_seed), layer);
            double c = dot(est.direction, ref.direction);
            c = std::min(1.0, std::max(-1.0, c));
            angle_sum += std::acos(c);
        }
        out.emplace_back(n_list[ni], angle_sum / trials);
    }
    return out;
}

// KL between the decoded distributions of the steered and unsteered state.
inline double reasoning_divergence(const Backbone& backbone, const Vec& z0,
                                   const SteeringVector& h, double alpha) {
    if (alpha < 0.0) throw DomainError("reasoning_divergence: alpha must be >= 0");
    Vec z = z0;
    axpy(alpha, h.direction, z);
    const auto steered = backbone.decode(z);
    const auto base = backbone.decode(z0);
    return kl_divergence(steered.probabilities, base.probabilities);
}

} // namespace ponderlab
