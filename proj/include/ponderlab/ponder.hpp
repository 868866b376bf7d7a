#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "ponderlab/backbone.hpp"
#include "ponderlab/controller.hpp"
#include "ponderlab/numerics.hpp"
#include "ponderlab/reward.hpp"
#include "ponderlab/steering.hpp"

namespace ponderlab {

struct PonderConfig {
    double alpha0 = 0.5; // initial step scale
    double beta = 0.1;   // exponential decay rate
    double tau = 0.2;    // halting threshold
    int k_max = 8;
    double noise_std = 0.0;
    std::vector<int> layer_schedule; // reserved for multi-layer steering; empty = single layer

    void validate() const {
        if (alpha0 <= 0.0) throw ConfigError("PonderConfig: alpha0 must be > 0");
        if (beta < 0.0) throw ConfigError("PonderConfig: beta must be >= 0");
        if (tau < 0.0 || tau > 1.0) throw ConfigError("PonderConfig: tau must be in [0,1]");
        if (k_max < 0) throw ConfigError("PonderConfig: k_max must be >= 0");
        if (noise_std < 0.0) throw ConfigError("PonderConfig: noise_std must be >= 0");
    }
};

enum class StepSource { student, teacher };

struct StepRecord {
    Vec z;      // state the decision was made in
    double p;   // continue-probability
    int action; // 1 = continue, 0 = halt
    StepSource source = StepSource::student;
};

struct Trajectory {
    std::vector<StepRecord> steps;
    int halted_at = 0; // number of ponder steps actually applied
    std::int64_t flops = 0;
    AnswerDistribution output;
    RewardBreakdown rewards;
};

inline double decay(int k, double alpha0, double beta) {
    if (k < 0) throw DomainError("decay: k must be >= 0");
    return alpha0 * std::exp(-beta * k);
}

inline Vec ponder_step(const Vec& z, const SteeringVector& h, double alpha,
                       const Vec* noise = nullptr) {
    require_same_dim(z, h.direction, "ponder_step");
    Vec out = z;
    axpy(alpha, h.direction, out);
    if (noise != nullptr) {
        require_same_dim(z, *noise, "ponder_step noise");
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += (*noise)[i];
    }
    return out;
}

// Geometric-series cap on total displacement. T absent means unbounded steps,
// which requires beta > 0.
inline double drift_bound(double alpha0, double beta, std::optional<int> steps, double h_norm) {
    if (beta < 0.0) throw DomainError("drift_bound: beta must be >= 0");
    if (!steps.has_value()) {
        if (beta == 0.0) throw DomainError("drift_bound: undefined for beta=0 and unbounded T");
        return alpha0 / (1.0 - std::exp(-beta)) * h_norm;
    }
    const int t = *steps;
    if (t < 0) throw DomainError("drift_bound: T must be >= 0");
    if (beta == 0.0) return static_cast<double>(t) * alpha0 * h_norm; // limit of the formula
    return alpha0 * (1.0 - std::exp(-beta * t)) / (1.0 - std::exp(-beta)) * h_norm;
}

using TeacherPolicy = std::function<int(int struck_step)>;

// The adaptive pondering loop. Each iteration evaluates the controller,
// samples (or teacher-overrides) the continue action, halts when the action is
// 0 or the probability falls to the threshold, and otherwise applies one
// decay-scaled steering step. A non-empty layer schedule cycles through the
// supplied per-layer steering vectors; by default the single vector is used at
// every step. FLOPs: the encode cost plus, per executed step, one steering add
// and one controller evaluation, plus the final decode. The evaluation that
// triggers the halt is not charged.
inline Trajectory ponder_run_scheduled(const Backbone& backbone,
                                       const ControllerParams& controller,
                                       const std::vector<SteeringVector>& steering_set,
                                       const PonderConfig& cfg, const Vec& z0, int prompt_len,
                                       RngStream& rng, const TeacherPolicy& teacher = nullptr) {
    cfg.validate();
    if (steering_set.empty()) throw DomainError("ponder_run: no steering vectors");
    for (const auto& sv : steering_set) {
        if (sv.backbone_checksum != backbone.checksum()) {
            throw DomainError("ponder_run: steering vector from a different backbone");
        }
    }
    auto vector_for_step = [&](int k) -> const SteeringVector& {
        if (cfg.layer_schedule.empty()) return steering_set.front();
        const int layer =
            cfg.layer_schedule[static_cast<std::size_t>(k) % cfg.layer_schedule.size()];
        for (const auto& sv : steering_set) {
            if (sv.layer == layer) return sv;
        }
        throw DomainError("ponder_run: layer schedule names layer " + std::to_string(layer) +
                          " with no extracted steering vector");
    };

    const CostModel cost = backbone.cost_model();
    Trajectory traj;
    traj.flops = cost.encode(prompt_len);
    Vec z = z0;
    int k = 0;
    bool halted = false;
    while (k < cfg.k_max && !halted) {
        const double p = controller_forward(controller, z);
        int action = rng.bernoulli(p) ? 1 : 0;
        StepSource source = StepSource::student;
        if (teacher) {
            action = teacher(k) != 0 ? 1 : 0;
            source = StepSource::teacher;
        }
        traj.steps.push_back({z, p, action, source});
        if (action == 0 || p <= cfg.tau) {
            halted = true;
        } else {
            const double alpha = decay(k, cfg.alpha0, cfg.beta);
            if (cfg.noise_std > 0.0) {
                Vec noise(z.size());
                for (double& x : noise) x = cfg.noise_std * rng.gaussian();
                z = ponder_step(z, vector_for_step(k), alpha, &noise);
            } else {
                z = ponder_step(z, vector_for_step(k), alpha);
            }
            ++k;
            traj.flops += cost.ponder_step() + cost.controller_eval();
        }
    }
    traj.halted_at = k;
    traj.output = backbone.decode(z);
    traj.flops += cost.decode();
    return traj;
}

inline Trajectory ponder_run(const Backbone& backbone, const ControllerParams& controller,
                             const SteeringVector& h, const PonderConfig& cfg, const Vec& z0,
                             int prompt_len, RngStream& rng,
                             const TeacherPolicy& teacher = nullptr) {
    if (!cfg.layer_schedule.empty()) {
        throw DomainError("ponder_run: a layer schedule needs the steering-set overload");
    }
    return ponder_run_scheduled(backbone, controller, {h}, cfg, z0, prompt_len, rng, teacher);
}

} // namespace ponderlab
