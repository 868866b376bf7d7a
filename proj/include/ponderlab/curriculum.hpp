#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "ponderlab/controller.hpp"
#include "ponderlab/numerics.hpp"

namespace ponderlab {

struct CurriculumState {
    int t1 = 500;
    int t2 = 1500;
    int t = 0;
    double theta_comp = 0.2;
    double theta_qual = 0.1;
    double eps_div = 1e-6;
    int teacher_target_min = 3;
    int teacher_target_max = 5;

    void validate() const {
        if (!(0 < t1 && t1 < t2)) throw ConfigError("CurriculumState: need 0 < T1 < T2");
        if (eps_div <= 0.0) throw ConfigError("CurriculumState: eps_div must be > 0");
        if (teacher_target_min < 0 || teacher_target_max < teacher_target_min) {
            throw ConfigError("CurriculumState: bad teacher target range");
        }
    }
};

// Piecewise-linear teacher probability: 1 before T1, linear down to 0 at T2.
inline double curriculum_schedule(double t, int t1, int t2) {
    if (t < 0.0) throw DomainError("curriculum_schedule: t must be >= 0");
    if (!(0 < t1 && t1 < t2)) throw DomainError("curriculum_schedule: need 0 < T1 < T2");
    if (t < t1) return 1.0;
    if (t < t2) return 1.0 - (t - t1) / static_cast<double>(t2 - t1);
    return 0.0;
}

enum class GuidanceSource { teacher, student };

// One draw per trajectory: the winner drives every step of that rollout.
inline GuidanceSource sample_source(double p, RngStream& rng) {
    if (p < 0.0 || p > 1.0) throw DomainError("sample_source: p must be in [0,1]");
    return rng.bernoulli(p) ? GuidanceSource::teacher : GuidanceSource::student;
}

// Continue up to the target step count, then halt.
inline int teacher_action(int k, int target) {
    if (k < 0 || target < 0) throw DomainError("teacher_action: negative step");
    return k < target ? 1 : 0;
}

// Stage-3 filter; both thresholds are strict.
inline bool quality_gate(double r_comp, double r_qual, double theta_comp, double theta_qual) {
    return r_comp > theta_comp && r_qual > theta_qual;
}

struct DiversityResult {
    double value = 0.0; // Var / Mean^2 of batch FLOPs
    bool alert = false;
};

inline DiversityResult flops_diversity(const std::vector<std::int64_t>& flops, double eps_div) {
    if (flops.empty()) throw DomainError("flops_diversity: empty batch");
    double mean = 0.0;
    for (std::int64_t f : flops) mean += static_cast<double>(f);
    mean /= static_cast<double>(flops.size());
    if (mean == 0.0) return {0.0, true}; // undefined-as-0, still a collapse signal
    double var = 0.0;
    for (std::int64_t f : flops) {
        const double d = static_cast<double>(f) - mean;
        var += d * d;
    }
    var /= static_cast<double>(flops.size());
    const double d_t = var / (mean * mean);
    return {d_t, d_t < eps_div};
}

// Pondering collapse response: reinitialize the controller from a fresh seed
// drawn off the curriculum stream; the temperature schedule is preserved.
inline ControllerParams reinit_on_alert(const ControllerParams& current, RngStream& curriculum_rng) {
    const std::uint64_t fresh_seed = curriculum_rng.next_u64();
    ControllerParams next = controller_init(current.d, fresh_seed, current.temp);
    next.act = current.act;
    return next;
}

} // namespace ponderlab
