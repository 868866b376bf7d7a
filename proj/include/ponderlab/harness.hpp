#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <unordered_map>
#include <vector>

#include "ponderlab/curriculum.hpp"
#include "ponderlab/grpo.hpp"
#include "ponderlab/ponder.hpp"
#include "ponderlab/serialize.hpp"
#include "ponderlab/tasks.hpp"

namespace ponderlab {

struct TrainConfig {
    BackboneConfig backbone;
    PonderConfig ponder;
    GrpoConfig grpo;
    RewardWeights reward;
    CurriculumState curriculum;

    std::uint64_t master_seed = 42;
    int batch_size = 64;
    int total_steps = 3000;
    int eval_cadence = 100;
    int eval_suite_size = 200;
    std::uint64_t eval_suite_seed = 7;
    int train_pool_per_level = 400;
    int extraction_count = 256;
    int steering_layer = -1; // -1 = second-to-last
    double temp_start = 1.0;
    double temp_final = 0.25;
    bool auto_rebalance = false;
    int gate_max_attempts = 3;
    int worker_threads = 0; // 0 = hardware concurrency; results do not depend on it

    void validate() const {
        backbone.validate();
        ponder.validate();
        grpo.validate();
        reward.validate();
        curriculum.validate();
        if (batch_size < 1 || batch_size % grpo.group_size != 0) {
            throw ConfigError("TrainConfig: batch_size must be a positive multiple of group_size");
        }
        if (total_steps < 0) throw ConfigError("TrainConfig: total_steps must be >= 0");
        if (eval_cadence < 1) throw ConfigError("TrainConfig: eval_cadence must be >= 1");
        if (eval_suite_size < 5 || eval_suite_size % 5 != 0) {
            throw ConfigError("TrainConfig: eval_suite_size must be a positive multiple of 5");
        }
        if (train_pool_per_level < 1) {
            throw ConfigError("TrainConfig: train_pool_per_level must be >= 1");
        }
        if (extraction_count < 1) throw ConfigError("TrainConfig: extraction_count must be >= 1");
        if (temp_start <= 0.0 || temp_final <= 0.0) {
            throw ConfigError("TrainConfig: temperatures must be > 0");
        }
        if (gate_max_attempts < 1) throw ConfigError("TrainConfig: gate_max_attempts must be >= 1");
    }
};

struct LevelStats {
    int count = 0;
    double acc = 0.0;
    double mean_steps = 0.0;
    double mean_flops = 0.0;
};

struct EvalReport {
    double acc = 0.0;
    double avg_steps = 0.0;
    double avg_flops = 0.0;
    double log10_flops = 0.0;
    double avg_overhead_flops = 0.0; // ponder + controller share only
    std::array<LevelStats, 5> per_level;
    RewardBreakdown reward_means;
    double spearman_level_steps = 0.0;
};

namespace harness_detail {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return std::string(buf);
}

inline int resolve_threads(int requested, int work_items) {
    int t = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
    if (t < 1) t = 1;
    return std::min(t, std::max(1, work_items));
}

// Runs fn(begin, end) over contiguous chunks. Work item i is always handled by
// exactly one chunk, so per-item outputs land in preallocated slots and every
// later reduction walks them in index order; results never depend on timing.
template <typename Fn>
inline void parallel_chunks(int n, int threads, Fn&& fn) {
    if (n <= 0) return;
    const int t = resolve_threads(threads, n);
    if (t <= 1) {
        fn(0, n);
        return;
    }
    std::vector<std::thread> workers;
    std::exception_ptr first_error;
    std::mutex error_mutex;
    const int per = (n + t - 1) / t;
    for (int c = 0; c < t; ++c) {
        const int b = c * per;
        const int e = std::min(n, b + per);
        if (b >= e) break;
        workers.emplace_back([&fn, &first_error, &error_mutex, b, e] {
            try {
                fn(b, e);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& w : workers) w.join();
    if (first_error) std::rethrow_exception(first_error);
}

// Average ranks with tie handling.
inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<std::size_t> order(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(v.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() && v[order[j + 1]] == v[order[i]]) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
        for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg_rank;
        i = j + 1;
    }
    return r;
}

} // namespace harness_detail

inline double spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 2) throw DomainError("spearman: bad inputs");
    const auto rx = harness_detail::ranks(x);
    const auto ry = harness_detail::ranks(y);
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        mx += rx[i];
        my += ry[i];
    }
    mx /= static_cast<double>(rx.size());
    my /= static_cast<double>(ry.size());
    double num = 0.0, dx = 0.0, dy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        num += (rx[i] - mx) * (ry[i] - my);
        dx += (rx[i] - mx) * (rx[i] - mx);
        dy += (ry[i] - my) * (ry[i] - my);
    }
    if (dx == 0.0 || dy == 0.0) return 0.0;
    return num / std::sqrt(dx * dy);
}

// Shared rollout driver for evaluation-style passes. Policies are expressed as
// an optional action override; the controller is always evaluated so the cost
// accounting matches the adaptive path.
using ActionOverride = std::function<int(int k, RngStream& rng)>;

inline EvalReport run_suite(const Backbone& backbone, const ControllerParams& controller,
                            const SteeringVector& steering, const PonderConfig& ponder_cfg,
                            const std::vector<TaskInstance>& suite, const FlopsStats& stats,
                            const RewardWeights& weights, std::uint64_t seed,
                            const ActionOverride& override_policy = nullptr, int threads = 0) {
    if (suite.empty()) throw DomainError("run_suite: empty suite");
    EvalReport rep;
    const CostModel cost = backbone.cost_model();
    RngStream base(seed, "eval");

    struct PerTask {
        bool exact = false;
        int steps = 0;
        std::int64_t flops = 0;
        RewardBreakdown b;
    };
    std::vector<PerTask> results(suite.size());
    harness_detail::parallel_chunks(static_cast<int>(suite.size()), threads, [&](int lo, int hi) {
        for (int i = lo; i < hi; ++i) {
            const TaskInstance& task = suite[static_cast<std::size_t>(i)];
            auto rng = base.derive("task", static_cast<std::uint64_t>(i));
            const Vec z0 = backbone.encode(build_prompt(task, Mode::direct)).z0;
            TeacherPolicy teacher = nullptr;
            if (override_policy) {
                teacher = [&override_policy, &rng](int k) { return override_policy(k, rng); };
            }
            const Trajectory traj = ponder_run(backbone, controller, steering, ponder_cfg, z0,
                                               prompt_width, rng, teacher);
            PerTask& out = results[static_cast<std::size_t>(i)];
            out.exact = grade(traj.output.value, task.ground_truth).exact;
            out.steps = traj.halted_at;
            out.flops = traj.flops;
            const double ppl = backbone.perplexity_proxy(traj.output);
            out.b = score_output(traj.output.value, task.ground_truth, traj.flops, stats,
                                 traj.output.tokens, ppl, weights);
        }
    });

    for (std::size_t i = 0; i < suite.size(); ++i) {
        const PerTask& r = results[i];
        rep.acc += r.exact ? 1.0 : 0.0;
        rep.avg_steps += r.steps;
        rep.avg_flops += static_cast<double>(r.flops);
        rep.avg_overhead_flops += static_cast<double>(r.steps) *
                                  static_cast<double>(cost.ponder_step() + cost.controller_eval());
        rep.reward_means.acc += r.b.acc;
        rep.reward_means.flops += r.b.flops;
        rep.reward_means.comp += r.b.comp;
        rep.reward_means.qual += r.b.qual;
        rep.reward_means.rep += r.b.rep;
        rep.reward_means.total += r.b.total;

        LevelStats& ls = rep.per_level[static_cast<std::size_t>(suite[i].level - 1)];
        ls.count += 1;
        ls.acc += r.exact ? 1.0 : 0.0;
        ls.mean_steps += r.steps;
        ls.mean_flops += static_cast<double>(r.flops);
    }
    const double n = static_cast<double>(suite.size());
    rep.acc /= n;
    rep.avg_steps /= n;
    rep.avg_flops /= n;
    rep.avg_overhead_flops /= n;
    rep.log10_flops = std::log10(rep.avg_flops);
    rep.reward_means.acc /= n;
    rep.reward_means.flops /= n;
    rep.reward_means.comp /= n;
    rep.reward_means.qual /= n;
    rep.reward_means.rep /= n;
    rep.reward_means.total /= n;

    std::vector<double> levels, steps;
    for (int l = 0; l < 5; ++l) {
        LevelStats& ls = rep.per_level[static_cast<std::size_t>(l)];
        if (ls.count > 0) {
            ls.acc /= ls.count;
            ls.mean_steps /= ls.count;
            ls.mean_flops /= ls.count;
            levels.push_back(l + 1.0);
            steps.push_back(ls.mean_steps);
        }
    }
    rep.spearman_level_steps = (levels.size() >= 2) ? spearman(levels, steps) : 0.0;
    return rep;
}

inline EvalReport evaluate(const Backbone& backbone, const ControllerParams& controller,
                           const SteeringVector& steering, const PonderConfig& ponder_cfg,
                           const std::vector<TaskInstance>& suite, const FlopsStats& stats,
                           const RewardWeights& weights, std::uint64_t seed, int threads = 0) {
    return run_suite(backbone, controller, steering, ponder_cfg, suite, stats, weights, seed,
                     nullptr, threads);
}

struct BaselineSpec {
    enum class Kind { fixed_k, random_halt } kind = Kind::fixed_k;
    int k = 0;          // fixed_k
    double halt_p = 0.5; // random_halt
};

// Fixed-depth and random-halt comparison policies; the halting threshold is
// disabled so the override alone decides.
inline EvalReport baseline_eval(const Backbone& backbone, const SteeringVector& steering,
                                const PonderConfig& ponder_cfg, const BaselineSpec& spec,
                                const std::vector<TaskInstance>& suite, const FlopsStats& stats,
                                const RewardWeights& weights, std::uint64_t seed,
                                int threads = 0) {
    PonderConfig cfg = ponder_cfg;
    cfg.tau = 0.0;
    if (spec.kind == BaselineSpec::Kind::fixed_k) {
        if (spec.k < 0 || spec.k > cfg.k_max) throw DomainError("baseline: K out of range");
    } else if (spec.halt_p < 0.0 || spec.halt_p > 1.0) {
        throw DomainError("baseline: halt probability out of range");
    }
    ControllerParams dummy = controller_init(backbone.config().dim, 0, 1.0);
    ActionOverride policy;
    if (spec.kind == BaselineSpec::Kind::fixed_k) {
        policy = [&spec](int k, RngStream&) { return k < spec.k ? 1 : 0; };
    } else {
        policy = [&spec](int, RngStream& rng) { return rng.bernoulli(spec.halt_p) ? 0 : 1; };
    }
    return run_suite(backbone, dummy, steering, cfg, suite, stats, weights, seed, policy, threads);
}

struct TrainResult {
    ControllerParams controller;
    SteeringVector steering;
    FlopsStats flops_stats;
    RewardWeights reward_weights;
    EvalReport final_report;
    std::string log_csv;
    std::string events_jsonl;
    json checkpoint;
    std::uint64_t backbone_checksum = 0;
    int steps_run = 0;
    int diversity_alerts = 0;
    int gate_drops = 0;
};

namespace harness_detail {

// Linear anneal across the first stage-3 window of the same width as stage 2;
// tying the window to the curriculum rather than the run length keeps
// truncated and resumed runs on the same schedule.
inline double temp_for_step(const TrainConfig& cfg, int t) {
    if (t <= cfg.curriculum.t2) return cfg.temp_start;
    const int window = cfg.curriculum.t2 - cfg.curriculum.t1;
    const double frac =
        std::min(1.0, static_cast<double>(t - cfg.curriculum.t2) / static_cast<double>(window));
    return cfg.temp_start + (cfg.temp_final - cfg.temp_start) * frac;
}

struct BalanceWindow {
    std::array<double, reward_component_count> magnitude_sums = {0, 0, 0, 0, 0};
    double acc_sum = 0.0;
    std::int64_t count = 0;

    void add(const RewardBreakdown& b) {
        magnitude_sums[0] += std::abs(b.acc);
        magnitude_sums[1] += std::abs(b.flops);
        magnitude_sums[2] += std::abs(b.comp);
        magnitude_sums[3] += std::abs(b.qual);
        magnitude_sums[4] += std::abs(b.rep);
        acc_sum += b.acc;
        ++count;
    }
    void reset() { *this = BalanceWindow{}; }
    std::array<double, reward_component_count> means() const {
        std::array<double, reward_component_count> m = {0, 0, 0, 0, 0};
        if (count == 0) return m;
        for (int i = 0; i < reward_component_count; ++i) {
            m[static_cast<std::size_t>(i)] =
                magnitude_sums[static_cast<std::size_t>(i)] / static_cast<double>(count);
        }
        return m;
    }
};

} // namespace harness_detail

inline json make_checkpoint(const TrainConfig& cfg, const ControllerParams& controller,
                            const SteeringVector& steering, const FlopsStats& stats,
                            const RewardWeights& weights, int t, std::uint64_t batch_cursor,
                            std::uint64_t grpo_cursor, std::uint64_t curriculum_cursor,
                            std::uint64_t backbone_checksum, json config_json) {
    json ck;
    ck["schema_version"] = schema_version;
    ck["kind"] = "checkpoint";
    ck["config"] = std::move(config_json);
    ck["controller"] = to_json(controller);
    ck["steering"] = to_json(steering);
    ck["flops_stats"] = to_json(stats);
    ck["reward_weights"] = to_json(weights);
    ck["curriculum"] = {{"t", t}};
    ck["rng_cursors"] = {{"batch_cursor", batch_cursor},
                         {"grpo_cursor", grpo_cursor},
                         {"curriculum_cursor", curriculum_cursor}};
    ck["backbone_checksum"] = checksum_hex(backbone_checksum);
    ck["curriculum_config"] = to_json(cfg.curriculum);
    return ck;
}

json train_config_to_json(const TrainConfig& cfg); // defined in config.hpp

// The full training loop: batch sampling, curriculum-weighted teacher forcing,
// adaptive pondering rollouts, multi-component rewards, FLOPs-diversity
// monitoring with controller reinitialization, group-relative policy updates
// after the teacher-only phase, and periodic evaluation, checkpointing, and
// reward-balance validation. Deterministic given the config seeds.
inline TrainResult train(const TrainConfig& cfg, const std::optional<json>& resume = std::nullopt) {
    cfg.validate();

    Backbone backbone(cfg.backbone);
    const CostModel cost = backbone.cost_model();
    const int steering_layer =
        cfg.steering_layer >= 0 ? cfg.steering_layer : default_extraction_layer(backbone);
    SteeringVector steering = extract(
        backbone, make_contrastive_set(cfg.extraction_count, cfg.master_seed ^ 0xC0117A57ULL),
        steering_layer);

    // Task pools. The training pool is level-balanced; batches sample from it
    // uniformly. The eval suite is pinned by its own seed.
    std::vector<TaskInstance> pool;
    for (int level = 1; level <= 5; ++level) {
        auto part = generate_tasks(level, cfg.train_pool_per_level, cfg.master_seed ^ 0x700BULL);
        pool.insert(pool.end(), part.begin(), part.end());
    }
    const auto eval_suite = generate_suite(cfg.eval_suite_size, cfg.eval_suite_seed);

    std::unordered_map<std::string, Vec> encode_cache;
    auto encoded_z0 = [&](const TaskInstance& task) -> const Vec& {
        auto it = encode_cache.find(task.id);
        if (it == encode_cache.end()) {
            it = encode_cache.emplace(task.id, backbone.encode(build_prompt(task, Mode::direct)).z0)
                     .first;
        }
        return it->second;
    };

    ControllerParams controller =
        controller_init(cfg.backbone.dim, cfg.master_seed ^ 0xC011, cfg.temp_start);
    FlopsStats stats;
    RewardWeights weights = cfg.reward;
    int start_t = 0;

    RngStream batch_stream(cfg.master_seed, "batch-sampler");
    RngStream rollout_base(cfg.master_seed, "rollouts");
    RngStream grpo_stream(cfg.master_seed, "grpo-partition");
    RngStream curriculum_stream(cfg.master_seed, "curriculum");

    if (resume.has_value()) {
        const json& ck = *resume;
        require_schema(ck, "checkpoint");
        if (ck.value("kind", std::string()) != "checkpoint") {
            throw SerializationError("train: resume payload is not a checkpoint");
        }
        if (ck.at("backbone_checksum").get<std::string>() != checksum_hex(backbone.checksum())) {
            throw SerializationError("train: checkpoint belongs to a different backbone");
        }
        controller = controller_from_json(ck.at("controller"));
        steering = steering_from_json(ck.at("steering"), backbone);
        stats = flops_stats_from_json(ck.at("flops_stats"));
        weights = reward_weights_from_json(ck.at("reward_weights"));
        start_t = ck.at("curriculum").at("t").get<int>();
        batch_stream.seek(ck.at("rng_cursors").at("batch_cursor").get<std::uint64_t>());
        grpo_stream.seek(ck.at("rng_cursors").at("grpo_cursor").get<std::uint64_t>());
        curriculum_stream.seek(ck.at("rng_cursors").at("curriculum_cursor").get<std::uint64_t>());
    }

    std::string log;
    log += "# ponderlab-train-log schema_version=1\n";
    log +=
        "step,curriculum_p,stage,temp,teacher_fraction,batch_acc,mean_steps,mean_flops,"
        "diversity,alert,r_acc,r_flops,r_comp,r_qual,r_rep,r_total,grad_norm,clip_scale,"
        "update_status,gate_rejects,gate_drops,balance_ok,eval_acc,eval_steps,eval_log10_flops\n";
    std::string events = json{{"schema_version", schema_version}, {"kind", "events"}}.dump() + "\n";
    auto emit_event = [&events](int step, const std::string& type, json payload = json::object()) {
        payload["step"] = step;
        payload["type"] = type;
        events += payload.dump();
        events += "\n";
    };

    TrainResult result;
    result.backbone_checksum = backbone.checksum();
    harness_detail::BalanceWindow window;
    int prev_stage = 0;
    const auto fd = harness_detail::format_double;

    for (int t = start_t + 1; t <= cfg.total_steps; ++t) {
        controller.temp = harness_detail::temp_for_step(cfg, t);
        const double c_t = curriculum_schedule(t, cfg.curriculum.t1, cfg.curriculum.t2);
        const int stage = (c_t >= 1.0) ? 1 : (c_t > 0.0 ? 2 : 3);
        if (stage != prev_stage) {
            emit_event(t, "stage-transition", {{"stage", stage}, {"curriculum_p", c_t}});
            prev_stage = stage;
        }

        // --- pondering phase ---
        // Task choice and encoding happen sequentially; rollouts then run
        // concurrently per slot with formula-keyed streams, and the gather
        // walks slots in order, so results do not depend on thread timing.
        const FlopsStats stats_snapshot = stats;
        std::vector<const TaskInstance*> slot_task(static_cast<std::size_t>(cfg.batch_size));
        for (int b = 0; b < cfg.batch_size; ++b) {
            const auto idx = static_cast<std::size_t>(
                batch_stream.uniform_int(0, static_cast<std::int64_t>(pool.size()) - 1));
            slot_task[static_cast<std::size_t>(b)] = &pool[idx];
            encoded_z0(pool[idx]); // warm the cache before the parallel section
        }

        struct SlotResult {
            std::optional<Trajectory> traj;
            bool teacher = false;
            int rejects = 0;
        };
        std::vector<SlotResult> slots(static_cast<std::size_t>(cfg.batch_size));
        const std::uint64_t step_base = static_cast<std::uint64_t>(t - 1) *
                                        static_cast<std::uint64_t>(cfg.batch_size);
        harness_detail::parallel_chunks(cfg.batch_size, cfg.worker_threads, [&](int lo, int hi) {
            for (int b = lo; b < hi; ++b) {
                const TaskInstance& task = *slot_task[static_cast<std::size_t>(b)];
                SlotResult& slot = slots[static_cast<std::size_t>(b)];
                const Vec& z0 = encode_cache.at(task.id);
                for (int attempt = 0; attempt < cfg.gate_max_attempts; ++attempt) {
                    auto rng = rollout_base.derive("t", step_base + static_cast<std::uint64_t>(b))
                                   .derive("attempt", static_cast<std::uint64_t>(attempt));
                    const bool use_teacher = sample_source(c_t, rng) == GuidanceSource::teacher;
                    TeacherPolicy teacher = nullptr;
                    if (use_teacher) {
                        const int target = static_cast<int>(rng.uniform_int(
                            cfg.curriculum.teacher_target_min, cfg.curriculum.teacher_target_max));
                        teacher = [target](int k) { return teacher_action(k, target); };
                    }
                    Trajectory traj = ponder_run(backbone, controller, steering, cfg.ponder, z0,
                                                 prompt_width, rng, teacher);
                    const double ppl = backbone.perplexity_proxy(traj.output);
                    traj.rewards = score_output(traj.output.value, task.ground_truth, traj.flops,
                                                stats_snapshot, traj.output.tokens, ppl, weights);
                    slot.teacher = use_teacher;
                    // Quality gates filter update candidates in the autonomous stage.
                    const bool gated =
                        (stage == 3) && !quality_gate(traj.rewards.comp, traj.rewards.qual,
                                                      cfg.curriculum.theta_comp,
                                                      cfg.curriculum.theta_qual);
                    if (!gated) {
                        slot.traj = std::move(traj);
                        break;
                    }
                    ++slot.rejects;
                }
            }
        });

        std::vector<Trajectory> batch;
        batch.reserve(static_cast<std::size_t>(cfg.batch_size));
        std::vector<const TaskInstance*> batch_tasks;
        batch_tasks.reserve(static_cast<std::size_t>(cfg.batch_size));
        int teacher_count = 0, gate_rejects = 0, gate_drops = 0;
        double batch_acc = 0.0;
        for (int b = 0; b < cfg.batch_size; ++b) {
            SlotResult& slot = slots[static_cast<std::size_t>(b)];
            gate_rejects += slot.rejects;
            if (slot.teacher) ++teacher_count;
            if (!slot.traj.has_value()) {
                ++gate_drops;
                continue;
            }
            const TaskInstance& task = *slot_task[static_cast<std::size_t>(b)];
            batch_acc += grade(slot.traj->output.value, task.ground_truth).exact ? 1.0 : 0.0;
            window.add(slot.traj->rewards);
            batch.push_back(std::move(*slot.traj));
            batch_tasks.push_back(&task);
        }
        result.gate_drops += gate_drops;
        if (gate_rejects > 0) {
            emit_event(t, "gate-reject", {{"rejected", gate_rejects}, {"dropped", gate_drops}});
        }

        std::vector<std::int64_t> batch_flops;
        batch_flops.reserve(batch.size());
        double mean_steps = 0.0, mean_flops = 0.0;
        for (const auto& traj : batch) {
            batch_flops.push_back(traj.flops);
            mean_steps += traj.halted_at;
            mean_flops += static_cast<double>(traj.flops);
        }
        for (std::int64_t f : batch_flops) stats = observe_flops(stats, f);
        const double kept_n = batch.empty() ? 1.0 : static_cast<double>(batch.size());
        mean_steps /= kept_n;
        mean_flops /= kept_n;
        batch_acc /= kept_n;

        // --- diversity check ---
        DiversityResult div{0.0, false};
        if (!batch_flops.empty()) div = flops_diversity(batch_flops, cfg.curriculum.eps_div);
        if (div.alert) {
            controller = reinit_on_alert(controller, curriculum_stream);
            result.diversity_alerts += 1;
            emit_event(t, "diversity-alert", {{"diversity", div.value}});
            emit_event(t, "controller-reinit", json::object());
        }

        // --- GRPO update ---
        std::string update_status = "skipped:teacher-forcing";
        double grad_norm = 0.0, clip_scale = 1.0;
        RewardBreakdown comp_means;
        for (const auto& traj : batch) {
            comp_means.acc += traj.rewards.acc;
            comp_means.flops += traj.rewards.flops;
            comp_means.comp += traj.rewards.comp;
            comp_means.qual += traj.rewards.qual;
            comp_means.rep += traj.rewards.rep;
            comp_means.total += traj.rewards.total;
        }
        comp_means.acc /= kept_n;
        comp_means.flops /= kept_n;
        comp_means.comp /= kept_n;
        comp_means.qual /= kept_n;
        comp_means.rep /= kept_n;
        comp_means.total /= kept_n;

        if (t > cfg.curriculum.t1) {
            if (div.alert) {
                update_status = "skipped:diversity-reinit";
            } else {
                const int usable =
                    (static_cast<int>(batch.size()) / cfg.grpo.group_size) * cfg.grpo.group_size;
                if (usable == 0) {
                    update_status = "skipped:no-full-group";
                    emit_event(t, "update-skipped", {{"reason", update_status}});
                } else {
                    std::vector<Trajectory> update_batch(batch.begin(), batch.begin() + usable);
                    std::vector<double> totals;
                    totals.reserve(static_cast<std::size_t>(usable));
                    for (const auto& traj : update_batch) totals.push_back(traj.rewards.total);
                    const auto grouping = partition(usable, cfg.grpo.group_size, grpo_stream);
                    const auto advs = advantages(totals, grouping, cfg.grpo.baseline);

                    // Per-chunk partial gradients, reduced in chunk order.
                    const int nthreads = harness_detail::resolve_threads(cfg.worker_threads, usable);
                    std::vector<ControllerTensors> partials(
                        static_cast<std::size_t>(nthreads), ControllerTensors::zeros(controller.d));
                    const int per = (usable + nthreads - 1) / nthreads;
                    harness_detail::parallel_chunks(nthreads, nthreads, [&](int clo, int chi) {
                        for (int c = clo; c < chi; ++c) {
                            const int b0 = c * per;
                            const int e0 = std::min(usable, b0 + per);
                            if (b0 >= e0) continue;
                            assemble_gradient_range(update_batch, advs, controller,
                                                    cfg.grpo.entropy_coeff,
                                                    cfg.grpo.include_teacher_steps,
                                                    static_cast<std::size_t>(b0),
                                                    static_cast<std::size_t>(e0),
                                                    partials[static_cast<std::size_t>(c)]);
                        }
                    });
                    ControllerTensors grad = std::move(partials[0]);
                    for (std::size_t c = 1; c < partials.size(); ++c) {
                        grad.add_scaled(partials[c], 1.0);
                    }
                    grad_norm = std::sqrt(grad.sq_norm());
                    clip_scale = clip_global_norm(grad, cfg.grpo.clip_norm);
                    if (clip_scale < 1.0) emit_event(t, "gradient-clipped", {{"norm", grad_norm}});
                    try {
                        controller = apply_update(controller, grad, cfg.grpo.learning_rate);
                        update_status = "applied";
                    } catch (const Error& e) {
                        update_status = "skipped:non-finite-gradient";
                        emit_event(t, "update-skipped", {{"reason", e.what()}});
                    }
                }
            }
        }

        // --- monitoring ---
        std::string balance_ok_str;
        std::string eval_acc_str, eval_steps_str, eval_l10_str;
        if (t % cfg.eval_cadence == 0) {
            const auto mags = window.means();
            const double mean_acc = window.count > 0
                                        ? window.acc_sum / static_cast<double>(window.count)
                                        : 0.0;
            const auto balance = balance_check(mags, weights.rho, mean_acc);
            balance_ok_str = balance.ok ? "1" : "0";
            if (!balance.ok) {
                emit_event(t, "balance-violation", {{"violations", balance.violations}});
            }
            if (cfg.auto_rebalance) {
                weights = rebalance(weights, mags, weights.rebalance_rate,
                                    weights.target_magnitude);
            }
            window.reset();

            const EvalReport er = evaluate(backbone, controller, steering, cfg.ponder, eval_suite,
                                           stats, weights, cfg.eval_suite_seed);
            eval_acc_str = fd(er.acc);
            eval_steps_str = fd(er.avg_steps);
            eval_l10_str = fd(er.log10_flops);
            emit_event(t, "eval",
                       {{"acc", er.acc},
                        {"avg_steps", er.avg_steps},
                        {"log10_flops", er.log10_flops},
                        {"spearman", er.spearman_level_steps}});
            result.checkpoint = make_checkpoint(
                cfg, controller, steering, stats, weights, t, batch_stream.cursor(),
                grpo_stream.cursor(), curriculum_stream.cursor(), backbone.checksum(),
                train_config_to_json(cfg));
            emit_event(t, "checkpoint", json::object());
        }

        log += std::to_string(t) + "," + fd(c_t) + "," + std::to_string(stage) + "," +
               fd(controller.temp) + "," + fd(static_cast<double>(teacher_count) / kept_n) + "," +
               fd(batch_acc) + "," + fd(mean_steps) + "," + fd(mean_flops) + "," + fd(div.value) +
               "," + (div.alert ? "1" : "0") + "," + fd(comp_means.acc) + "," +
               fd(comp_means.flops) + "," + fd(comp_means.comp) + "," + fd(comp_means.qual) + "," +
               fd(comp_means.rep) + "," + fd(comp_means.total) + "," + fd(grad_norm) + "," +
               fd(clip_scale) + "," + update_status + "," + std::to_string(gate_rejects) + "," +
               std::to_string(gate_drops) + "," + balance_ok_str + "," + eval_acc_str + "," +
               eval_steps_str + "," + eval_l10_str + "\n";
        result.steps_run = t;
    }

    result.final_report = evaluate(backbone, controller, steering, cfg.ponder, eval_suite, stats,
                                   weights, cfg.eval_suite_seed);
    if (result.checkpoint.is_null() || cfg.total_steps % cfg.eval_cadence != 0 ||
        cfg.total_steps == 0) {
        result.checkpoint = make_checkpoint(cfg, controller, steering, stats, weights,
                                            cfg.total_steps, batch_stream.cursor(),
                                            grpo_stream.cursor(), curriculum_stream.cursor(),
                                            backbone.checksum(), train_config_to_json(cfg));
    }
    result.controller = std::move(controller);
    result.steering = std::move(steering);
    result.flops_stats = stats;
    result.reward_weights = weights;
    result.log_csv = std::move(log);
    result.events_jsonl = std::move(events);
    return result;
}

struct SweepRow {
    std::string knob;
    double value = 0.0;
    double acc = 0.0;
    double avg_flops = 0.0;
    double avg_steps = 0.0;
};

inline std::string frontier_csv(std::vector<SweepRow> rows) {
    std::sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
        return a.avg_flops < b.avg_flops;
    });
    std::string out = "# ponderlab-frontier schema_version=1\nknob,value,acc,avg_flops,avg_steps\n";
    const auto fd = harness_detail::format_double;
    for (const auto& r : rows) {
        out += r.knob + "," + fd(r.value) + "," + fd(r.acc) + "," + fd(r.avg_flops) + "," +
               fd(r.avg_steps) + "\n";
    }
    return out;
}

// Evaluation-only sweep over the halting threshold on a fixed controller.
inline std::vector<SweepRow> sweep_tau(const Backbone& backbone,
                                       const ControllerParams& controller,
                                       const SteeringVector& steering,
                                       const PonderConfig& ponder_cfg,
                                       const std::vector<double>& grid,
                                       const std::vector<TaskInstance>& suite,
                                       const FlopsStats& stats, const RewardWeights& weights,
                                       std::uint64_t seed) {
    if (grid.empty()) throw DomainError("sweep_tau: empty grid");
    std::vector<SweepRow> rows;
    for (double tau : grid) {
        PonderConfig cfg = ponder_cfg;
        cfg.tau = tau;
        const auto rep = evaluate(backbone, controller, steering, cfg, suite, stats, weights, seed);
        rows.push_back({"tau", tau, rep.acc, rep.avg_flops, rep.avg_steps});
    }
    return rows;
}

// Full train+eval per efficiency-pressure setting.
inline std::vector<SweepRow> sweep_lambda(const TrainConfig& base,
                                          const std::vector<double>& grid) {
    if (grid.empty()) throw DomainError("sweep_lambda: empty grid");
    std::vector<SweepRow> rows;
    for (double lambda : grid) {
        TrainConfig cfg = base;
        cfg.reward.w_flops = lambda;
        const auto res = train(cfg);
        rows.push_back({"lambda", lambda, res.final_report.acc, res.final_report.avg_flops,
                        res.final_report.avg_steps});
    }
    return rows;
}

} // namespace ponderlab

#include "ponderlab/config.hpp" // supplies train_config_to_json for the inline train()
