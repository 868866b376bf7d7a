// Acceptance suite: one check per shipped guarantee, each printed as a single
// pass/fail line. Runs the full default training recipe, so expect a few
// minutes of wall time. Exit code 0 iff every criterion holds.

#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "../support/fd_oracle.hpp"
#include "ponderlab/config.hpp"
#include "ponderlab/harness.hpp"

using namespace ponderlab;

namespace {

struct CriterionResult {
    int id;
    std::string name;
    bool pass;
    std::string detail;
};

std::vector<CriterionResult> g_results;

void record(int id, const std::string& name, bool pass, const std::string& detail) {
    g_results.push_back({id, name, pass, detail});
    std::printf("[%s] criterion %2d: %s — %s\n", pass ? "PASS" : "FAIL", id, name.c_str(),
                detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
    return buf;
}

Vec random_state(int d, RngStream& rng, double scale = 2.0) {
    Vec z(static_cast<std::size_t>(d));
    for (double& x : z) x = scale * rng.gaussian();
    return z;
}

// --- criterion 1: drift bound over random noiseless pondering runs ----------
void criterion_drift_bound(const Backbone& bb, const SteeringVector& sv) {
    PonderConfig cfg; // defaults: alpha0 0.5, beta 0.1, tau 0.2, k_max 8
    cfg.tau = 0.0;    // keep runs long so every k is exercised
    const auto suite = generate_suite(1000, 91);
    int violations = 0;
    double max_excess = -1.0;
    for (std::size_t i = 0; i < suite.size(); ++i) {
        auto controller = controller_init(64, 5000 + i, 1.0);
        const Vec z0 = bb.encode(build_prompt(suite[i], Mode::direct)).z0;
        RngStream rng(17, "drift-run-" + std::to_string(i));
        const auto traj = ponder_run(bb, controller, sv, cfg, z0, prompt_width, rng);
        for (std::size_t k = 0; k < traj.steps.size(); ++k) {
            Vec delta(z0.size());
            for (std::size_t j = 0; j < z0.size(); ++j) delta[j] = traj.steps[k].z[j] - z0[j];
            const double bound =
                drift_bound(cfg.alpha0, cfg.beta, static_cast<int>(k), 1.0) + 1e-9;
            const double excess = norm2(delta) - bound;
            max_excess = std::max(max_excess, excess);
            if (excess > 0.0) ++violations;
        }
    }
    record(1, "drift bound on 1000 noiseless runs", violations == 0,
           "violations=" + std::to_string(violations) + " max_excess=" + fmt(max_excess, 12));
}

// --- criterion 2: steering recovery and estimator convergence rate ----------
void criterion_steering_recovery(const Backbone& bb) {
    const auto sv = extract(bb, make_contrastive_set(256, 5), default_extraction_layer(bb));
    const double cosine = dot(sv.direction, bb.planted_direction());

    const auto probe = convergence_probe(bb, {64, 256, 1024}, 12, 4242);
    bool ratios_ok = true;
    std::string ratio_str;
    for (std::size_t i = 1; i < probe.size(); ++i) {
        const double ratio = probe[i].second / probe[i - 1].second;
        ratios_ok = ratios_ok && ratio >= 0.35 && ratio <= 0.70;
        ratio_str += (i > 1 ? "," : "") + fmt(ratio, 3);
    }
    record(2, "steering recovery and N^{-1/2} convergence", cosine >= 0.9 && ratios_ok,
           "cosine=" + fmt(cosine, 4) + " 4x-ratios=[" + ratio_str + "]");
}

// --- criterion 3: reasoning divergence monotone in steering strength --------
void criterion_divergence_monotone(const Backbone& bb, const SteeringVector& sv) {
    RngStream rng(77, "divergence-states");
    const auto suite = generate_suite(200, 55);
    int monotone = 0;
    for (const auto& task : suite) {
        Vec z0 = bb.encode(build_prompt(task, Mode::direct)).z0;
        for (double& x : z0) x += 0.3 * rng.gaussian();
        double prev = -1.0;
        bool ok = true;
        for (int i = 0; i <= 5; ++i) {
            const double d = reasoning_divergence(bb, z0, sv, 0.1 * i);
            if (d < prev - 1e-9) ok = false;
            prev = std::max(prev, d);
        }
        if (ok) ++monotone;
    }
    record(3, "reasoning divergence nondecreasing on [0,0.5]", monotone >= 190,
           std::to_string(monotone) + "/200 states monotone");
}

// --- criterion 4: analytic gradients vs central finite differences ----------
void criterion_gradient_checks() {
    bool all_ok = true;
    double worst = 0.0;
    for (int case_idx = 0; case_idx < 20; ++case_idx) {
        RngStream rng(100 + case_idx, "fd-cases");
        auto params = controller_init(64, 1000 + static_cast<std::uint64_t>(case_idx),
                                      (case_idx % 3 == 0) ? 0.5 : 1.0);
        if (case_idx % 5 == 4) params.act = Activation::relu;
        const Vec z = random_state(64, rng);
        const int action = case_idx % 2;
        const auto res = logprob_and_grad(params, z, action);
        testing::FdEvaluator fd(params, {{z, action, 1.0, 0.0}});
        const auto cmp = testing::compare_grads(res.grad, fd.central_diff(1e-5));
        worst = std::max(worst, cmp.worst_rel);
        all_ok = all_ok && cmp.failed == 0 && cmp.checked == 296577;
    }

    // GRPO-assembled gradient on micro-batches (B = 2, trajectories <= 2 steps).
    for (int mb = 0; mb < 3; ++mb) {
        RngStream rng(300 + mb, "fd-grpo");
        const auto ctrl = controller_init(64, 500 + static_cast<std::uint64_t>(mb), 1.0);
        std::vector<Trajectory> batch(2);
        std::vector<testing::FdTerm> terms;
        const std::vector<double> advs = {0.7 + 0.1 * mb, -1.1};
        const double beta_ent = 0.05;
        for (int i = 0; i < 2; ++i) {
            const int steps = 1 + (mb + i) % 2;
            for (int k = 0; k < steps; ++k) {
                const Vec z = random_state(64, rng);
                const int a = static_cast<int>(rng.uniform_int(0, 1));
                batch[static_cast<std::size_t>(i)].steps.push_back(
                    {z, 0.5, a, StepSource::student});
                terms.push_back({z, a, advs[static_cast<std::size_t>(i)], beta_ent});
            }
        }
        const auto grad = assemble_gradient(batch, advs, ctrl, beta_ent);
        testing::FdEvaluator fd(ctrl, terms);
        const auto cmp = testing::compare_grads(grad, fd.central_diff(1e-5));
        worst = std::max(worst, cmp.worst_rel);
        all_ok = all_ok && cmp.failed == 0;
    }
    record(4, "log-prob and GRPO gradients vs finite differences", all_ok,
           "worst relative deviation " + fmt(worst, 7) + " (tolerance 1e-4)");
}

// --- criterion 5: group-relative advantage identities ------------------------
void criterion_advantage_identities() {
    RngStream rng(5, "dyadic");
    bool zero_sum_exact = true;
    bool shift_exact = true;
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> rewards(32);
        for (double& r : rewards) r = static_cast<double>(rng.uniform_int(-512, 512)) / 64.0;
        auto grouping = partition(32, 8, rng);
        const auto adv = advantages(rewards, grouping, BaselineMode::group_mean);
        for (const auto& group : grouping.groups) {
            double sum = 0.0;
            for (int idx : group) sum += adv[static_cast<std::size_t>(idx)];
            if (sum != 0.0) zero_sum_exact = false;
        }
        const double shift = static_cast<double>(rng.uniform_int(-128, 128)) / 64.0;
        auto shifted = rewards;
        for (double& r : shifted) r += shift;
        const auto adv2 = advantages(shifted, grouping, BaselineMode::group_mean);
        for (std::size_t i = 0; i < adv.size(); ++i) {
            if (adv[i] != adv2[i]) shift_exact = false;
        }
    }
    // Worked example from the group-relative definition.
    Grouping g;
    g.groups = {{0, 1, 2, 3}};
    const auto adv = advantages({1.0, 2.0, 3.0, 4.0}, g, BaselineMode::group_mean);
    const bool example_ok =
        adv[0] == -1.5 && adv[1] == -0.5 && adv[2] == 0.5 && adv[3] == 1.5;
    record(5, "advantages: exact zero group sums and shift invariance",
           zero_sum_exact && shift_exact && example_ok,
           std::string("zero_sum=") + (zero_sum_exact ? "exact" : "BROKEN") +
               " shift=" + (shift_exact ? "exact" : "BROKEN"));
}

// --- criterion 6: GRPO estimator vs enumerated exact gradient ----------------
void criterion_unbiasedness(const Backbone& bb) {
    const auto controller = controller_init(64, 12, 1.0);
    TinyMdp mdp;
    mdp.z0 = bb.encode(build_prompt(generate_one_task(2, 3, 0), Mode::direct)).z0;
    mdp.z1 = bb.encode(build_prompt(generate_one_task(4, 3, 1), Mode::direct)).z0;
    mdp.reward_halt0 = 0.25;
    mdp.reward_cont_halt = 1.0;
    mdp.reward_cont_cont = -0.4;
    RngStream mc(32, "mc");
    const auto rep = unbiasedness_probe(controller, mdp, 100000, 8, mc);
    record(6, "GRPO estimator within 3 SE of the enumerated gradient", rep.within_3se,
           "samples=100000 max|z|=" + fmt(rep.max_abs_z, 3) +
               " coords_over=" + std::to_string(rep.coords_over_3se) + "/" +
               std::to_string(rep.coords_checked));
}

// --- criterion 7: variance reduction over group sizes ------------------------
void criterion_variance_reduction() {
    VarianceProbeModel model; // i.i.d. rewards: mean 2, sigma 1
    RngStream rng(41, "var");
    const auto res = variance_probe({2, 4, 8}, 10000, model, rng);
    const double v2 = res.grpo_variance_by_group[0].second;
    const double v4 = res.grpo_variance_by_group[1].second;
    const double v8 = res.grpo_variance_by_group[2].second;
    const bool ok = v2 > v4 && v4 > v8 && v8 <= res.reinforce_variance / 2.0;
    record(7, "variance strictly decreasing in G; half of REINFORCE at G=8", ok,
           "Var(G=2,4,8)=(" + fmt(v2, 3) + "," + fmt(v4, 3) + "," + fmt(v8, 3) +
               ") REINFORCE=" + fmt(res.reinforce_variance, 3));
}

// --- criterion 8: reward engine identities and rebalancing -------------------
void criterion_reward_engine() {
    bool ok = true;
    std::string why;
    auto expect = [&](bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            why = what;
        }
    };
    RewardWeights w;
    w.w_exact = 1.0;
    w.w_partial = 0.5;
    w.theta_tol = 0.05;

    expect(accuracy_reward(42.0, 42.0, w) == 1.0, "accuracy exact branch");
    expect(accuracy_reward(100.0, 10.0, w) == 0.0, "accuracy out-of-tolerance branch");
    expect(std::abs(accuracy_reward(9.9, 10.0, w) - 0.5 * std::exp(-0.1 / (10.0 + 1e-8))) < 1e-12,
           "accuracy partial branch");

    FlopsStats stats;
    expect(flops_reward(123, stats, 1.0) == 0.0, "flops empty history");
    stats.mean = 1000.0;
    stats.var = 2500.0;
    stats.count = 5;
    expect(std::abs(flops_reward(1000, stats, 1.0)) < 1e-12, "flops centered");
    expect(std::abs(flops_reward(1050, stats, 1.0) + 1.0) < 1e-6, "flops one sigma");

    expect(completeness_reward({tok::stage_setup, tok::stage_compute, tok::stage_verify,
                                tok::stage_conclude},
                               w) == 1.0,
           "completeness full");
    expect(completeness_reward({}, w) == 0.0, "completeness empty");
    expect(completeness_reward({tok::stage_setup}, w) == 0.25, "completeness single");

    RewardWeights q;
    q.w_qual = 1.0;
    q.len_target = 8;
    q.ppl_baseline = 16.0;
    q.sigma_ppl = 8.0;
    expect(std::abs(quality_reward(8, 16.0, q) - 1.0) < 1e-12, "quality at target");
    expect(std::abs(quality_reward(4, 16.0, q) - 0.5) < 1e-12, "quality half length");
    expect(std::abs(quality_reward(16, 16.0, q) - 1.0) < 1e-12, "quality length cap");

    expect(antirep_reward({1, 2, 3, 4}, 0.1, 0.2, 0.3) == 0.0, "antirep distinct");
    expect(std::abs(antirep_reward({7, 7, 7, 7}, 0.1, 0.2, 0.3) + 0.25) < 1e-12,
           "antirep a-a-a-a");
    expect(antirep_reward({5}, 0.1, 0.2, 0.3) == 0.0, "antirep single token");

    RewardWeights tw;
    tw.w_acc = 1.0;
    tw.w_comp = 1.0;
    tw.w_rep = 1.0;
    RewardBreakdown parts;
    parts.acc = 1.0;
    parts.flops = -0.5;
    parts.comp = 0.25;
    expect(std::abs(reward_total(parts, tw) - 0.75) < 1e-12, "weighted total");

    FlopsStats seeded = observe_flops(FlopsStats{}, 100);
    expect(seeded.mean == 100.0 && seeded.var == 0.0, "observe first sample");

    // Rebalance contraction on a linear response model.
    RewardWeights rb;
    rb.w_acc = rb.w_flops = rb.w_comp = rb.w_qual = rb.w_rep = 1.0;
    const std::array<double, 5> kappa = {0.05, 2.0, 0.4, 7.0, 1.0};
    double* fields[5] = {&rb.w_acc, &rb.w_flops, &rb.w_comp, &rb.w_qual, &rb.w_rep};
    double final_ratio = 1e9;
    for (int step = 0; step < 1000; ++step) {
        std::array<double, 5> mags;
        for (int i = 0; i < 5; ++i) {
            mags[static_cast<std::size_t>(i)] = kappa[static_cast<std::size_t>(i)] * *fields[i];
        }
        rb = rebalance(rb, mags, 0.1, 0.5);
        double worst = 0.0;
        for (int i = 0; i < 5; ++i) {
            for (int j = 0; j < 5; ++j) {
                worst = std::max(worst,
                                 std::abs(std::log((kappa[static_cast<std::size_t>(i)] * *fields[i]) /
                                                   (kappa[static_cast<std::size_t>(j)] * *fields[j]))));
            }
        }
        final_ratio = worst;
    }
    expect(final_ratio < std::log(rb.rho), "rebalance contraction below ln rho");

    // The monitoring window flags efficiency/accuracy imbalance both ways.
    const std::array<double, 5> balanced = {0.5, 0.25, 0.5, 0.5, 0.5};
    expect(balance_check(balanced, 5.0, 0.5).ok, "balance ok case");
    const std::array<double, 5> heavy = {1.0, 2.0, 1.0, 1.0, 1.0};
    expect(!balance_check(heavy, 5.0, 1.0).ok, "balance window high side");
    const std::array<double, 5> faint = {1.0, 0.05, 1.0, 1.0, 1.0};
    expect(!balance_check(faint, 10.0, 1.0).ok, "balance window low side");

    record(8, "reward component identities, rebalance, balance window", ok,
           ok ? "all component equations exact; contraction ratio " + fmt(final_ratio, 4) +
                    " < ln(rho)"
              : ("failed: " + why));
}

// --- criterion 9: curriculum schedule, gates, diversity alert ----------------
void criterion_curriculum() {
    bool ok = true;
    std::string why;
    auto expect = [&](bool cond, const std::string& what) {
        if (!cond && ok) {
            ok = false;
            why = what;
        }
    };
    expect(curriculum_schedule(0, 500, 1500) == 1.0, "schedule start");
    expect(curriculum_schedule(1000, 500, 1500) == 0.5, "schedule midpoint");
    expect(curriculum_schedule(1500, 500, 1500) == 0.0, "schedule end");

    expect(flops_diversity({100, 100, 100}, 1e-6).alert, "alert at zero variance");
    expect(!flops_diversity({1, 3}, 1e-6).alert, "no alert at healthy diversity");
    // Strictness at the configured threshold.
    expect(flops_diversity({999999, 1000001}, 1e-6).alert, "alert strictly below eps");

    RngStream cur(9, "curriculum");
    const auto before = controller_init(64, 5, 0.7);
    const auto after = reinit_on_alert(before, cur);
    expect(after.t.checksum() != before.t.checksum(), "reinit changes parameters");

    // Harness-level: gates never fire before stage 3, and a forced pondering
    // collapse (k_max = 0) raises the diversity alert and reinitializes.
    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.total_steps = 30;
    cfg.eval_cadence = 10;
    cfg.eval_suite_size = 25;
    cfg.train_pool_per_level = 20;
    cfg.extraction_count = 32;
    cfg.curriculum.t1 = 8;
    cfg.curriculum.t2 = 16;
    cfg.curriculum.theta_comp = 1e9; // impossible gates: every stage-3 candidate is rejected
    const auto res = train(cfg);
    std::stringstream log(res.log_csv);
    std::string line;
    std::getline(log, line);
    std::getline(log, line);
    bool gates_quiet_early = true, gates_active_late = false;
    int step = 0;
    while (std::getline(log, line)) {
        ++step;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        const int rejects = std::stoi(cells[19]);
        if (step < cfg.curriculum.t2 && rejects > 0) gates_quiet_early = false;
        if (step >= cfg.curriculum.t2 && rejects > 0) gates_active_late = true;
    }
    expect(gates_quiet_early, "gates inactive before stage 3");
    expect(gates_active_late, "gates active in stage 3");

    TrainConfig collapse = cfg;
    collapse.curriculum.theta_comp = 0.2;
    collapse.ponder.k_max = 0; // all trajectories identical: zero FLOPs diversity
    const auto res2 = train(collapse);
    expect(res2.diversity_alerts > 0, "diversity alert fires under collapse");
    expect(res2.events_jsonl.find("controller-reinit") != std::string::npos,
           "alert triggers reinitialization");

    record(9, "curriculum schedule, stage-3 gates, diversity alert", ok,
           ok ? "boundaries exact; gates stage-3 only; collapse alerts=" +
                    std::to_string(res2.diversity_alerts)
              : ("failed: " + why));
}

// --- criteria 10/11/12/13/14: the trained artifact ---------------------------
struct TrainedArtifacts {
    TrainConfig cfg;
    std::optional<TrainResult> result;
    std::optional<EvalReport> trained_report;
    std::optional<EvalReport> fixed_k_report;
    std::optional<EvalReport> untrained_report;
};

void criterion_end_to_end(TrainedArtifacts& art) {
    art.cfg = TrainConfig{}; // spec defaults: 3000 steps, batch 64, K_max 8
    Backbone bb(art.cfg.backbone);
    std::printf("    (running the default 3000-step training recipe...)\n");
    std::fflush(stdout);
    art.result = train(art.cfg);
    const auto suite = generate_suite(1000, art.cfg.eval_suite_seed);

    const auto untrained =
        controller_init(art.cfg.backbone.dim, art.cfg.master_seed ^ 0xC011, art.cfg.temp_start);
    art.untrained_report = evaluate(bb, untrained, art.result->steering, art.cfg.ponder, suite,
                                    art.result->flops_stats, art.result->reward_weights,
                                    art.cfg.eval_suite_seed);
    art.trained_report = evaluate(bb, art.result->controller, art.result->steering, art.cfg.ponder,
                                  suite, art.result->flops_stats, art.result->reward_weights,
                                  art.cfg.eval_suite_seed);
    BaselineSpec top;
    top.kind = BaselineSpec::Kind::fixed_k;
    top.k = art.cfg.ponder.k_max;
    art.fixed_k_report =
        baseline_eval(bb, art.result->steering, art.cfg.ponder, top, suite,
                      art.result->flops_stats, art.result->reward_weights, art.cfg.eval_suite_seed);

    const double acc_gap = art.fixed_k_report->acc - art.trained_report->acc;
    const double overhead_ratio =
        art.trained_report->avg_overhead_flops / art.fixed_k_report->avg_overhead_flops;
    const bool pass = acc_gap <= 0.02 && overhead_ratio <= 0.80 &&
                      art.trained_report->acc >= art.untrained_report->acc;
    record(10, "trained controller: near-baseline accuracy at >=20% fewer ponder FLOPs", pass,
           "acc=" + fmt(art.trained_report->acc, 4) + " vs fixed-K " +
               fmt(art.fixed_k_report->acc, 4) + " (gap " + fmt(acc_gap, 4) + "), overhead ratio " +
               fmt(overhead_ratio, 3) + ", untrained acc " + fmt(art.untrained_report->acc, 4));
}

void criterion_difficulty_calibration(const TrainedArtifacts& art) {
    const double rho = art.trained_report->spearman_level_steps;
    std::string per_level;
    for (int l = 0; l < 5; ++l) {
        per_level += (l ? "," : "") + fmt(art.trained_report->per_level[l].mean_steps, 2);
    }
    record(11, "compute allocation tracks difficulty (Spearman >= 0.8)", rho >= 0.8,
           "spearman=" + fmt(rho, 3) + " level mean steps=[" + per_level + "]");
}

void criterion_frontier(const TrainedArtifacts& art) {
    Backbone bb(art.cfg.backbone);
    const auto suite = generate_suite(1000, art.cfg.eval_suite_seed);
    std::vector<double> tau_grid;
    for (int i = 0; i <= 10; ++i) tau_grid.push_back(0.1 * i);
    const auto tau_rows =
        sweep_tau(bb, art.result->controller, art.result->steering, art.cfg.ponder, tau_grid,
                  suite, art.result->flops_stats, art.result->reward_weights,
                  art.cfg.eval_suite_seed);
    bool tau_monotone = true;
    for (std::size_t i = 1; i < tau_rows.size(); ++i) {
        if (tau_rows[i].avg_steps > tau_rows[i - 1].avg_steps) tau_monotone = false;
    }

    // Efficiency-pressure sweep on a shortened recipe: one full train per value.
    TrainConfig sweep_cfg;
    sweep_cfg.batch_size = 32;
    sweep_cfg.total_steps = 400;
    sweep_cfg.curriculum.t1 = 50;
    sweep_cfg.curriculum.t2 = 150;
    sweep_cfg.eval_cadence = 100;
    sweep_cfg.eval_suite_size = 200;
    sweep_cfg.train_pool_per_level = 100;
    sweep_cfg.extraction_count = 64;
    std::printf("    (running the efficiency-pressure sweep: 4 short trainings...)\n");
    std::fflush(stdout);
    const auto lam_rows = sweep_lambda(sweep_cfg, {0.0, 0.5, 1.0, 2.0});
    bool lam_ok = true;
    std::string lam_str;
    for (std::size_t i = 0; i < lam_rows.size(); ++i) {
        lam_str += (i ? "," : "") + fmt(lam_rows[i].avg_flops / 1e6, 2);
        if (i > 0 && lam_rows[i].avg_flops > lam_rows[i - 1].avg_flops * 1.05) lam_ok = false;
    }
    record(12, "frontier shape: tau monotone exactly, lambda within 5% band",
           tau_monotone && lam_ok,
           std::string("tau steps monotone=") + (tau_monotone ? "yes" : "NO") +
               " lambda avg MFLOPs=[" + lam_str + "]");
}

void criterion_determinism() {
    TrainConfig cfg;
    cfg.batch_size = 16;
    cfg.total_steps = 40;
    cfg.eval_cadence = 20;
    cfg.eval_suite_size = 50;
    cfg.train_pool_per_level = 30;
    cfg.extraction_count = 32;
    cfg.curriculum.t1 = 10;
    cfg.curriculum.t2 = 25;
    const auto a = train(cfg);
    const auto b = train(cfg);
    const bool pass = a.log_csv == b.log_csv && a.events_jsonl == b.events_jsonl &&
                      a.checkpoint.dump() == b.checkpoint.dump();
    record(13, "byte-identical logs and checkpoints across reruns", pass,
           pass ? "log, events, and checkpoint bytes identical" : "outputs diverged");
}

void criterion_param_budget(const TrainedArtifacts& art) {
    const auto fresh = controller_init(64, 1, 1.0);
    const bool init_ok = fresh.param_count() == 296577;
    const bool trained_ok = art.result->controller.param_count() == 296577 &&
                            art.result->controller.param_count() <= controller_param_budget;
    record(14, "controller parameter budget", init_ok && trained_ok,
           "count=296577 at init and after the full training run (budget 1e6)");
}

} // namespace

int main() {
    std::printf("ponderlab acceptance suite\n==========================\n");
    BackboneConfig bc;
    bc.seed = 11;
    const Backbone bb(bc);
    const auto sv = extract(bb, make_contrastive_set(256, 5), default_extraction_layer(bb));

    criterion_drift_bound(bb, sv);
    criterion_steering_recovery(bb);
    criterion_divergence_monotone(bb, sv);
    criterion_gradient_checks();
    criterion_advantage_identities();
    criterion_unbiasedness(bb);
    criterion_variance_reduction();
    criterion_reward_engine();
    criterion_curriculum();

    TrainedArtifacts art;
    criterion_end_to_end(art);
    criterion_difficulty_calibration(art);
    criterion_frontier(art);
    criterion_determinism();
    criterion_param_budget(art);

    int failed = 0;
    for (const auto& r : g_results) {
        if (!r.pass) ++failed;
    }
    std::printf("==========================\n%d/%zu criteria passed\n",
                static_cast<int>(g_results.size()) - failed, g_results.size());
    return failed == 0 ? 0 : 1;
}
