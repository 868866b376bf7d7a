// Command-line front end: steering extraction, controller training, evaluation,
// frontier sweeps, log reshaping, and diagnostic probes over the ponderlab
// library. One JSON config drives everything; every field can be overridden
// with --set key.path=value, and PONDERLAB_SEED overrides the master seed.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "ponderlab/config.hpp"
#include "ponderlab/harness.hpp"

namespace fs = std::filesystem;
using namespace ponderlab;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& path, const std::string& content) {
    if (const auto parent = fs::path(path).parent_path(); !parent.empty()) {
        fs::create_directories(parent);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << content;
}

json load_config_json(const std::string& config_path, const std::vector<std::string>& overrides) {
    json j = config_path.empty() ? train_config_to_json(TrainConfig{})
                                 : json::parse(read_text(config_path));
    for (const auto& o : overrides) apply_override(j, o);
    apply_seed_env(j);
    return j;
}

std::vector<double> parse_grid(const std::string& spec) {
    std::vector<double> grid;
    std::stringstream ss(spec);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (!item.empty()) grid.push_back(std::stod(item));
    }
    if (grid.empty()) throw ConfigError("empty grid: " + spec);
    return grid;
}

std::string tasks_to_jsonl(const std::vector<TaskInstance>& tasks) {
    std::string out = json{{"schema_version", schema_version}, {"kind", "task-suite"},
                           {"count", tasks.size()}}
                          .dump() +
                      "\n";
    for (const auto& t : tasks) {
        out += json{{"id", t.id},
                    {"level", t.level},
                    {"prompt", t.prompt},
                    {"ground_truth", t.ground_truth},
                    {"reference_stages", t.reference_stages}}
                   .dump() +
               "\n";
    }
    return out;
}

struct LoadedCheckpoint {
    TrainConfig config;
    Backbone backbone;
    ControllerParams controller;
    SteeringVector steering;
    FlopsStats stats;
    RewardWeights weights;
};

LoadedCheckpoint load_checkpoint(const std::string& path) {
    const json ck = json::parse(read_text(path));
    require_schema(ck, "checkpoint");
    TrainConfig cfg = train_config_from_json(ck.at("config"));
    Backbone backbone(cfg.backbone);
    if (ck.at("backbone_checksum").get<std::string>() != checksum_hex(backbone.checksum())) {
        throw SerializationError("checkpoint: backbone checksum mismatch");
    }
    return {cfg, std::move(backbone), controller_from_json(ck.at("controller")),
            steering_from_json(ck.at("steering"), backbone), // note: checked against backbone
            flops_stats_from_json(ck.at("flops_stats")),
            reward_weights_from_json(ck.at("reward_weights"))};
}

int cmd_extract(const json& config_json, const std::string& out_dir) {
    const TrainConfig cfg = train_config_from_json(config_json);
    Backbone backbone(cfg.backbone);
    const int layer =
        cfg.steering_layer >= 0 ? cfg.steering_layer : default_extraction_layer(backbone);
    const auto sv = extract(
        backbone, make_contrastive_set(cfg.extraction_count, cfg.master_seed ^ 0xC0117A57ULL),
        layer);
    write_text(out_dir + "/backbone.json", to_json(backbone).dump(2) + "\n");
    write_text(out_dir + "/steering.json", to_json(sv).dump(2) + "\n");
    std::cout << "extracted steering vector at layer " << sv.layer << " from "
              << sv.extraction_size << " contrast pairs (raw norm " << sv.raw_norm << ")\n"
              << "wrote " << out_dir << "/backbone.json and " << out_dir << "/steering.json\n";
    return 0;
}

int cmd_train(const json& config_json, const std::string& out_dir, const std::string& resume) {
    const TrainConfig cfg = train_config_from_json(config_json);
    std::optional<json> resume_ck;
    if (!resume.empty()) resume_ck = json::parse(read_text(resume));
    const TrainResult res = train(cfg, resume_ck);
    write_text(out_dir + "/train_log.csv", res.log_csv);
    write_text(out_dir + "/events.jsonl", res.events_jsonl);
    write_text(out_dir + "/checkpoint.json", res.checkpoint.dump() + "\n");
    write_text(out_dir + "/config.json", config_json.dump(2) + "\n");
    write_text(out_dir + "/final_report.json", to_json(res.final_report).dump(2) + "\n");
    std::cout << "trained " << res.steps_run << " steps; final acc " << res.final_report.acc
              << ", avg ponder steps " << res.final_report.avg_steps << ", log10 FLOPs "
              << res.final_report.log10_flops << "\n"
              << "artifacts in " << out_dir << "\n";
    return 0;
}

int cmd_eval(const std::string& checkpoint_path, int suite_size, std::uint64_t suite_seed,
             double tau_override, const std::string& out_path, const std::string& export_suite,
             const std::string& dump_trajectories) {
    auto ck = load_checkpoint(checkpoint_path);
    PonderConfig pc = ck.config.ponder;
    if (tau_override >= 0.0) pc.tau = tau_override;
    const auto suite = generate_suite(suite_size, suite_seed);
    const auto rep = evaluate(ck.backbone, ck.controller, ck.steering, pc, suite, ck.stats,
                              ck.weights, suite_seed);
    write_text(out_path, to_json(rep).dump(2) + "\n");
    if (!export_suite.empty()) write_text(export_suite, tasks_to_jsonl(suite));
    if (!dump_trajectories.empty()) {
        std::string lines = json{{"schema_version", schema_version}, {"kind", "trajectories"}}
                                .dump() +
                            "\n";
        RngStream base(suite_seed, "eval");
        for (std::size_t i = 0; i < suite.size(); ++i) {
            auto rng = base.derive("task", i);
            const Vec z0 = ck.backbone.encode(build_prompt(suite[i], Mode::direct)).z0;
            auto traj = ponder_run(ck.backbone, ck.controller, ck.steering, pc, z0, prompt_width,
                                   rng);
            const double ppl = ck.backbone.perplexity_proxy(traj.output);
            traj.rewards = score_output(traj.output.value, suite[i].ground_truth, traj.flops,
                                        ck.stats, traj.output.tokens, ppl, ck.weights);
            json row = trajectory_to_json(traj);
            row["task_id"] = suite[i].id;
            lines += row.dump() + "\n";
        }
        write_text(dump_trajectories, lines);
    }
    std::cout << "acc " << rep.acc << ", avg steps " << rep.avg_steps << ", log10 FLOPs "
              << rep.log10_flops << ", level-step spearman " << rep.spearman_level_steps << "\n"
              << "report written to " << out_path << "\n";
    return 0;
}

int cmd_sweep(const std::string& axis, const std::string& grid_spec, const json& config_json,
              const std::string& checkpoint_path, const std::string& out_path) {
    const auto grid = parse_grid(grid_spec);
    std::vector<SweepRow> rows;
    if (axis == "tau") {
        if (checkpoint_path.empty()) {
            throw ConfigError("tau sweep needs --checkpoint (it is evaluation-only)");
        }
        auto ck = load_checkpoint(checkpoint_path);
        const auto suite = generate_suite(ck.config.eval_suite_size, ck.config.eval_suite_seed);
        rows = sweep_tau(ck.backbone, ck.controller, ck.steering, ck.config.ponder, grid, suite,
                         ck.stats, ck.weights, ck.config.eval_suite_seed);
    } else if (axis == "lambda") {
        const TrainConfig base = train_config_from_json(config_json);
        rows = sweep_lambda(base, grid);
    } else {
        throw ConfigError("unknown sweep axis '" + axis + "' (expected tau or lambda)");
    }
    write_text(out_path, frontier_csv(rows));
    std::cout << "wrote " << rows.size() << " frontier rows to " << out_path << "\n";
    return 0;
}

// Reshapes the wide training CSV into tidy (step, metric, value) rows.
int cmd_plot_data(const std::string& log_path, const std::string& out_path) {
    const std::string text = read_text(log_path);
    std::stringstream ss(text);
    std::string line;
    std::vector<std::string> header;
    std::string out = "# ponderlab-tidy schema_version=1\nstep,metric,value\n";
    while (std::getline(ss, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> cells;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) cells.push_back(cell);
        if (header.empty()) {
            header = cells;
            continue;
        }
        for (std::size_t c = 1; c < cells.size() && c < header.size(); ++c) {
            if (cells[c].empty()) continue;
            char* end = nullptr;
            std::strtod(cells[c].c_str(), &end);
            const bool numeric = end != nullptr && *end == '\0' && end != cells[c].c_str();
            if (numeric) out += cells[0] + "," + header[c] + "," + cells[c] + "\n";
        }
    }
    write_text(out_path, out);
    std::cout << "wrote tidy metrics to " << out_path << "\n";
    return 0;
}

int cmd_probe(const json& config_json, const std::string& kind, const std::string& out_path) {
    const TrainConfig cfg = train_config_from_json(config_json);
    json report;
    report["schema_version"] = schema_version;
    report["kind"] = "probe-report";

    if (kind == "all" || kind == "grpo-unbiasedness") {
        Backbone backbone(cfg.backbone);
        const auto t0 = generate_one_task(2, cfg.master_seed, 0);
        const auto t1 = generate_one_task(4, cfg.master_seed, 1);
        TinyMdp mdp;
        mdp.z0 = backbone.encode(build_prompt(t0, Mode::direct)).z0;
        mdp.z1 = backbone.encode(build_prompt(t1, Mode::direct)).z0;
        mdp.reward_halt0 = 0.2;
        mdp.reward_cont_halt = 1.0;
        mdp.reward_cont_cont = -0.3;
        const auto controller = controller_init(cfg.backbone.dim, cfg.master_seed ^ 0xC011, 1.0);
        RngStream mc(cfg.master_seed, "probe-unbiasedness");
        const auto rep = unbiasedness_probe(controller, mdp, 100000, cfg.grpo.group_size, mc);
        report["grpo_unbiasedness"] = {{"samples", rep.samples},
                                       {"group_size", rep.group_size},
                                       {"max_abs_z", rep.max_abs_z},
                                       {"coords_checked", rep.coords_checked},
                                       {"coords_over_3se", rep.coords_over_3se},
                                       {"within_3se", rep.within_3se},
                                       {"exact_grad_norm", rep.exact_grad_norm},
                                       {"mc_grad_norm", rep.mc_grad_norm}};
    }
    if (kind == "all" || kind == "grpo-variance") {
        RngStream rng(cfg.master_seed, "probe-variance");
        const auto res = variance_probe({2, 4, 8}, 10000, VarianceProbeModel{}, rng);
        json by_group = json::array();
        for (const auto& [g, v] : res.grpo_variance_by_group) {
            by_group.push_back({{"group_size", g}, {"variance", v}});
        }
        report["grpo_variance"] = {{"reinforce_variance", res.reinforce_variance},
                                   {"grpo", by_group}};
    }
    if (kind == "all" || kind == "steering-convergence") {
        Backbone backbone(cfg.backbone);
        const auto res = convergence_probe(backbone, {64, 256, 1024}, 12, cfg.master_seed);
        json rows = json::array();
        for (const auto& [n, err] : res) rows.push_back({{"n", n}, {"mean_angle", err}});
        report["steering_convergence"] = rows;
    }
    write_text(out_path, report.dump(2) + "\n");
    std::cout << "probe report written to " << out_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ponderlab: adaptive latent pondering on a frozen toy backbone"};
    app.require_subcommand(1);

    std::string config_path, out_dir = "out", resume, checkpoint, out_path, axis, grid, kind;
    std::string log_path, export_suite, dump_trajectories;
    std::vector<std::string> overrides;
    int suite_size = 1000;
    std::uint64_t suite_seed = 7;
    double tau_override = -1.0;

    auto add_config_opts = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "JSON config file (defaults when omitted)");
        sub->add_option("--set", overrides, "override config fields, e.g. --set grpo.group_size=4");
    };

    auto* s_extract = app.add_subcommand("extract", "build the backbone and steering vector");
    add_config_opts(s_extract);
    s_extract->add_option("--out-dir", out_dir, "output directory");

    auto* s_train = app.add_subcommand("train", "run the full training loop");
    add_config_opts(s_train);
    s_train->add_option("--out-dir", out_dir, "output directory");
    s_train->add_option("--resume", resume, "checkpoint to resume from");

    auto* s_eval = app.add_subcommand("eval", "evaluate a checkpoint on a pinned suite");
    s_eval->add_option("--checkpoint", checkpoint, "checkpoint JSON")->required();
    s_eval->add_option("--suite-size", suite_size, "task count (multiple of 5)");
    s_eval->add_option("--suite-seed", suite_seed, "suite seed");
    s_eval->add_option("--tau", tau_override, "override the halting threshold");
    s_eval->add_option("--out", out_path, "report path")->required();
    s_eval->add_option("--export-suite", export_suite, "also write the task suite as JSON lines");
    s_eval->add_option("--dump-trajectories", dump_trajectories,
                       "also write per-task trajectories as JSON lines");

    auto* s_sweep = app.add_subcommand("sweep", "compute a compute-accuracy frontier");
    add_config_opts(s_sweep);
    s_sweep->add_option("--axis", axis, "tau or lambda")->required();
    s_sweep->add_option("--grid", grid, "comma-separated knob values")->required();
    s_sweep->add_option("--checkpoint", checkpoint, "checkpoint (tau sweeps)");
    s_sweep->add_option("--out", out_path, "frontier CSV path")->required();

    auto* s_plot = app.add_subcommand("plot-data", "reshape a training log for plotting");
    s_plot->add_option("--log", log_path, "train_log.csv")->required();
    s_plot->add_option("--out", out_path, "tidy CSV path")->required();

    auto* s_probe = app.add_subcommand("probe", "run estimator diagnostics");
    add_config_opts(s_probe);
    s_probe->add_option("--kind", kind, "all | grpo-unbiasedness | grpo-variance | steering-convergence")
        ->default_val("all");
    s_probe->add_option("--out", out_path, "report path")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (s_extract->parsed()) return cmd_extract(load_config_json(config_path, overrides), out_dir);
        if (s_train->parsed()) {
            return cmd_train(load_config_json(config_path, overrides), out_dir, resume);
        }
        if (s_eval->parsed()) {
            return cmd_eval(checkpoint, suite_size, suite_seed, tau_override, out_path,
                            export_suite, dump_trajectories);
        }
        if (s_sweep->parsed()) {
            return cmd_sweep(axis, grid, load_config_json(config_path, overrides), checkpoint,
                             out_path);
        }
        if (s_plot->parsed()) return cmd_plot_data(log_path, out_path);
        if (s_probe->parsed()) return cmd_probe(load_config_json(config_path, overrides), kind, out_path);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
