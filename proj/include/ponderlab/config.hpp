#pragma once

#include <cstdlib>
#include <string>

#include "ponderlab/harness.hpp"
#include "ponderlab/serialize.hpp"

namespace ponderlab {

inline json train_config_to_json(const TrainConfig& cfg) {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = "train-config";
    j["backbone"] = to_json(cfg.backbone);
    j["ponder"] = to_json(cfg.ponder);
    j["grpo"] = to_json(cfg.grpo);
    j["reward"] = to_json(cfg.reward);
    j["curriculum"] = to_json(cfg.curriculum);
    j["master_seed"] = cfg.master_seed;
    j["batch_size"] = cfg.batch_size;
    j["total_steps"] = cfg.total_steps;
    j["eval_cadence"] = cfg.eval_cadence;
    j["eval_suite_size"] = cfg.eval_suite_size;
    j["eval_suite_seed"] = cfg.eval_suite_seed;
    j["train_pool_per_level"] = cfg.train_pool_per_level;
    j["extraction_count"] = cfg.extraction_count;
    j["steering_layer"] = cfg.steering_layer;
    j["temp_start"] = cfg.temp_start;
    j["temp_final"] = cfg.temp_final;
    j["auto_rebalance"] = cfg.auto_rebalance;
    j["gate_max_attempts"] = cfg.gate_max_attempts;
    return j;
}

inline TrainConfig train_config_from_json(const json& j) {
    TrainConfig cfg;
    if (j.contains("backbone")) cfg.backbone = backbone_config_from_json(j.at("backbone"));
    if (j.contains("ponder")) cfg.ponder = ponder_config_from_json(j.at("ponder"));
    if (j.contains("grpo")) cfg.grpo = grpo_config_from_json(j.at("grpo"));
    if (j.contains("reward")) cfg.reward = reward_weights_from_json(j.at("reward"));
    if (j.contains("curriculum")) cfg.curriculum = curriculum_from_json(j.at("curriculum"));
    cfg.master_seed = j.value("master_seed", cfg.master_seed);
    cfg.batch_size = j.value("batch_size", cfg.batch_size);
    cfg.total_steps = j.value("total_steps", cfg.total_steps);
    cfg.eval_cadence = j.value("eval_cadence", cfg.eval_cadence);
    cfg.eval_suite_size = j.value("eval_suite_size", cfg.eval_suite_size);
    cfg.eval_suite_seed = j.value("eval_suite_seed", cfg.eval_suite_seed);
    cfg.train_pool_per_level = j.value("train_pool_per_level", cfg.train_pool_per_level);
    cfg.extraction_count = j.value("extraction_count", cfg.extraction_count);
    cfg.steering_layer = j.value("steering_layer", cfg.steering_layer);
    cfg.temp_start = j.value("temp_start", cfg.temp_start);
    cfg.temp_final = j.value("temp_final", cfg.temp_final);
    cfg.auto_rebalance = j.value("auto_rebalance", cfg.auto_rebalance);
    cfg.gate_max_attempts = j.value("gate_max_attempts", cfg.gate_max_attempts);
    return cfg;
}

// Applies one "dotted.path=value" override onto a config JSON tree. The value
// is parsed as JSON when possible, otherwise treated as a string.
inline void apply_override(json& j, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos || eq == 0) {
        throw ConfigError("override must look like key.path=value: " + assignment);
    }
    const std::string path = assignment.substr(0, eq);
    const std::string raw = assignment.substr(eq + 1);
    json value;
    try {
        value = json::parse(raw);
    } catch (const json::exception&) {
        value = raw;
    }
    json* node = &j;
    std::size_t start = 0;
    while (true) {
        const auto dotpos = path.find('.', start);
        const std::string key = path.substr(start, dotpos - start);
        if (key.empty()) throw ConfigError("override has an empty path segment: " + assignment);
        if (dotpos == std::string::npos) {
            (*node)[key] = value;
            return;
        }
        node = &(*node)[key];
        start = dotpos + 1;
    }
}

// Master-seed override hook for scripted runs.
inline void apply_seed_env(json& config_json, const char* env_name = "PONDERLAB_SEED") {
    const char* env = std::getenv(env_name);
    if (env == nullptr || *env == '\0') return;
    try {
        config_json["master_seed"] = std::stoull(env);
    } catch (const std::exception&) {
        throw ConfigError(std::string(env_name) + " must be an unsigned integer");
    }
}

inline json to_json(const LevelStats& s) {
    return {{"count", s.count},
            {"acc", s.acc},
            {"mean_steps", s.mean_steps},
            {"mean_flops", s.mean_flops}};
}

inline json to_json(const EvalReport& r) {
    json per_level = json::array();
    for (const auto& ls : r.per_level) per_level.push_back(to_json(ls));
    return {{"schema_version", schema_version},
            {"kind", "eval-report"},
            {"acc", r.acc},
            {"avg_steps", r.avg_steps},
            {"avg_flops", r.avg_flops},
            {"log10_flops", r.log10_flops},
            {"avg_overhead_flops", r.avg_overhead_flops},
            {"per_level", per_level},
            {"spearman_level_steps", r.spearman_level_steps},
            {"reward_means",
             {{"acc", r.reward_means.acc},
              {"flops", r.reward_means.flops},
              {"comp", r.reward_means.comp},
              {"qual", r.reward_means.qual},
              {"rep", r.reward_means.rep},
              {"total", r.reward_means.total}}}};
}

} // namespace ponderlab
