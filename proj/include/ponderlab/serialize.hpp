#pragma once

#include <string>

#include <json.hpp>

#include "ponderlab/backbone.hpp"
#include "ponderlab/controller.hpp"
#include "ponderlab/curriculum.hpp"
#include "ponderlab/grpo.hpp"
#include "ponderlab/ponder.hpp"
#include "ponderlab/reward.hpp"
#include "ponderlab/steering.hpp"

namespace ponderlab {

using json = nlohmann::json;

constexpr int schema_version = 1;

inline void require_schema(const json& j, const char* kind) {
    if (!j.contains("schema_version") || j.at("schema_version").get<int>() != schema_version) {
        throw SerializationError(std::string(kind) + ": missing or unsupported schema_version");
    }
}

// --- module configs --------------------------------------------------------

inline json to_json(const BackboneConfig& c) {
    return {{"dim", c.dim},
            {"num_layers", c.num_layers},
            {"seed", c.seed},
            {"planted_direction_scale", c.planted_direction_scale}};
}

inline BackboneConfig backbone_config_from_json(const json& j) {
    BackboneConfig c;
    c.dim = j.value("dim", c.dim);
    c.num_layers = j.value("num_layers", c.num_layers);
    c.seed = j.value("seed", c.seed);
    c.planted_direction_scale = j.value("planted_direction_scale", c.planted_direction_scale);
    return c;
}

inline json to_json(const PonderConfig& c) {
    return {{"alpha0", c.alpha0}, {"beta", c.beta},           {"tau", c.tau},
            {"k_max", c.k_max},   {"noise_std", c.noise_std}, {"layer_schedule", c.layer_schedule}};
}

inline PonderConfig ponder_config_from_json(const json& j) {
    PonderConfig c;
    c.alpha0 = j.value("alpha0", c.alpha0);
    c.beta = j.value("beta", c.beta);
    c.tau = j.value("tau", c.tau);
    c.k_max = j.value("k_max", c.k_max);
    c.noise_std = j.value("noise_std", c.noise_std);
    c.layer_schedule = j.value("layer_schedule", c.layer_schedule);
    return c;
}

inline json to_json(const GrpoConfig& c) {
    return {{"group_size", c.group_size},
            {"learning_rate", c.learning_rate},
            {"entropy_coeff", c.entropy_coeff},
            {"baseline", c.baseline == BaselineMode::group_mean ? "group-mean" : "leave-one-out"},
            {"include_teacher_steps", c.include_teacher_steps},
            {"clip_norm", c.clip_norm}};
}

inline GrpoConfig grpo_config_from_json(const json& j) {
    GrpoConfig c;
    c.group_size = j.value("group_size", c.group_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.entropy_coeff = j.value("entropy_coeff", c.entropy_coeff);
    const std::string b = j.value("baseline", std::string("group-mean"));
    if (b == "group-mean") {
        c.baseline = BaselineMode::group_mean;
    } else if (b == "leave-one-out") {
        c.baseline = BaselineMode::leave_one_out;
    } else {
        throw SerializationError("GrpoConfig: unknown baseline '" + b + "'");
    }
    c.include_teacher_steps = j.value("include_teacher_steps", c.include_teacher_steps);
    c.clip_norm = j.value("clip_norm", c.clip_norm);
    return c;
}

inline json to_json(const RewardWeights& w) {
    return {{"w_acc", w.w_acc},
            {"w_flops", w.w_flops},
            {"w_comp", w.w_comp},
            {"w_qual", w.w_qual},
            {"w_rep", w.w_rep},
            {"w_exact", w.w_exact},
            {"w_partial", w.w_partial},
            {"theta_tol", w.theta_tol},
            {"w_stage", w.w_stage},
            {"beta_g", w.beta_g},
            {"len_target", w.len_target},
            {"ppl_baseline", w.ppl_baseline},
            {"sigma_ppl", w.sigma_ppl},
            {"rho", w.rho},
            {"rebalance_rate", w.rebalance_rate},
            {"target_magnitude", w.target_magnitude}};
}

inline RewardWeights reward_weights_from_json(const json& j) {
    RewardWeights w;
    w.w_acc = j.value("w_acc", w.w_acc);
    w.w_flops = j.value("w_flops", w.w_flops);
    w.w_comp = j.value("w_comp", w.w_comp);
    w.w_qual = j.value("w_qual", w.w_qual);
    w.w_rep = j.value("w_rep", w.w_rep);
    w.w_exact = j.value("w_exact", w.w_exact);
    w.w_partial = j.value("w_partial", w.w_partial);
    w.theta_tol = j.value("theta_tol", w.theta_tol);
    w.w_stage = j.value("w_stage", w.w_stage);
    w.beta_g = j.value("beta_g", w.beta_g);
    w.len_target = j.value("len_target", w.len_target);
    w.ppl_baseline = j.value("ppl_baseline", w.ppl_baseline);
    w.sigma_ppl = j.value("sigma_ppl", w.sigma_ppl);
    w.rho = j.value("rho", w.rho);
    w.rebalance_rate = j.value("rebalance_rate", w.rebalance_rate);
    w.target_magnitude = j.value("target_magnitude", w.target_magnitude);
    return w;
}

inline json to_json(const CurriculumState& c) {
    return {{"t1", c.t1},
            {"t2", c.t2},
            {"theta_comp", c.theta_comp},
            {"theta_qual", c.theta_qual},
            {"eps_div", c.eps_div},
            {"teacher_target_min", c.teacher_target_min},
            {"teacher_target_max", c.teacher_target_max}};
}

inline CurriculumState curriculum_from_json(const json& j) {
    CurriculumState c;
    c.t1 = j.value("t1", c.t1);
    c.t2 = j.value("t2", c.t2);
    c.theta_comp = j.value("theta_comp", c.theta_comp);
    c.theta_qual = j.value("theta_qual", c.theta_qual);
    c.eps_div = j.value("eps_div", c.eps_div);
    c.teacher_target_min = j.value("teacher_target_min", c.teacher_target_min);
    c.teacher_target_max = j.value("teacher_target_max", c.teacher_target_max);
    return c;
}

// --- weight-bearing artifacts ----------------------------------------------

inline std::string checksum_hex(std::uint64_t h) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

inline json to_json(const Backbone& bb) {
    json j;
    j["schema_version"] = schema_version;
    j["kind"] = "backbone";
    j["config"] = to_json(bb.config());
    j["checksum"] = checksum_hex(bb.checksum());
    json w;
    w["embeddings"] = bb.embeddings();
    w["layers"] = bb.layer_weights();
    w["readout"] = bb.readout();
    j["weights"] = std::move(w);
    return j;
}

// The backbone is rebuilt from its config seed (construction is deterministic)
// and the stored checksum guards against drift in either the file or the code.
inline Backbone backbone_from_json(const json& j) {
    require_schema(j, "backbone");
    Backbone bb(backbone_config_from_json(j.at("config")));
    if (j.contains("checksum") && j.at("checksum").get<std::string>() != checksum_hex(bb.checksum())) {
        throw SerializationError("backbone: checksum mismatch between file and rebuilt weights");
    }
    return bb;
}

inline json to_json(const SteeringVector& sv) {
    return {{"schema_version", schema_version},
            {"kind", "steering"},
            {"layer", sv.layer},
            {"n", sv.extraction_size},
            {"raw_norm", sv.raw_norm},
            {"direction", sv.direction},
            {"backbone_checksum", checksum_hex(sv.backbone_checksum)}};
}

inline SteeringVector steering_from_json(const json& j, const Backbone& backbone) {
    require_schema(j, "steering");
    SteeringVector sv;
    sv.layer = j.at("layer").get<int>();
    sv.extraction_size = j.at("n").get<int>();
    sv.raw_norm = j.at("raw_norm").get<double>();
    sv.direction = j.at("direction").get<Vec>();
    const std::string cs = j.at("backbone_checksum").get<std::string>();
    if (cs != checksum_hex(backbone.checksum())) {
        throw SerializationError("steering: extracted against a different backbone (checksum " +
                                 cs + ")");
    }
    sv.backbone_checksum = backbone.checksum();
    if (std::abs(norm2(sv.direction) - 1.0) > 1e-9) {
        throw SerializationError("steering: direction is not unit norm");
    }
    return sv;
}

inline json to_json(const ControllerParams& p) {
    return {{"schema_version", schema_version},
            {"kind", "controller"},
            {"d", p.d},
            {"temp", p.temp},
            {"activation", p.act == Activation::gelu ? "gelu" : "relu"},
            {"checksum", checksum_hex(p.t.checksum())},
            {"ln_gain", p.t.ln_gain},
            {"ln_bias", p.t.ln_bias},
            {"w1", p.t.w1},
            {"b1", p.t.b1},
            {"w2", p.t.w2},
            {"b2", p.t.b2},
            {"head_w", p.t.head_w},
            {"head_b", p.t.head_b}};
}

inline ControllerParams controller_from_json(const json& j) {
    require_schema(j, "controller");
    ControllerParams p;
    p.d = j.at("d").get<int>();
    p.temp = j.at("temp").get<double>();
    const std::string act = j.value("activation", std::string("gelu"));
    if (act == "gelu") {
        p.act = Activation::gelu;
    } else if (act == "relu") {
        p.act = Activation::relu;
    } else {
        throw SerializationError("controller: unknown activation '" + act + "'");
    }
    p.t.ln_gain = j.at("ln_gain").get<Vec>();
    p.t.ln_bias = j.at("ln_bias").get<Vec>();
    p.t.w1 = j.at("w1").get<Vec>();
    p.t.b1 = j.at("b1").get<Vec>();
    p.t.w2 = j.at("w2").get<Vec>();
    p.t.b2 = j.at("b2").get<Vec>();
    p.t.head_w = j.at("head_w").get<Vec>();
    p.t.head_b = j.at("head_b").get<double>();
    if (j.contains("checksum") &&
        j.at("checksum").get<std::string>() != checksum_hex(p.t.checksum())) {
        throw SerializationError("controller: parameter checksum mismatch");
    }
    p.check_budget();
    return p;
}

inline json to_json(const FlopsStats& s) {
    return {{"mean", s.mean}, {"var", s.var}, {"decay", s.decay}, {"count", s.count}};
}

inline FlopsStats flops_stats_from_json(const json& j) {
    FlopsStats s;
    s.mean = j.value("mean", 0.0);
    s.var = j.value("var", 0.0);
    s.decay = j.value("decay", 0.99);
    s.count = j.value("count", static_cast<std::int64_t>(0));
    return s;
}

// One trajectory as a JSON-lines record for offline analysis.
inline json trajectory_to_json(const Trajectory& t) {
    json steps = json::array();
    for (const auto& s : t.steps) {
        steps.push_back({{"p", s.p},
                         {"action", s.action},
                         {"source", s.source == StepSource::teacher ? "teacher" : "student"}});
    }
    return {{"steps", steps},
            {"halted_at", t.halted_at},
            {"flops", t.flops},
            {"value", t.output.value},
            {"rewards",
             {{"acc", t.rewards.acc},
              {"flops", t.rewards.flops},
              {"comp", t.rewards.comp},
              {"qual", t.rewards.qual},
              {"rep", t.rewards.rep},
              {"total", t.rewards.total}}}};
}

} // namespace ponderlab
