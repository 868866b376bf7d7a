#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ponderlab/numerics.hpp"
#include "ponderlab/vocab.hpp"

namespace ponderlab {

struct BackboneConfig {
    int dim = 64;
    int num_layers = 4;
    std::uint64_t seed = 1;
    double planted_direction_scale = 0.2;

    void validate() const {
        if (dim < 8) throw ConfigError("BackboneConfig: dim must be >= 8");
        if (num_layers < 2) throw ConfigError("BackboneConfig: num_layers must be >= 2");
        if (planted_direction_scale <= 0.0) {
            throw ConfigError("BackboneConfig: planted_direction_scale must be > 0");
        }
    }
};

struct ActivationTrace {
    std::vector<Vec> per_layer; // final-token state at each layer
    Vec z0;                     // == per_layer.back()
};

struct AnswerDistribution {
    Vec probabilities; // over the answer alphabet, sums to 1
    double value = 0.0;
    TokenSeq tokens;
};

// Exact integer FLOPs model (multiply-adds counted x2).
struct CostModel {
    int d = 64;
    int num_layers = 4;
    int alphabet = answer_alphabet::size;
    static constexpr int controller_hidden = 512;

    std::int64_t encode(int prompt_len) const {
        return 2LL * prompt_len * num_layers * static_cast<std::int64_t>(d) * d;
    }
    std::int64_t ponder_step() const { return d; }
    std::int64_t controller_eval() const {
        const std::int64_t h = controller_hidden;
        return 2LL * (static_cast<std::int64_t>(d) * h + h * h + h);
    }
    std::int64_t decode() const { return 2LL * d * alphabet; }
};

namespace backbone_detail {

// Fraction of the gate at which each reasoning stage shows up in the output.
constexpr double stage_gamma[4] = {0.10, 0.35, 0.60, 0.85};
constexpr Token stage_token[4] = {tok::stage_setup, tok::stage_compute, tok::stage_verify,
                                  tok::stage_conclude};
constexpr double gate_per_level = 0.35; // projection required per difficulty level
constexpr double gate_floor = 0.05;
constexpr double value_scale = 256.0; // answers stored as value/value_scale
// The raw recurrent residue is kept as state texture but projected to a fixed
// radius: per-prompt norm spread would otherwise jitter normalized features
// near the halting boundary.
constexpr double residue_radius = 10.0;

struct ParsedChain {
    double full = 0.0;    // left-to-right value of the whole chain
    double partial = 0.0; // value with the final operation dropped
    int n_ops = 0;
};

// Lenient scan: digits and operators, anything else ignored. Evaluation is
// left-to-right, matching the task generator's convention.
inline ParsedChain parse_chain(const TokenSeq& prompt) {
    ParsedChain out;
    double value = 0.0, prev = 0.0;
    bool have_value = false;
    Token pending_op = tok::pad;
    for (Token t : prompt) {
        if (tok::is_digit(t)) {
            if (!have_value) {
                value = t;
                have_value = true;
            } else if (pending_op != tok::pad) {
                prev = value;
                switch (pending_op) {
                    case tok::plus: value += t; break;
                    case tok::minus: value -= t; break;
                    case tok::times: value *= t; break;
                    default: break;
                }
                ++out.n_ops;
                pending_op = tok::pad;
                out.partial = prev;
            }
        } else if (t == tok::plus || t == tok::minus || t == tok::times) {
            if (have_value) pending_op = t;
        }
    }
    out.full = have_value ? value : 0.0;
    if (out.n_ops == 0) out.partial = out.full;
    return out;
}

} // namespace backbone_detail

// Frozen, seed-deterministic toy encoder/decoder. The latent space carries an
// orthonormal set of functional directions: a planted gate direction plus
// channels holding the true answer, a shallow first-pass guess, and the gate
// projection the problem's difficulty demands. Moving the state along the
// planted direction swings the decoded answer from the shallow guess to the
// true one; every other construction detail is inert noise.
class Backbone {
  public:
    explicit Backbone(BackboneConfig cfg) : cfg_(cfg) {
        cfg_.validate();
        build_weights();
        checksum_ = compute_checksum();
    }

    const BackboneConfig& config() const { return cfg_; }
    std::uint64_t checksum() const { return checksum_; }
    CostModel cost_model() const { return {cfg_.dim, cfg_.num_layers, answer_alphabet::size}; }

    // Diagnostic ground truth for extraction probes; training and inference
    // code paths never consult it.
    const Vec& planted_direction() const { return planted_u_; }

    ActivationTrace encode(const TokenSeq& prompt) const {
        if (prompt.empty()) throw DomainError("encode: empty prompt");
        for (Token t : prompt) {
            if (!tok::in_vocab(t)) {
                throw DomainError("encode: unknown token " + std::to_string(t));
            }
        }
        const int d = cfg_.dim;
        const int L = cfg_.num_layers;

        Mode mode = Mode::none;
        TokenSeq body; // marker tokens stripped; they act through the planted channel only
        body.reserve(prompt.size());
        for (Token t : prompt) {
            if (t == tok::mark_think || t == tok::mark_direct) {
                if (mode == Mode::none) mode = (t == tok::mark_think) ? Mode::think : Mode::direct;
                body.push_back(tok::pad);
            } else {
                body.push_back(t);
            }
        }

        // Stacked residual recurrence: layer input is the previous layer's
        // position-wise output; each (layer, position) costs one d x d matvec.
        std::vector<Vec> seq(body.size(), Vec(static_cast<std::size_t>(d)));
        for (std::size_t t = 0; t < body.size(); ++t) {
            const double* e = embeddings_.data() + static_cast<std::size_t>(body[t]) * d;
            for (int i = 0; i < d; ++i) seq[t][static_cast<std::size_t>(i)] = e[i];
        }
        ActivationTrace trace;
        trace.per_layer.resize(static_cast<std::size_t>(L));
        Vec state(static_cast<std::size_t>(d));
        Vec pre(static_cast<std::size_t>(d));
        for (int l = 0; l < L; ++l) {
            const Vec& w = layer_w_[static_cast<std::size_t>(l)];
            std::fill(state.begin(), state.end(), 0.0);
            for (std::size_t t = 0; t < body.size(); ++t) {
                for (int i = 0; i < d; ++i) {
                    pre[static_cast<std::size_t>(i)] = detail::dot_n(
                        w.data() + static_cast<std::size_t>(i) * d, state.data(),
                        static_cast<std::size_t>(d));
                }
                for (int i = 0; i < d; ++i) {
                    const auto ii = static_cast<std::size_t>(i);
                    state[ii] += std::tanh(pre[ii] + seq[t][ii]);
                }
                seq[t] = state; // becomes next layer's input
            }
            trace.per_layer[static_cast<std::size_t>(l)] = finalize_state(state, prompt, mode);
        }
        trace.z0 = trace.per_layer.back();
        return trace;
    }

    AnswerDistribution decode(const Vec& z) const {
        if (static_cast<int>(z.size()) != cfg_.dim) {
            throw DimensionError("decode: state dimension mismatch");
        }
        if (!all_finite(z)) throw DomainError("decode: non-finite state");

        const double v_true = std::round(backbone_detail::value_scale * dot(z, chan_true_));
        const double v_wrong = std::round(backbone_detail::value_scale * dot(z, chan_wrong_));
        const double need = std::max(backbone_detail::gate_floor, dot(z, chan_required_));
        double gamma = dot(z, planted_u_) / need;
        gamma = std::min(1.0, std::max(0.0, gamma));
        const double value = std::round((1.0 - gamma) * v_wrong + gamma * v_true);

        AnswerDistribution out;
        out.value = value;
        for (int s = 0; s < 4; ++s) {
            if (gamma >= backbone_detail::stage_gamma[s]) {
                out.tokens.push_back(backbone_detail::stage_token[s]);
            }
        }
        TokenSeq digits = render_integer(static_cast<long long>(value));
        out.tokens.insert(out.tokens.end(), digits.begin(), digits.end());
        out.tokens.push_back(tok::eos);

        // Softmax readout; logits are linear in z.
        const int a = answer_alphabet::size;
        Vec logits(static_cast<std::size_t>(a));
        double max_logit = -1e300;
        for (int i = 0; i < a; ++i) {
            const double acc = detail::dot_n(readout_.data() + static_cast<std::size_t>(i) * cfg_.dim,
                                             z.data(), static_cast<std::size_t>(cfg_.dim));
            logits[static_cast<std::size_t>(i)] = acc;
            max_logit = std::max(max_logit, acc);
        }
        out.probabilities.resize(static_cast<std::size_t>(a));
        double sum = 0.0;
        for (int i = 0; i < a; ++i) {
            const auto ii = static_cast<std::size_t>(i);
            out.probabilities[ii] = std::exp(logits[ii] - max_logit);
            sum += out.probabilities[ii];
        }
        for (double& p : out.probabilities) p /= sum;
        return out;
    }

    // Mean negative log-probability of the emitted tokens under the answer
    // distribution, exponentiated; the toy stand-in for output perplexity.
    double perplexity_proxy(const AnswerDistribution& ans) const {
        if (ans.tokens.empty()) return static_cast<double>(answer_alphabet::size);
        double nll = 0.0;
        for (Token t : ans.tokens) {
            const int idx = answer_alphabet::index_of(t);
            const double p = std::max(ans.probabilities[static_cast<std::size_t>(idx)], 1e-12);
            nll -= std::log(p);
        }
        return std::exp(nll / static_cast<double>(ans.tokens.size()));
    }

    // Raw weight blobs, exposed for serialization and checksum tests.
    const Vec& embeddings() const { return embeddings_; }
    const std::vector<Vec>& layer_weights() const { return layer_w_; }
    const Vec& readout() const { return readout_; }

  private:
    void build_weights() {
        const int d = cfg_.dim;
        RngStream rng(cfg_.seed, "backbone");
        embeddings_.resize(static_cast<std::size_t>(tok::vocab_size) * d);
        for (double& x : embeddings_) x = rng.gaussian();
        layer_w_.assign(static_cast<std::size_t>(cfg_.num_layers), Vec());
        const double wscale = 1.0 / std::sqrt(static_cast<double>(d));
        for (auto& w : layer_w_) {
            w.resize(static_cast<std::size_t>(d) * d);
            for (double& x : w) x = rng.gaussian() * wscale;
        }

        // Orthonormal functional basis: column 0 is the planted direction,
        // 1..3 are the answer/guess/required channels, the rest hosts the
        // per-problem contrast noise.
        basis_.assign(static_cast<std::size_t>(d), Vec(static_cast<std::size_t>(d)));
        for (auto& col : basis_) {
            for (double& x : col) x = rng.gaussian();
        }
        for (std::size_t c = 0; c < basis_.size(); ++c) {
            for (int pass = 0; pass < 2; ++pass) {
                for (std::size_t p = 0; p < c; ++p) {
                    axpy(-dot(basis_[c], basis_[p]), basis_[p], basis_[c]);
                }
            }
            const double n = norm2(basis_[c]);
            if (n < 1e-9) throw ConfigError("backbone basis degenerate");
            for (double& x : basis_[c]) x /= n;
        }
        planted_u_ = basis_[0];
        chan_true_ = basis_[1];
        chan_wrong_ = basis_[2];
        chan_required_ = basis_[3];

        // Readout rows live in the span of the functional channels, so answer
        // logits track the bounded channel projections instead of the large
        // recurrent residue. Logits stay linear in z and shift along the
        // planted direction as pondering progresses.
        readout_.assign(static_cast<std::size_t>(answer_alphabet::size) * d, 0.0);
        for (int a = 0; a < answer_alphabet::size; ++a) {
            double* row = readout_.data() + static_cast<std::size_t>(a) * d;
            const double cu = 0.5 * rng.gaussian();
            const double ct = 1.0 * rng.gaussian();
            const double cw = 1.0 * rng.gaussian();
            const double cq = 0.3 * rng.gaussian();
            for (int j = 0; j < d; ++j) {
                const auto jj = static_cast<std::size_t>(j);
                row[j] = cu * planted_u_[jj] + ct * chan_true_[jj] + cw * chan_wrong_[jj] +
                         cq * chan_required_[jj];
            }
        }
    }

    // Clean the functional channels out of the raw recurrent state, then write
    // the exact channel values and the mode-marker effect.
    Vec finalize_state(const Vec& raw, const TokenSeq& prompt, Mode mode) const {
        Vec z = raw;
        axpy(-dot(z, planted_u_), planted_u_, z);
        axpy(-dot(z, chan_true_), chan_true_, z);
        axpy(-dot(z, chan_wrong_), chan_wrong_, z);
        axpy(-dot(z, chan_required_), chan_required_, z);
        const double residue_norm = norm2(z);
        if (residue_norm > 1e-12) {
            const double rescale = backbone_detail::residue_radius / residue_norm;
            for (double& x : z) x *= rescale;
        }

        const auto chain = backbone_detail::parse_chain(prompt);
        const int level_proxy = std::min(5, std::max(1, chain.n_ops));
        axpy(chain.full / backbone_detail::value_scale, chan_true_, z);
        axpy(chain.partial / backbone_detail::value_scale, chan_wrong_, z);
        axpy(backbone_detail::gate_per_level * level_proxy, chan_required_, z);

        if (mode != Mode::none) {
            const double sign = (mode == Mode::think) ? 0.5 : -0.5;
            const double s = cfg_.planted_direction_scale;
            axpy(sign * s, planted_u_, z);
            // Problem-keyed noise in the inert subspace: zero-mean across
            // problems, orthogonal to every functional channel, so contrastive
            // averaging converges to the planted direction at the N^{-1/2} rate.
            RngStream noise(cfg_.seed ^ detail::fnv1a(prompt_key(prompt)), "contrast-noise");
            const double sigma = 2.0 * s / std::sqrt(static_cast<double>(cfg_.dim));
            for (std::size_t c = 4; c < basis_.size(); ++c) {
                axpy(sign * sigma * noise.gaussian(), basis_[c], z);
            }
        }
        return z;
    }

    static std::string prompt_key(const TokenSeq& prompt) {
        std::string key;
        for (Token t : prompt) {
            if (t == tok::mark_think || t == tok::mark_direct) continue; // mode-invariant
            key += std::to_string(t);
            key += ',';
        }
        return key;
    }

    std::uint64_t compute_checksum() const {
        std::uint64_t h = checksum_doubles(embeddings_);
        for (const auto& w : layer_w_) h = checksum_doubles(w, h);
        for (const auto& c : basis_) h = checksum_doubles(c, h);
        h = checksum_doubles(readout_, h);
        return h;
    }

    BackboneConfig cfg_;
    Vec embeddings_;           // vocab_size x d
    std::vector<Vec> layer_w_; // L of d x d
    std::vector<Vec> basis_;   // d orthonormal columns
    Vec planted_u_, chan_true_, chan_wrong_, chan_required_;
    Vec readout_; // alphabet x d
    std::uint64_t checksum_ = 0;
};

} // namespace ponderlab
