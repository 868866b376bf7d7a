#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "ponderlab/backbone.hpp" // CostModel::controller_hidden
#include "ponderlab/numerics.hpp"

namespace ponderlab {

enum class Activation { gelu, relu };

constexpr int controller_hidden = CostModel::controller_hidden;
constexpr std::int64_t controller_param_budget = 1000000;

inline double activate(Activation act, double x) {
    if (act == Activation::relu) return x > 0.0 ? x : 0.0;
    return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244));
}

inline double activate_deriv(Activation act, double x) {
    if (act == Activation::relu) return x > 0.0 ? 1.0 : 0.0;
    const double cdf = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
    const double pdf = 0.3989422804014326779 * std::exp(-0.5 * x * x);
    return cdf + x * pdf;
}

// Parameter tensors; also the shape of a log-probability gradient.
struct ControllerTensors {
    Vec ln_gain, ln_bias; // d
    Vec w1, b1;           // hidden x d, hidden
    Vec w2, b2;           // hidden x hidden, hidden
    Vec head_w;           // hidden
    double head_b = 0.0;

    static ControllerTensors zeros(int d) {
        ControllerTensors t;
        const auto h = static_cast<std::size_t>(controller_hidden);
        t.ln_gain.assign(static_cast<std::size_t>(d), 0.0);
        t.ln_bias.assign(static_cast<std::size_t>(d), 0.0);
        t.w1.assign(h * static_cast<std::size_t>(d), 0.0);
        t.b1.assign(h, 0.0);
        t.w2.assign(h * h, 0.0);
        t.b2.assign(h, 0.0);
        t.head_w.assign(h, 0.0);
        t.head_b = 0.0;
        return t;
    }

    std::vector<const Vec*> arrays() const { return {&ln_gain, &ln_bias, &w1, &b1, &w2, &b2, &head_w}; }
    std::vector<Vec*> arrays() { return {&ln_gain, &ln_bias, &w1, &b1, &w2, &b2, &head_w}; }

    std::int64_t count() const {
        std::int64_t n = 1; // head_b
        for (const Vec* v : arrays()) n += static_cast<std::int64_t>(v->size());
        return n;
    }

    void add_scaled(const ControllerTensors& other, double alpha) {
        auto mine = arrays();
        auto theirs = other.arrays();
        for (std::size_t k = 0; k < mine.size(); ++k) {
            require_same_dim(*mine[k], *theirs[k], "ControllerTensors::add_scaled");
            for (std::size_t i = 0; i < mine[k]->size(); ++i) {
                (*mine[k])[i] += alpha * (*theirs[k])[i];
            }
        }
        head_b += alpha * other.head_b;
    }

    void scale(double alpha) {
        for (Vec* v : arrays()) {
            for (double& x : *v) x *= alpha;
        }
        head_b *= alpha;
    }

    double sq_norm() const {
        double s = head_b * head_b;
        for (const Vec* v : arrays()) {
            for (double x : *v) s += x * x;
        }
        return s;
    }

    bool finite() const {
        if (!std::isfinite(head_b)) return false;
        for (const Vec* v : arrays()) {
            if (!all_finite(*v)) return false;
        }
        return true;
    }

    std::uint64_t checksum() const {
        std::uint64_t h = 0xCBF29CE484222325ULL;
        for (const Vec* v : arrays()) h = checksum_doubles(*v, h);
        h = checksum_doubles(Vec{head_b}, h);
        return h;
    }
};

using LogProbGradient = ControllerTensors;

struct ControllerParams {
    int d = 64;
    double temp = 1.0;
    Activation act = Activation::gelu;
    ControllerTensors t;

    std::int64_t param_count() const { return t.count(); }

    void check_budget() const {
        if (temp <= 0.0) throw ConfigError("controller: temperature must be > 0");
        if (param_count() > controller_param_budget) {
            throw ConfigError("controller: parameter count " + std::to_string(param_count()) +
                              " exceeds budget " + std::to_string(controller_param_budget));
        }
        if (!t.finite()) throw ConfigError("controller: non-finite parameters");
    }
};

inline std::int64_t controller_param_count_for(int d) {
    const std::int64_t h = controller_hidden;
    return 2LL * d + (h * d + h) + (h * h + h) + (h + 1);
}

// Scaled-uniform init (+-sqrt(6/(fan_in+fan_out))); LayerNorm starts as identity.
inline ControllerParams controller_init(int d, std::uint64_t seed, double temp) {
    if (d < 1) throw ConfigError("controller_init: d must be >= 1");
    if (controller_param_count_for(d) > controller_param_budget) {
        throw ConfigError("controller_init: d=" + std::to_string(d) + " yields " +
                          std::to_string(controller_param_count_for(d)) +
                          " parameters, over the 1e6 budget");
    }
    ControllerParams p;
    p.d = d;
    p.temp = temp;
    p.t = ControllerTensors::zeros(d);
    std::fill(p.t.ln_gain.begin(), p.t.ln_gain.end(), 1.0);
    RngStream rng(seed, "controller-init");
    auto fill_uniform = [&rng](Vec& v, int fan_in, int fan_out) {
        const double lim = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        for (double& x : v) x = (2.0 * rng.uniform() - 1.0) * lim;
    };
    fill_uniform(p.t.w1, d, controller_hidden);
    fill_uniform(p.t.w2, controller_hidden, controller_hidden);
    fill_uniform(p.t.head_w, controller_hidden, 1);
    p.check_budget();
    return p;
}

namespace controller_detail {

struct ForwardCache {
    Vec zhat; // normalized input before affine
    Vec g0;   // after gain/bias
    Vec pre1, g1, pre2, g2;
    double logit_raw = 0.0; // before temperature
    double p = 0.5;
};

inline void forward_cached(const ControllerParams& cp, const Vec& z, ForwardCache& c) {
    if (static_cast<int>(z.size()) != cp.d) {
        throw DimensionError("controller forward: state dimension mismatch");
    }
    const auto d = static_cast<std::size_t>(cp.d);
    const auto h = static_cast<std::size_t>(controller_hidden);

    double mean = 0.0;
    for (double x : z) mean += x;
    mean /= static_cast<double>(d);
    double var = 0.0;
    for (double x : z) var += (x - mean) * (x - mean);
    var /= static_cast<double>(d);
    const double inv = 1.0 / std::sqrt(var + 1e-5);
    c.zhat.resize(d);
    c.g0.resize(d);
    for (std::size_t i = 0; i < d; ++i) {
        c.zhat[i] = (z[i] - mean) * inv;
        c.g0[i] = cp.t.ln_gain[i] * c.zhat[i] + cp.t.ln_bias[i];
    }

    c.pre1.resize(h);
    c.g1.resize(h);
    for (std::size_t i = 0; i < h; ++i) {
        const double acc = cp.t.b1[i] + detail::dot_n(cp.t.w1.data() + i * d, c.g0.data(), d);
        c.pre1[i] = acc;
        c.g1[i] = activate(cp.act, acc);
    }
    c.pre2.resize(h);
    c.g2.resize(h);
    for (std::size_t i = 0; i < h; ++i) {
        const double acc = cp.t.b2[i] + detail::dot_n(cp.t.w2.data() + i * h, c.g1.data(), h);
        c.pre2[i] = acc;
        c.g2[i] = activate(cp.act, acc);
    }
    const double logit = cp.t.head_b + detail::dot_n(cp.t.head_w.data(), c.g2.data(), h);
    c.logit_raw = logit;
    double p = sigmoid_temp(logit, cp.temp);
    c.p = std::min(1.0 - 1e-12, std::max(1e-12, p));
}

// Accumulates dL/dparams into grad given dL/d(logit_raw), reusing the cache.
inline void backprop_accumulate(const ControllerParams& cp, const ForwardCache& c,
                                double d_logit_raw, ControllerTensors& grad) {
    const auto d = static_cast<std::size_t>(cp.d);
    const auto h = static_cast<std::size_t>(controller_hidden);

    grad.head_b += d_logit_raw;
    thread_local Vec delta2;
    delta2.assign(h, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        grad.head_w[i] += d_logit_raw * c.g2[i];
        delta2[i] = d_logit_raw * cp.t.head_w[i] * activate_deriv(cp.act, c.pre2[i]);
    }
    thread_local Vec delta1;
    delta1.assign(h, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        const double di = delta2[i];
        if (di == 0.0) continue;
        detail::axpy_n(di, c.g1.data(), grad.w2.data() + i * h, h);
        detail::axpy_n(di, cp.t.w2.data() + i * h, delta1.data(), h);
        grad.b2[i] += di;
    }
    thread_local Vec delta0;
    delta0.assign(d, 0.0);
    for (std::size_t i = 0; i < h; ++i) {
        const double di = delta1[i] * activate_deriv(cp.act, c.pre1[i]);
        if (di == 0.0) continue;
        detail::axpy_n(di, c.g0.data(), grad.w1.data() + i * d, d);
        detail::axpy_n(di, cp.t.w1.data() + i * d, delta0.data(), d);
        grad.b1[i] += di;
    }
    for (std::size_t j = 0; j < d; ++j) {
        grad.ln_gain[j] += delta0[j] * c.zhat[j];
        grad.ln_bias[j] += delta0[j];
    }
}

} // namespace controller_detail

// Continue-probability in (0, 1), clamped away from the exact endpoints.
inline double controller_forward(const ControllerParams& cp, const Vec& z) {
    thread_local controller_detail::ForwardCache c;
    controller_detail::forward_cached(cp, z, c);
    return c.p;
}

struct LogProbResult {
    double logprob = 0.0;
    double p = 0.0;
    bool clamped = false;
    LogProbGradient grad;
};

// logprob = a ln p + (1-a) ln(1-p) and its exact gradient through the sigmoid,
// both hidden layers, and the LayerNorm affine parameters.
inline LogProbResult logprob_and_grad(const ControllerParams& cp, const Vec& z, int action) {
    if (action != 0 && action != 1) throw DomainError("logprob_and_grad: action must be 0 or 1");
    thread_local controller_detail::ForwardCache c;
    controller_detail::forward_cached(cp, z, c);
    LogProbResult r;
    r.p = c.p;
    r.clamped = (c.p <= 1e-12 || c.p >= 1.0 - 1e-12);
    r.logprob = (action == 1) ? std::log(c.p) : std::log(1.0 - c.p);
    r.grad = ControllerTensors::zeros(cp.d);
    const double d_logit = (static_cast<double>(action) - c.p) / cp.temp;
    controller_detail::backprop_accumulate(cp, c, d_logit, r.grad);
    return r;
}

inline double bernoulli_entropy(double p) {
    p = std::min(1.0 - 1e-12, std::max(1e-12, p));
    return -p * std::log(p) - (1.0 - p) * std::log(1.0 - p);
}

inline double controller_entropy(const ControllerParams& cp, const Vec& z) {
    return bernoulli_entropy(controller_forward(cp, z));
}

// dH/d(logit_raw) = p(1-p) ln((1-p)/p) / temp, for the entropy bonus gradient.
inline void entropy_grad_accumulate(const ControllerParams& cp, const Vec& z, double coeff,
                                    ControllerTensors& grad) {
    thread_local controller_detail::ForwardCache c;
    controller_detail::forward_cached(cp, z, c);
    const double p = c.p;
    const double d_logit = p * (1.0 - p) * std::log((1.0 - p) / p) / cp.temp;
    controller_detail::backprop_accumulate(cp, c, coeff * d_logit, grad);
}

} // namespace ponderlab
