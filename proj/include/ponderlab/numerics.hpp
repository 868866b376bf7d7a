#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <string>
#include <string_view>
#include <vector>

#include "ponderlab/errors.hpp"

namespace ponderlab {

using Vec = std::vector<double>;

inline bool all_finite(const Vec& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

inline void require_same_dim(const Vec& a, const Vec& b, const char* what) {
    if (a.size() != b.size()) {
        throw DimensionError(std::string(what) + ": dimension mismatch (" +
                             std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
    }
}

namespace detail {

// Four independent accumulators; the split dependency chains roughly double
// throughput on narrow cores and cost nothing elsewhere.
inline double dot_n(const double* __restrict a, const double* __restrict b, std::size_t n) {
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    double a0 = 0.0, a1 = 0.0, a2 = 0.0, a3 = 0.0;
    for (std::size_t j = 0; j < n4; j += 4) {
        a0 += a[j] * b[j];
        a1 += a[j + 1] * b[j + 1];
        a2 += a[j + 2] * b[j + 2];
        a3 += a[j + 3] * b[j + 3];
    }
    for (std::size_t j = n4; j < n; ++j) a0 += a[j] * b[j];
    return (a0 + a1) + (a2 + a3);
}

inline void axpy_n(double alpha, const double* __restrict x, double* __restrict y, std::size_t n) {
    const std::size_t n4 = n & ~static_cast<std::size_t>(3);
    for (std::size_t j = 0; j < n4; j += 4) {
        y[j] += alpha * x[j];
        y[j + 1] += alpha * x[j + 1];
        y[j + 2] += alpha * x[j + 2];
        y[j + 3] += alpha * x[j + 3];
    }
    for (std::size_t j = n4; j < n; ++j) y[j] += alpha * x[j];
}

} // namespace detail

inline double dot(const Vec& a, const Vec& b) {
    require_same_dim(a, b, "dot");
    return detail::dot_n(a.data(), b.data(), a.size());
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline void axpy(double alpha, const Vec& x, Vec& y) {
    require_same_dim(x, y, "axpy");
    detail::axpy_n(alpha, x.data(), y.data(), x.size());
}

inline Vec scaled(const Vec& x, double alpha) {
    Vec out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = alpha * x[i];
    return out;
}

// y = W x + b with W stored row-major as rows x cols.
inline void matvec(const Vec& w, std::size_t rows, std::size_t cols,
                   const Vec& x, const Vec& b, Vec& y) {
    if (x.size() != cols || w.size() != rows * cols || b.size() != rows) {
        throw DimensionError("matvec: shape mismatch");
    }
    y.resize(rows);
    for (std::size_t i = 0; i < rows; ++i) {
        y[i] = b[i] + detail::dot_n(w.data() + i * cols, x.data(), cols);
    }
}

// Population-variance layer norm: (x - mean) / sqrt(var + eps), then affine gain/bias.
inline Vec layer_norm(const Vec& v, const Vec& gain, const Vec& bias, double eps = 1e-5) {
    require_same_dim(v, gain, "layer_norm gain");
    require_same_dim(v, bias, "layer_norm bias");
    if (eps <= 0.0) throw DomainError("layer_norm: eps must be > 0");
    if (v.empty()) throw DimensionError("layer_norm: empty vector");
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double var = 0.0;
    for (double x : v) var += (x - mean) * (x - mean);
    var /= static_cast<double>(v.size());
    const double inv = 1.0 / std::sqrt(var + eps);
    Vec out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = gain[i] * ((v[i] - mean) * inv) + bias[i];
    }
    return out;
}

// sigmoid(x / temp); low temperature sharpens the decision.
inline double sigmoid_temp(double x, double temp) {
    if (temp <= 0.0) throw DomainError("sigmoid_temp: temp must be > 0");
    const double s = x / temp;
    if (s >= 0.0) {
        return 1.0 / (1.0 + std::exp(-s));
    }
    const double e = std::exp(s);
    return e / (1.0 + e);
}

// KL(p || q), natural log; p_i = 0 terms contribute 0; q must cover p's support.
inline double kl_divergence(const Vec& p, const Vec& q) {
    require_same_dim(p, q, "kl_divergence");
    double sp = 0.0, sq = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < 0.0 || q[i] < 0.0) throw DomainError("kl_divergence: negative entry");
        sp += p[i];
        sq += q[i];
    }
    if (std::abs(sp - 1.0) > 1e-9 || std::abs(sq - 1.0) > 1e-9) {
        throw DomainError("kl_divergence: inputs must sum to 1 within 1e-9");
    }
    double kl = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] > 0.0) {
            if (q[i] <= 0.0) throw DomainError("kl_divergence: q has zero mass where p > 0");
            kl += p[i] * std::log(p[i] / q[i]);
        }
    }
    return kl < 0.0 ? 0.0 : kl;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ULL;
    }
    return h;
}

} // namespace detail

// Counter-based deterministic RNG. A draw is a pure function of
// (seed, label, index), so identical (seed, label) streams replay identically
// on any platform, and distinct labels never share state.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::string label)
        : seed_(seed), label_(std::move(label)),
          key_(detail::splitmix64(seed ^ detail::fnv1a(label_))), index_(0) {}

    std::uint64_t seed() const { return seed_; }
    const std::string& label() const { return label_; }
    std::uint64_t cursor() const { return index_; }
    void seek(std::uint64_t index) { index_ = index; }

    // Child stream keyed off this stream's identity; does not consume draws.
    RngStream derive(std::string_view tag, std::uint64_t n) const {
        RngStream child(seed_, label_ + "/" + std::string(tag) + "#" + std::to_string(n));
        return child;
    }

    std::uint64_t next_u64() { return detail::splitmix64(key_ ^ (0x9E3779B97F4A7C15ULL * ++index_)); }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Uniform in (0, 1]; safe to feed into log().
    double uniform_open() { return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53; }

    // Box-Muller; consumes exactly two draws (no cached spare, keeps replay simple).
    double gaussian() {
        const double u1 = uniform_open();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586477 * u2);
    }

    // Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw DomainError("uniform_int: empty range");
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    bool bernoulli(double p) { return uniform() < p; }

  private:
    std::uint64_t seed_;
    std::string label_;
    std::uint64_t key_;
    std::uint64_t index_;
};

// FNV-1a over the raw bit patterns of a double sequence; stable weight checksum.
inline std::uint64_t checksum_doubles(const Vec& v, std::uint64_t h = 0xCBF29CE484222325ULL) {
    for (double x : v) {
        std::uint64_t bits;
        std::memcpy(&bits, &x, sizeof(bits));
        for (int b = 0; b < 8; ++b) {
            h ^= (bits >> (8 * b)) & 0xFF;
            h *= 0x100000001B3ULL;
        }
    }
    return h;
}

} // namespace ponderlab
