#pragma once

// Deterministic numeric primitives: dense vectors/matrices, a seeded
// splittable PRNG, and the handful of reductions everything else builds on.
// All reductions run in fixed left-to-right order so that any computation
// repeated with the same inputs is bit-identical.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace fem {

enum class ErrorClass {
    usage = 2,      // bad flags / unknown subcommand
    io = 3,         // missing or unwritable file
    format = 4,     // bad magic, version, malformed literal
    dimension = 5,  // shape mismatch
    degenerate = 6, // zero-norm vector, parallel slerp inputs, batch of 1
    numeric = 7,    // non-finite values, training divergence
};

class Error : public std::runtime_error {
public:
    Error(ErrorClass cls, const std::string& msg)
        : std::runtime_error(msg), cls_(cls) {}
    ErrorClass cls() const noexcept { return cls_; }
    int exit_code() const noexcept { return static_cast<int>(cls_); }
    const char* class_name() const noexcept {
        switch (cls_) {
        case ErrorClass::usage: return "usage";
        case ErrorClass::io: return "io";
        case ErrorClass::format: return "format";
        case ErrorClass::dimension: return "dimension";
        case ErrorClass::degenerate: return "degenerate";
        case ErrorClass::numeric: return "numeric";
        }
        return "unknown";
    }

private:
    ErrorClass cls_;
};

[[noreturn]] inline void raise(ErrorClass cls, const std::string& msg) {
    throw Error(cls, msg);
}

using Vec64 = std::vector<double>;

// Row-major dense matrix of doubles.
struct Mat64 {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> values;

    Mat64() = default;
    Mat64(std::size_t r, std::size_t c) : rows(r), cols(c), values(r * c, 0.0) {}

    double* row(std::size_t r) { return values.data() + r * cols; }
    const double* row(std::size_t r) const { return values.data() + r * cols; }
    std::span<double> row_span(std::size_t r) { return {row(r), cols}; }
    std::span<const double> row_span(std::size_t r) const { return {row(r), cols}; }
    double& at(std::size_t r, std::size_t c) { return values[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

    Vec64 row_vec(std::size_t r) const {
        return Vec64(row(r), row(r) + cols);
    }
    void set_row(std::size_t r, std::span<const double> v) {
        for (std::size_t c = 0; c < cols; ++c) values[r * cols + c] = v[c];
    }
    // in place: never invalidates spans over the storage
    void fill(double v) { std::fill(values.begin(), values.end(), v); }
};

// Counter-style splittable PRNG built on SplitMix64 (Steele et al. 2014).
// The draw sequence is a pure function of (seed, stream_id): the initial
// state is splitmix_mix(seed) xor splitmix_mix(stream_id + golden), and
// next_u64 advances with the standard SplitMix64 step. Integer-exact on
// every platform; gauss draws go through Box-Muller on these uniforms.
class SeededRng {
public:
    explicit SeededRng(std::uint64_t seed, std::uint64_t stream_id = 0)
        : seed_(seed), stream_(stream_id) {
        state_ = mix(seed) ^ mix(stream_id + golden);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }

    std::uint64_t next_u64() {
        state_ += golden;
        return mix(state_);
    }

    // Uniform in [0, 1), 53 random bits.
    double next_unit() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform in (0, 1]; used where log() must not see zero.
    double next_unit_open() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; the paired draw is cached.
    double next_gauss() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = next_unit_open();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Uniform integer in [0, n). Modulo reduction; the bias at n far below
    // 2^64 is immaterial for this artifact and keeps the draw count fixed.
    std::uint64_t next_below(std::uint64_t n) {
        return next_u64() % n;
    }

    // Uniform in [lo, hi).
    double next_range(double lo, double hi) {
        return lo + (hi - lo) * next_unit();
    }

    // Independent child stream; mixing the tag keeps substreams disjoint.
    SeededRng substream(std::uint64_t tag) const {
        return SeededRng(seed_, mix(stream_ ^ mix(tag + golden)));
    }

    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

private:
    static constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
    std::uint64_t state_ = 0;
    std::uint64_t seed_ = 0;
    std::uint64_t stream_ = 0;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

inline bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

// Strict left-to-right dot product (the documented reduction order).
inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size())
        raise(ErrorClass::dimension,
              "dot: length mismatch (" + std::to_string(a.size()) + " vs " +
                  std::to_string(b.size()) + ")");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

inline double norm(std::span<const double> a) {
    return std::sqrt(dot(a, a));
}

inline double cosine(std::span<const double> a, std::span<const double> b) {
    const double na = norm(a);
    const double nb = norm(b);
    if (na == 0.0 || nb == 0.0)
        raise(ErrorClass::degenerate, "cosine: zero-norm input");
    return dot(a, b) / (na * nb);
}

inline void normalize_in_place(std::span<double> a) {
    const double n = norm(a);
    if (n == 0.0) raise(ErrorClass::degenerate, "normalize: zero-norm input");
    for (double& x : a) x /= n;
}

// n i.i.d. standard-normal draws.
inline Vec64 gauss(SeededRng& rng, std::size_t n) {
    if (n == 0) raise(ErrorClass::dimension, "gauss: n must be positive");
    Vec64 out(n);
    for (double& x : out) x = rng.next_gauss();
    return out;
}

// Internal blocked dot: four independent accumulators folded at the end.
// Faster than the strict-order dot and still a fixed, documented order.
inline double dot4(const double* a, const double* b, std::size_t n) {
    double acc0 = 0.0, acc1 = 0.0, acc2 = 0.0, acc3 = 0.0;
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 += a[i] * b[i];
        acc1 += a[i + 1] * b[i + 1];
        acc2 += a[i + 2] * b[i + 2];
        acc3 += a[i + 3] * b[i + 3];
    }
    for (; i < n; ++i) acc0 += a[i] * b[i];
    return ((acc0 + acc1) + (acc2 + acc3));
}

// C[m x n] = A[m x k] * B^T where B is [n x k]; rows of both operands are
// contiguous. Each output entry is a dot4 over k.
inline void matmul_nt(const Mat64& a, const Mat64& b, Mat64& c) {
    if (a.cols != b.cols)
        raise(ErrorClass::dimension, "matmul_nt: inner dimension mismatch");
    c.rows = a.rows;
    c.cols = b.rows;
    c.values.assign(c.rows * c.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t j = 0; j < b.rows; ++j)
            ci[j] = dot4(ai, b.row(j), a.cols);
    }
}

// C[m x n] = A[m x k] * B[k x n]; ikj order, deterministic per row.
inline void matmul_nn(const Mat64& a, const Mat64& b, Mat64& c) {
    if (a.cols != b.rows)
        raise(ErrorClass::dimension, "matmul_nn: inner dimension mismatch");
    c.rows = a.rows;
    c.cols = b.cols;
    c.values.assign(c.rows * c.cols, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t k = 0; k < a.cols; ++k) {
            const double av = ai[k];
            const double* bk = b.row(k);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += av * bk[j];
        }
    }
}

// C[m x n] += A^T[m x k] * B[k x n] where A is [k x m]: the gradient
// contraction up^T * X with both operands row-major.
inline void matmul_tn_accum(const Mat64& a, const Mat64& b, Mat64& c) {
    if (a.rows != b.rows)
        raise(ErrorClass::dimension, "matmul_tn_accum: batch dimension mismatch");
    if (c.rows != a.cols || c.cols != b.cols)
        raise(ErrorClass::dimension, "matmul_tn_accum: output shape mismatch");
    for (std::size_t k = 0; k < a.rows; ++k) {
        const double* ak = a.row(k);
        const double* bk = b.row(k);
        for (std::size_t i = 0; i < a.cols; ++i) {
            const double av = ak[i];
            double* ci = c.row(i);
            for (std::size_t j = 0; j < b.cols; ++j) ci[j] += av * bk[j];
        }
    }
}

} // namespace fem
