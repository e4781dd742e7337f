#pragma once

// Embedding-protection transforms attacked by the mapping networks:
// PolyProtect (user-specific multivariate polynomials over sliding
// windows), MLP-Hash (seeded random orthonormal MLP with sign
// binarization), SlerpFace (spherical interpolation toward user noise),
// plus the prefix partial-leakage transform.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "fem/numkit.hpp"

namespace fem {

struct PolyProtectParams {
    std::size_t m = 5;      // window length
    std::size_t stride = 1;
    std::vector<int> coeffs;          // m nonzero integers in [-50, 50]
    std::vector<std::size_t> exps;    // permutation of {1..m}
    std::size_t pad_to = 0;           // 0 means pad back to the input dim

    // User-specific draw: coefficients uniform over [-50,50] minus zero,
    // exponents a Fisher-Yates permutation of {1..m}.
    static PolyProtectParams generate(std::uint64_t seed, std::uint64_t user_id,
                                      std::size_t m = 5) {
        SeededRng rng(seed, SeededRng::mix(user_id ^ 0x706f6c79)); // "poly"
        PolyProtectParams p;
        p.m = m;
        p.coeffs.resize(m);
        for (auto& c : p.coeffs) {
            int v = 0;
            while (v == 0)
                v = static_cast<int>(rng.next_below(101)) - 50;
            c = v;
        }
        p.exps.resize(m);
        for (std::size_t i = 0; i < m; ++i) p.exps[i] = i + 1;
        for (std::size_t i = m; i > 1; --i) {
            const std::size_t j = rng.next_below(i);
            std::swap(p.exps[i - 1], p.exps[j]);
        }
        return p;
    }
};

struct MlpHashParams {
    std::uint64_t seed = 0;
    std::size_t hidden = 512;
    std::size_t out_bits = 512;
};

struct SlerpFaceParams {
    double t = 0.5;               // interpolation position, in (0,1)
    std::uint64_t noise_seed = 0; // user-specific unit noise vector
};

// out_j = sum_{i=1..m} c_i * v_{j+i-1}^{e_i} over stride-1 windows,
// giving D-m+1 informative values (512 -> 508), then zero-padded.
inline Vec64 polyprotect(const Vec64& v, const PolyProtectParams& p) {
    if (v.size() < p.m)
        raise(ErrorClass::dimension, "polyprotect: input shorter than window");
    if (p.stride == 0) raise(ErrorClass::usage, "polyprotect: stride must be >= 1");
    const std::size_t n_out = (v.size() - p.m) / p.stride + 1;
    const std::size_t pad_to = p.pad_to == 0 ? v.size() : p.pad_to;
    if (pad_to < n_out)
        raise(ErrorClass::dimension, "polyprotect: pad_to below output length");
    Vec64 out(pad_to, 0.0);
    for (std::size_t w = 0; w < n_out; ++w) {
        const std::size_t j = w * p.stride;
        double acc = 0.0;
        for (std::size_t i = 0; i < p.m; ++i) {
            double pw = 1.0;
            for (std::size_t e = 0; e < p.exps[i]; ++e) pw *= v[j + i];
            acc += static_cast<double>(p.coeffs[i]) * pw;
        }
        out[w] = acc;
    }
    return out;
}

namespace detail {

// Modified Gram-Schmidt row orthonormalization; nullopt on rank deficiency.
inline std::optional<Mat64> orthonormalize_rows(Mat64 w) {
    for (std::size_t r = 0; r < w.rows; ++r) {
        double* wr = w.row(r);
        for (std::size_t p = 0; p < r; ++p) {
            const double* wp = w.row(p);
            const double proj = dot({wr, w.cols}, {wp, w.cols});
            for (std::size_t c = 0; c < w.cols; ++c) wr[c] -= proj * wp[c];
        }
        const double n = norm({wr, w.cols});
        if (n < 1e-10) return std::nullopt;
        for (std::size_t c = 0; c < w.cols; ++c) wr[c] /= n;
    }
    return w;
}

inline Mat64 gauss_mat(SeededRng& rng, std::size_t rows, std::size_t cols) {
    Mat64 m(rows, cols);
    for (double& v : m.values) v = rng.next_gauss();
    return m;
}

} // namespace detail

// Seeded orthonormal weights for both MLP-Hash layers. Rank deficiency
// retries on the next seed stream, erroring after 3 attempts.
struct MlpHashWeights {
    Mat64 w1; // hidden x D
    Mat64 w2; // out_bits x hidden

    static MlpHashWeights make(const MlpHashParams& p, std::size_t in_dim) {
        if (in_dim == 0) raise(ErrorClass::dimension, "mlp_hash: empty input");
        if (p.hidden == 0) raise(ErrorClass::dimension, "mlp_hash: hidden must be > 0");
        for (std::uint64_t attempt = 0; attempt < 3; ++attempt) {
            SeededRng rng(p.seed, attempt);
            auto w1 = detail::orthonormalize_rows(
                detail::gauss_mat(rng, p.hidden, in_dim));
            auto w2 = detail::orthonormalize_rows(
                detail::gauss_mat(rng, p.out_bits, p.hidden));
            if (w1 && w2) return {std::move(*w1), std::move(*w2)};
        }
        raise(ErrorClass::degenerate,
              "mlp_hash: rank-deficient weights after 3 seed attempts");
    }
};

inline std::vector<std::uint8_t> mlp_hash_with_weights(const Vec64& v,
                                                       const MlpHashWeights& w) {
    if (v.size() != w.w1.cols)
        raise(ErrorClass::dimension, "mlp_hash: input width mismatch");
    Vec64 h(w.w1.rows);
    for (std::size_t r = 0; r < w.w1.rows; ++r) {
        const double z = dot({w.w1.row(r), w.w1.cols}, v);
        h[r] = z > 0.0 ? z : 0.0; // relu
    }
    std::vector<std::uint8_t> bits(w.w2.rows);
    for (std::size_t r = 0; r < w.w2.rows; ++r)
        bits[r] = dot({w.w2.row(r), w.w2.cols}, h) > 0.0 ? 1 : 0;
    return bits;
}

inline std::vector<std::uint8_t> mlp_hash(const Vec64& v, const MlpHashParams& p) {
    return mlp_hash_with_weights(v, MlpHashWeights::make(p, v.size()));
}

// User-specific unit noise vector for SlerpFace.
inline Vec64 slerp_noise(const SlerpFaceParams& p, std::size_t dim) {
    SeededRng rng(p.noise_seed, 0x736c7270); // "slrp"
    Vec64 n = gauss(rng, dim);
    normalize_in_place(n);
    return n;
}

// slerp(e, n; t) = [sin((1-t)theta)*e + sin(t*theta)*n] / sin(theta).
inline Vec64 slerp_protect(const Vec64& e, const Vec64& noise, double t) {
    if (e.size() != noise.size())
        raise(ErrorClass::dimension, "slerp: length mismatch");
    if (!(t > 0.0 && t < 1.0))
        raise(ErrorClass::usage, "slerp: t must be in (0, 1)");
    if (std::abs(norm(e) - 1.0) > 1e-9)
        raise(ErrorClass::degenerate, "slerp: input must be unit-norm");
    if (std::abs(norm(noise) - 1.0) > 1e-9)
        raise(ErrorClass::degenerate, "slerp: noise must be unit-norm");
    double c = dot(e, noise);
    if (std::abs(c) >= 1.0 - 1e-9)
        raise(ErrorClass::degenerate, "slerp: inputs are (anti)parallel");
    const double theta = std::acos(c);
    const double s = std::sin(theta);
    const double a = std::sin((1.0 - t) * theta) / s;
    const double b = std::sin(t * theta) / s;
    Vec64 out(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) out[i] = a * e[i] + b * noise[i];
    return out;
}

inline Vec64 slerp_protect(const Vec64& e, const SlerpFaceParams& p) {
    return slerp_protect(e, slerp_noise(p, e.size()), p.t);
}

// Keep the first floor(rho*D) components, zero the rest.
inline Vec64 partial_leak(const Vec64& e, double rho) {
    if (!(rho > 0.0 && rho <= 1.0))
        raise(ErrorClass::usage, "partial_leak: rho must be in (0, 1]");
    const std::size_t keep = static_cast<std::size_t>(
        std::floor(rho * static_cast<double>(e.size())));
    Vec64 out = e;
    for (std::size_t i = keep; i < out.size(); ++i) out[i] = 0.0;
    return out;
}

} // namespace fem
