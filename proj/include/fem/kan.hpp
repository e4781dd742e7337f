#pragma once

// Kolmogorov-Arnold network layers: every edge carries a learnable
// univariate function, parameterized as a B-spline over a fixed uniform
// grid plus a silu base path. Three stacked layers form the FEM-KAN
// mapping network.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fem/numkit.hpp"
#include "fem/params.hpp"

namespace fem {

// Uniform knot grid for order-k B-splines over [lo, hi], extended k knots
// past each end so inputs that spill outside the base range still see a
// full basis instead of being clamped.
struct SplineGrid {
    std::size_t grid_size = 5; // G: intervals in [lo, hi]
    std::size_t order = 3;     // k: spline order (degree)
    double lo = -1.0;
    double hi = 1.0;
    Vec64 knots; // G + 2k + 1 strictly increasing values

    static SplineGrid make(std::size_t grid_size, std::size_t order,
                           double lo = -1.0, double hi = 1.0) {
        if (grid_size < 1) raise(ErrorClass::dimension, "SplineGrid: grid_size must be >= 1");
        if (!(lo < hi)) raise(ErrorClass::dimension, "SplineGrid: lo must be < hi");
        SplineGrid g;
        g.grid_size = grid_size;
        g.order = order;
        g.lo = lo;
        g.hi = hi;
        const double h = (hi - lo) / static_cast<double>(grid_size);
        g.knots.resize(grid_size + 2 * order + 1);
        for (std::size_t i = 0; i < g.knots.size(); ++i)
            g.knots[i] = lo + (static_cast<double>(i) - static_cast<double>(order)) * h;
        return g;
    }

    std::size_t basis_count() const noexcept { return grid_size + order; }
    std::size_t order0_count() const noexcept { return grid_size + 2 * order; }
};

namespace detail {

// Cox-de Boor recursion from the order-0 indicators up to `upto`.
// `work` holds order0_count() entries; after the call the first
// (order0_count() - upto) entries are the order-`upto` basis values.
inline void cox_de_boor(const SplineGrid& grid, double x, double* work,
                        std::size_t upto) {
    const Vec64& t = grid.knots;
    const std::size_t n0 = grid.order0_count();
    for (std::size_t j = 0; j < n0; ++j)
        work[j] = (x >= t[j] && x < t[j + 1]) ? 1.0 : 0.0;
    for (std::size_t q = 1; q <= upto; ++q) {
        const std::size_t nq = n0 - q;
        for (std::size_t j = 0; j < nq; ++j) {
            const double dl = t[j + q] - t[j];
            const double dr = t[j + q + 1] - t[j + 1];
            const double left = dl > 0.0 ? (x - t[j]) / dl * work[j] : 0.0;
            const double right = dr > 0.0 ? (t[j + q + 1] - x) / dr * work[j + 1] : 0.0;
            work[j] = left + right;
        }
    }
}

} // namespace detail

// All order-k basis values at x; out must hold basis_count() entries.
inline void bspline_basis(const SplineGrid& grid, double x, std::span<double> out) {
    std::vector<double> work(grid.order0_count());
    detail::cox_de_boor(grid, x, work.data(), grid.order);
    for (std::size_t j = 0; j < grid.basis_count(); ++j) out[j] = work[j];
}

inline Vec64 bspline_basis(const SplineGrid& grid, double x) {
    Vec64 out(grid.basis_count());
    bspline_basis(grid, x, out);
    return out;
}

// Basis values and their x-derivatives in one pass, sharing the order k-1
// recursion. `work` must hold order0_count() entries.
inline void bspline_basis_and_deriv(const SplineGrid& grid, double x,
                                    double* work, double* val, double* deriv) {
    const Vec64& t = grid.knots;
    const std::size_t k = grid.order;
    const std::size_t nb = grid.basis_count();
    detail::cox_de_boor(grid, x, work, k > 0 ? k - 1 : 0);
    if (k == 0) {
        for (std::size_t j = 0; j < nb; ++j) {
            val[j] = work[j];
            deriv[j] = 0.0;
        }
        return;
    }
    const double dk = static_cast<double>(k);
    for (std::size_t j = 0; j < nb; ++j) {
        const double dl = t[j + k] - t[j];
        const double dr = t[j + k + 1] - t[j + 1];
        deriv[j] = dk * ((dl > 0.0 ? work[j] / dl : 0.0) -
                         (dr > 0.0 ? work[j + 1] / dr : 0.0));
    }
    // one more recursion level for the order-k values
    const std::size_t nq = grid.order0_count() - k;
    for (std::size_t j = 0; j < nq; ++j) {
        const double dl = t[j + k] - t[j];
        const double dr = t[j + k + 1] - t[j + 1];
        const double left = dl > 0.0 ? (x - t[j]) / dl * work[j] : 0.0;
        const double right = dr > 0.0 ? (t[j + k + 1] - x) / dr * work[j + 1] : 0.0;
        work[j] = left + right;
    }
    for (std::size_t j = 0; j < nb; ++j) val[j] = work[j];
}

inline double silu(double z) { return z / (1.0 + std::exp(-z)); }

inline double silu_deriv(double z) {
    const double s = 1.0 / (1.0 + std::exp(-z));
    return s * (1.0 + z * (1.0 - s));
}

// Per-batch workspace for one layer: basis values/derivatives per input,
// silu activations, and the scaler-folded spline coefficients.
struct KanCache {
    Mat64 x;           // B x in
    Mat64 basis;       // B x (in*nb)
    Mat64 basis_deriv; // B x (in*nb), filled when with_deriv
    Mat64 silu_x;      // B x in
    Mat64 scaled;      // out x (in*nb): coeffs * scalers, frozen at forward
    bool has_deriv = false;
};

struct KanLayer {
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    SplineGrid grid;
    Mat64 base_weights;   // out x in
    Mat64 spline_scalers; // out x in
    Mat64 spline_coeffs;  // (out*in) x nb, block-row (o*in + i)
    Mat64 g_base, g_scalers, g_coeffs;

    static KanLayer init(std::size_t in_dim, std::size_t out_dim,
                         std::size_t grid_size, std::size_t order,
                         SeededRng& rng, double lo = -1.0, double hi = 1.0) {
        if (in_dim == 0 || out_dim == 0)
            raise(ErrorClass::dimension, "KanLayer: dims must be positive");
        KanLayer l;
        l.in_dim = in_dim;
        l.out_dim = out_dim;
        l.grid = SplineGrid::make(grid_size, order, lo, hi);
        const std::size_t nb = l.grid.basis_count();
        const double inv_sqrt_in = 1.0 / std::sqrt(static_cast<double>(in_dim));
        l.base_weights = Mat64(out_dim, in_dim);
        for (double& w : l.base_weights.values)
            w = rng.next_range(-1.0, 1.0) * inv_sqrt_in;
        l.spline_coeffs = Mat64(out_dim * in_dim, nb);
        for (double& w : l.spline_coeffs.values)
            w = rng.next_gauss() * 0.1 * inv_sqrt_in;
        l.spline_scalers = Mat64(out_dim, in_dim);
        l.spline_scalers.fill(1.0);
        l.g_base = Mat64(out_dim, in_dim);
        l.g_scalers = Mat64(out_dim, in_dim);
        l.g_coeffs = Mat64(out_dim * in_dim, nb);
        return l;
    }

    // in place: optimizer spans over the gradients stay valid
    void zero_grads() {
        g_base.fill(0.0);
        g_scalers.fill(0.0);
        g_coeffs.fill(0.0);
    }

    // y[b][o] = sum_i base_w[o][i]*silu(x[b][i])
    //         + sum_i scaler[o][i] * sum_j coeff[o][i][j]*B_j(x[b][i])
    void forward(const Mat64& x, Mat64& y, KanCache& cache, bool with_deriv) const {
        if (x.cols != in_dim)
            raise(ErrorClass::dimension, "kan forward: input width " +
                                             std::to_string(x.cols) + " != " +
                                             std::to_string(in_dim));
        const std::size_t batch = x.rows;
        const std::size_t nb = grid.basis_count();
        cache.x = x;
        cache.has_deriv = with_deriv;
        cache.silu_x = Mat64(batch, in_dim);
        cache.basis = Mat64(batch, in_dim * nb);
        if (with_deriv) cache.basis_deriv = Mat64(batch, in_dim * nb);
        std::vector<double> work(grid.order0_count());
        for (std::size_t b = 0; b < batch; ++b) {
            const double* xb = x.row(b);
            double* sb = cache.silu_x.row(b);
            double* bb = cache.basis.row(b);
            double* db = with_deriv ? cache.basis_deriv.row(b) : nullptr;
            for (std::size_t i = 0; i < in_dim; ++i) {
                sb[i] = silu(xb[i]);
                if (with_deriv)
                    bspline_basis_and_deriv(grid, xb[i], work.data(),
                                            bb + i * nb, db + i * nb);
                else
                    bspline_basis(grid, xb[i], {bb + i * nb, nb});
            }
        }
        // fold scalers into the coefficients once per batch
        cache.scaled = Mat64(out_dim, in_dim * nb);
        for (std::size_t o = 0; o < out_dim; ++o) {
            double* dst = cache.scaled.row(o);
            const double* sc = spline_scalers.row(o);
            for (std::size_t i = 0; i < in_dim; ++i) {
                const double* src = spline_coeffs.row(o * in_dim + i);
                for (std::size_t j = 0; j < nb; ++j) dst[i * nb + j] = sc[i] * src[j];
            }
        }
        matmul_nt(cache.basis, cache.scaled, y);
        for (std::size_t b = 0; b < batch; ++b) {
            const double* sb = cache.silu_x.row(b);
            double* yb = y.row(b);
            for (std::size_t o = 0; o < out_dim; ++o)
                yb[o] += dot4(sb, base_weights.row(o), in_dim);
        }
    }

    // Accumulates parameter gradients and writes the input gradient.
    void backward(const KanCache& cache, const Mat64& upstream, Mat64& input_grad) {
        const std::size_t batch = cache.x.rows;
        const std::size_t nb = grid.basis_count();
        if (upstream.rows != batch || upstream.cols != out_dim)
            raise(ErrorClass::dimension, "kan backward: upstream shape mismatch");
        if (!cache.has_deriv)
            raise(ErrorClass::dimension, "kan backward: cache lacks basis derivatives");

        matmul_tn_accum(upstream, cache.silu_x, g_base);

        // M[o][i*nb+j] = sum_b up[b][o] * B_j(x[b][i])
        Mat64 m(out_dim, in_dim * nb);
        matmul_tn_accum(upstream, cache.basis, m);
        for (std::size_t o = 0; o < out_dim; ++o) {
            const double* mo = m.row(o);
            const double* sc = spline_scalers.row(o);
            double* gs = g_scalers.row(o);
            for (std::size_t i = 0; i < in_dim; ++i) {
                double* gc = g_coeffs.row(o * in_dim + i);
                const double* co = spline_coeffs.row(o * in_dim + i);
                double acc = 0.0;
                for (std::size_t j = 0; j < nb; ++j) {
                    gc[j] += mo[i * nb + j] * sc[i];
                    acc += mo[i * nb + j] * co[j];
                }
                gs[i] += acc;
            }
        }

        // input grad: spline term via d/dx B, base term via silu'
        Mat64 spread; // B x (in*nb)
        matmul_nn(upstream, cache.scaled, spread);
        Mat64 base_grad; // B x in
        matmul_nn(upstream, base_weights, base_grad);
        input_grad = Mat64(batch, in_dim);
        for (std::size_t b = 0; b < batch; ++b) {
            const double* sp = spread.row(b);
            const double* bd = cache.basis_deriv.row(b);
            const double* xb = cache.x.row(b);
            const double* bg = base_grad.row(b);
            double* ig = input_grad.row(b);
            for (std::size_t i = 0; i < in_dim; ++i) {
                ig[i] = bg[i] * silu_deriv(xb[i]) +
                        dot4(sp + i * nb, bd + i * nb, nb);
            }
        }
    }
};

// Three KAN layers chained in_dim -> hidden -> hidden -> out_dim.
struct FemKan {
    std::vector<KanLayer> layers;
    std::vector<KanCache> caches; // per-layer training caches

    static FemKan init(const std::vector<std::size_t>& dims, std::size_t grid_size,
                       std::size_t order, std::uint64_t seed,
                       double lo = -1.0, double hi = 1.0) {
        if (dims.size() != 4)
            raise(ErrorClass::dimension, "FemKan: need 4 dims for 3 layers");
        FemKan m;
        SeededRng rng(seed, 0x4b414e); // "KAN"
        for (std::size_t l = 0; l < 3; ++l)
            m.layers.push_back(
                KanLayer::init(dims[l], dims[l + 1], grid_size, order, rng, lo, hi));
        m.caches.resize(3);
        return m;
    }

    std::size_t in_dim() const { return layers.front().in_dim; }
    std::size_t out_dim() const { return layers.back().out_dim; }

    std::vector<std::size_t> dims() const {
        std::vector<std::size_t> d;
        d.push_back(layers.front().in_dim);
        for (const auto& l : layers) d.push_back(l.out_dim);
        return d;
    }

    Mat64 forward(const Mat64& x) const {
        Mat64 cur = x;
        Mat64 next;
        KanCache scratch;
        for (const auto& l : layers) {
            l.forward(cur, next, scratch, false);
            cur = std::move(next);
        }
        return cur;
    }

    Mat64 train_forward(const Mat64& x) {
        Mat64 cur = x;
        Mat64 next;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            layers[l].forward(cur, next, caches[l], true);
            cur = std::move(next);
        }
        return cur;
    }

    // Consumes the caches from the last train_forward.
    void train_backward(const Mat64& upstream) {
        Mat64 up = upstream;
        Mat64 down;
        for (std::size_t l = layers.size(); l-- > 0;) {
            layers[l].backward(caches[l], up, down);
            up = std::move(down);
        }
    }

    void zero_grads() {
        for (auto& l : layers) l.zero_grads();
    }

    std::vector<ParamBlock> trainable_blocks() {
        std::vector<ParamBlock> out;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto& lay = layers[l];
            const std::string p = "layer" + std::to_string(l) + ".";
            out.push_back({p + "base_weights",
                           {lay.out_dim, lay.in_dim},
                           lay.base_weights.values,
                           lay.g_base.values});
            out.push_back({p + "spline_coeffs",
                           {lay.out_dim, lay.in_dim, lay.grid.basis_count()},
                           lay.spline_coeffs.values,
                           lay.g_coeffs.values});
            out.push_back({p + "spline_scalers",
                           {lay.out_dim, lay.in_dim},
                           lay.spline_scalers.values,
                           lay.g_scalers.values});
        }
        return out;
    }

    std::vector<ParamBlock> state_blocks() { return trainable_blocks(); }
};

} // namespace fem
