#pragma once

// FEM-MLP baseline: three affine layers, the hidden two followed by 1D
// batch normalization and GELU. Training mode normalizes by batch
// statistics and maintains running stats; inference mode is a pure
// function of the parameters.

#include <cstddef>
#include <cstdint>
#include <vector>

#include "fem/numkit.hpp"
#include "fem/params.hpp"

namespace fem {

enum class Mode { training, inference };

// tanh-approximation GELU: 0.5*x*(1 + tanh(sqrt(2/pi)*(x + 0.044715*x^3))).
// Golden values in the tests depend on this exact form.
inline double gelu(double x) {
    constexpr double c = 0.7978845608028654; // sqrt(2/pi)
    const double u = c * (x + 0.044715 * x * x * x);
    return 0.5 * x * (1.0 + std::tanh(u));
}

inline double gelu_deriv(double x) {
    constexpr double c = 0.7978845608028654;
    const double u = c * (x + 0.044715 * x * x * x);
    const double t = std::tanh(u);
    return 0.5 * (1.0 + t) +
           0.5 * x * (1.0 - t * t) * c * (1.0 + 3.0 * 0.044715 * x * x);
}

struct MlpLayer {
    Mat64 W;  // out x in
    Vec64 b;  // out
    bool has_activation = true; // hidden layers: batchnorm + gelu
    Vec64 bn_gamma, bn_beta;
    Vec64 bn_running_mean, bn_running_var;
    double bn_eps = 1e-5;
    double bn_momentum = 0.1;

    Mat64 gW;
    Vec64 gb, g_gamma, g_beta;

    std::size_t in_dim() const { return W.cols; }
    std::size_t out_dim() const { return W.rows; }

    static MlpLayer init(std::size_t in_dim, std::size_t out_dim,
                         bool has_activation, SeededRng& rng) {
        MlpLayer l;
        l.W = Mat64(out_dim, in_dim);
        const double inv_sqrt_in = 1.0 / std::sqrt(static_cast<double>(in_dim));
        for (double& w : l.W.values) w = rng.next_range(-1.0, 1.0) * inv_sqrt_in;
        l.b.assign(out_dim, 0.0);
        l.has_activation = has_activation;
        if (has_activation) {
            l.bn_gamma.assign(out_dim, 1.0);
            l.bn_beta.assign(out_dim, 0.0);
            l.bn_running_mean.assign(out_dim, 0.0);
            l.bn_running_var.assign(out_dim, 1.0);
        }
        l.gW = Mat64(out_dim, in_dim);
        l.gb.assign(out_dim, 0.0);
        if (has_activation) {
            l.g_gamma.assign(out_dim, 0.0);
            l.g_beta.assign(out_dim, 0.0);
        }
        return l;
    }

    // in place: optimizer spans over the gradients stay valid
    void zero_grads() {
        gW.fill(0.0);
        std::fill(gb.begin(), gb.end(), 0.0);
        std::fill(g_gamma.begin(), g_gamma.end(), 0.0);
        std::fill(g_beta.begin(), g_beta.end(), 0.0);
    }
};

// Per-layer forward workspace kept for the backward pass.
struct MlpCache {
    Mat64 input;   // layer input
    Mat64 z;       // affine output
    Vec64 mu, var; // batch stats (training mode)
    Mat64 xhat;    // normalized
    Mat64 a;       // gamma*xhat + beta (gelu input)
};

// Batch normalization over features. Training mode uses biased (1/B) batch
// variance for normalization and stores the unbiased (1/(B-1)) variance
// into the running estimate, scaled by momentum 0.1.
inline Mat64 batchnorm_forward(MlpLayer& layer, const Mat64& z, Mode mode,
                               MlpCache* cache = nullptr) {
    const std::size_t batch = z.rows;
    const std::size_t dim = z.cols;
    if (dim != layer.out_dim())
        raise(ErrorClass::dimension, "batchnorm: width mismatch");
    Mat64 out(batch, dim);
    if (mode == Mode::training) {
        if (batch < 2)
            raise(ErrorClass::degenerate,
                  "batchnorm: training mode requires batch size >= 2");
        Vec64 mu(dim, 0.0), var(dim, 0.0);
        for (std::size_t b = 0; b < batch; ++b) {
            const double* zb = z.row(b);
            for (std::size_t c = 0; c < dim; ++c) mu[c] += zb[c];
        }
        for (double& m : mu) m /= static_cast<double>(batch);
        for (std::size_t b = 0; b < batch; ++b) {
            const double* zb = z.row(b);
            for (std::size_t c = 0; c < dim; ++c) {
                const double d = zb[c] - mu[c];
                var[c] += d * d;
            }
        }
        for (double& v : var) v /= static_cast<double>(batch);
        const double unbias = static_cast<double>(batch) / static_cast<double>(batch - 1);
        for (std::size_t c = 0; c < dim; ++c) {
            layer.bn_running_mean[c] =
                (1.0 - layer.bn_momentum) * layer.bn_running_mean[c] +
                layer.bn_momentum * mu[c];
            layer.bn_running_var[c] =
                (1.0 - layer.bn_momentum) * layer.bn_running_var[c] +
                layer.bn_momentum * var[c] * unbias;
        }
        if (cache) {
            cache->mu = mu;
            cache->var = var;
            cache->xhat = Mat64(batch, dim);
        }
        for (std::size_t b = 0; b < batch; ++b) {
            const double* zb = z.row(b);
            double* ob = out.row(b);
            for (std::size_t c = 0; c < dim; ++c) {
                const double xh = (zb[c] - mu[c]) / std::sqrt(var[c] + layer.bn_eps);
                if (cache) cache->xhat.at(b, c) = xh;
                ob[c] = layer.bn_gamma[c] * xh + layer.bn_beta[c];
            }
        }
    } else {
        for (std::size_t b = 0; b < batch; ++b) {
            const double* zb = z.row(b);
            double* ob = out.row(b);
            for (std::size_t c = 0; c < dim; ++c) {
                const double xh = (zb[c] - layer.bn_running_mean[c]) /
                                  std::sqrt(layer.bn_running_var[c] + layer.bn_eps);
                ob[c] = layer.bn_gamma[c] * xh + layer.bn_beta[c];
            }
        }
    }
    return out;
}

struct FemMlp {
    std::vector<MlpLayer> layers;
    Mode mode = Mode::training;
    std::vector<MlpCache> caches;

    static FemMlp init(const std::vector<std::size_t>& dims, std::uint64_t seed) {
        if (dims.size() != 4)
            raise(ErrorClass::dimension, "FemMlp: need 4 dims for 3 layers");
        FemMlp m;
        SeededRng rng(seed, 0x4d4c50); // "MLP"
        for (std::size_t l = 0; l < 3; ++l)
            m.layers.push_back(MlpLayer::init(dims[l], dims[l + 1], l < 2, rng));
        m.caches.resize(3);
        return m;
    }

    std::size_t in_dim() const { return layers.front().in_dim(); }
    std::size_t out_dim() const { return layers.back().out_dim(); }

    std::vector<std::size_t> dims() const {
        std::vector<std::size_t> d;
        d.push_back(layers.front().in_dim());
        for (const auto& l : layers) d.push_back(l.out_dim());
        return d;
    }

    // Layer order: affine -> batchnorm -> gelu, the final layer affine only.
    Mat64 forward_with_mode(const Mat64& x, Mode m, bool keep_cache) {
        if (x.cols != in_dim())
            raise(ErrorClass::dimension, "mlp forward: input width mismatch");
        Mat64 cur = x;
        for (std::size_t l = 0; l < layers.size(); ++l) {
            MlpLayer& lay = layers[l];
            MlpCache* cache = keep_cache ? &caches[l] : nullptr;
            if (cache) cache->input = cur;
            Mat64 z;
            matmul_nt(cur, lay.W, z);
            for (std::size_t b = 0; b < z.rows; ++b) {
                double* zb = z.row(b);
                for (std::size_t c = 0; c < z.cols; ++c) zb[c] += lay.b[c];
            }
            if (!lay.has_activation) {
                if (cache) cache->z = z;
                cur = std::move(z);
                continue;
            }
            Mat64 a = batchnorm_forward(lay, z, m, cache);
            if (cache) {
                cache->z = std::move(z);
                cache->a = a;
            }
            for (double& v : a.values) v = gelu(v);
            cur = std::move(a);
        }
        return cur;
    }

    // Inference forward: pure function of parameters and running stats.
    Mat64 forward(const Mat64& x) {
        return forward_with_mode(x, Mode::inference, false);
    }

    Mat64 train_forward(const Mat64& x) {
        return forward_with_mode(x, Mode::training, true);
    }

    // Exact gradients including the batch-coupled batchnorm terms.
    void train_backward(const Mat64& upstream) {
        Mat64 up = upstream;
        for (std::size_t l = layers.size(); l-- > 0;) {
            MlpLayer& lay = layers[l];
            MlpCache& cache = caches[l];
            const std::size_t batch = up.rows;
            const std::size_t dim = lay.out_dim();
            Mat64 dz;
            if (lay.has_activation) {
                // through gelu
                Mat64 da(batch, dim);
                for (std::size_t b = 0; b < batch; ++b) {
                    const double* ub = up.row(b);
                    const double* ab = cache.a.row(b);
                    double* db = da.row(b);
                    for (std::size_t c = 0; c < dim; ++c)
                        db[c] = ub[c] * gelu_deriv(ab[c]);
                }
                // through batchnorm
                for (std::size_t b = 0; b < batch; ++b)
                    for (std::size_t c = 0; c < dim; ++c) {
                        lay.g_gamma[c] += da.at(b, c) * cache.xhat.at(b, c);
                        lay.g_beta[c] += da.at(b, c);
                    }
                dz = Mat64(batch, dim);
                const double inv_batch = 1.0 / static_cast<double>(batch);
                for (std::size_t c = 0; c < dim; ++c) {
                    const double iv = 1.0 / std::sqrt(cache.var[c] + lay.bn_eps);
                    double sum_dxhat = 0.0;
                    double sum_dxhat_xc = 0.0;
                    for (std::size_t b = 0; b < batch; ++b) {
                        const double dxh = da.at(b, c) * lay.bn_gamma[c];
                        const double xc = cache.z.at(b, c) - cache.mu[c];
                        sum_dxhat += dxh;
                        sum_dxhat_xc += dxh * xc;
                    }
                    const double dvar = sum_dxhat_xc * (-0.5) * iv * iv * iv;
                    const double dmu = -sum_dxhat * iv;
                    for (std::size_t b = 0; b < batch; ++b) {
                        const double dxh = da.at(b, c) * lay.bn_gamma[c];
                        const double xc = cache.z.at(b, c) - cache.mu[c];
                        dz.at(b, c) = dxh * iv + dvar * 2.0 * xc * inv_batch +
                                      dmu * inv_batch;
                    }
                }
            } else {
                dz = up;
            }
            matmul_tn_accum(dz, cache.input, lay.gW);
            for (std::size_t b = 0; b < batch; ++b) {
                const double* db = dz.row(b);
                for (std::size_t c = 0; c < dim; ++c) lay.gb[c] += db[c];
            }
            if (l > 0) matmul_nn(dz, lay.W, up);
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
            out.push_back({p + "W", {lay.out_dim(), lay.in_dim()}, lay.W.values, lay.gW.values});
            out.push_back({p + "b", {lay.out_dim()}, lay.b, lay.gb});
            if (lay.has_activation) {
                out.push_back({p + "bn_gamma", {lay.out_dim()}, lay.bn_gamma, lay.g_gamma});
                out.push_back({p + "bn_beta", {lay.out_dim()}, lay.bn_beta, lay.g_beta});
            }
        }
        return out;
    }

    std::vector<ParamBlock> state_blocks() {
        auto out = trainable_blocks();
        for (std::size_t l = 0; l < layers.size(); ++l) {
            auto& lay = layers[l];
            if (!lay.has_activation) continue;
            const std::string p = "layer" + std::to_string(l) + ".";
            out.push_back({p + "bn_running_mean", {lay.out_dim()}, lay.bn_running_mean, {}});
            out.push_back({p + "bn_running_var", {lay.out_dim()}, lay.bn_running_var, {}});
        }
        return out;
    }
};

} // namespace fem
