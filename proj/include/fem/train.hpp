#pragma once

// MSE objective, AdamW with decoupled weight decay, per-epoch exponential
// learning-rate decay, the deterministic epoch loop, and a reusable
// finite-difference gradient checker.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numeric>
#include <vector>

#include "fem/numkit.hpp"
#include "fem/params.hpp"

namespace fem {

struct TrainConfig {
    double lr0 = 1e-2;
    double decay_gamma = 0.8;
    std::size_t epochs = 20;
    std::size_t batch_size = 128;
    double weight_decay = 0.0;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    std::uint64_t seed = 0;
    double train_fraction = 0.9;

    void validate() const {
        if (!(decay_gamma > 0.0 && decay_gamma <= 1.0))
            raise(ErrorClass::usage, "TrainConfig: decay_gamma must be in (0, 1]");
        if (batch_size < 2)
            raise(ErrorClass::usage, "TrainConfig: batch_size must be >= 2");
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            raise(ErrorClass::usage, "TrainConfig: train_fraction must be in (0, 1)");
        if (!(lr0 > 0.0)) raise(ErrorClass::usage, "TrainConfig: lr0 must be > 0");
    }
};

struct AdamWState {
    std::vector<Vec64> m, v; // parallel to the model's trainable blocks
    std::uint64_t step = 0;

    static AdamWState init(const std::vector<ParamBlock>& blocks) {
        AdamWState s;
        for (const auto& b : blocks) {
            s.m.emplace_back(b.size(), 0.0);
            s.v.emplace_back(b.size(), 0.0);
        }
        return s;
    }
};

// loss = sum_i (e_i - ehat_i)^2 / N with N the vector length;
// gradient w.r.t. ehat is 2*(ehat - e)/N.
inline std::pair<double, Vec64> mse_loss(const Vec64& e, const Vec64& e_hat) {
    if (e.size() != e_hat.size())
        raise(ErrorClass::dimension, "mse_loss: length mismatch");
    const double inv_n = 1.0 / static_cast<double>(e.size());
    double loss = 0.0;
    Vec64 grad(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        const double d = e_hat[i] - e[i];
        loss += d * d;
        grad[i] = 2.0 * d * inv_n;
    }
    return {loss * inv_n, grad};
}

// Batch MSE: mean of per-sample losses; grad_out gets d(loss)/d(pred).
inline double mse_loss_batch(const Mat64& target, const Mat64& pred, Mat64& grad_out) {
    if (target.rows != pred.rows || target.cols != pred.cols)
        raise(ErrorClass::dimension, "mse_loss_batch: shape mismatch");
    const std::size_t batch = target.rows;
    const double inv_n = 1.0 / static_cast<double>(target.cols);
    const double inv_b = 1.0 / static_cast<double>(batch);
    grad_out = Mat64(batch, target.cols);
    double total = 0.0;
    for (std::size_t b = 0; b < batch; ++b) {
        const double* tb = target.row(b);
        const double* pb = pred.row(b);
        double* gb = grad_out.row(b);
        for (std::size_t c = 0; c < target.cols; ++c) {
            const double d = pb[c] - tb[c];
            total += d * d;
            gb[c] = 2.0 * d * inv_n * inv_b;
        }
    }
    return total * inv_n * inv_b;
}

inline double lr_at_epoch(const TrainConfig& cfg, std::size_t epoch) {
    return cfg.lr0 * std::pow(cfg.decay_gamma, static_cast<double>(epoch));
}

// One decoupled-weight-decay Adam step over all blocks.
inline void adamw_step(std::vector<ParamBlock>& blocks, AdamWState& state,
                       double lr, const TrainConfig& cfg) {
    state.step += 1;
    const double t = static_cast<double>(state.step);
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, t);
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, t);
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        auto& block = blocks[k];
        Vec64& m = state.m[k];
        Vec64& v = state.v[k];
        for (std::size_t i = 0; i < block.size(); ++i) {
            const double g = block.grad[i];
            if (!std::isfinite(g))
                raise(ErrorClass::numeric,
                      "adamw_step: non-finite gradient in block " + block.name);
            m[i] = cfg.adam_beta1 * m[i] + (1.0 - cfg.adam_beta1) * g;
            v[i] = cfg.adam_beta2 * v[i] + (1.0 - cfg.adam_beta2) * g * g;
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            block.value[i] -= lr * (mhat / (std::sqrt(vhat) + cfg.adam_eps) +
                                    cfg.weight_decay * block.value[i]);
        }
    }
}

// Epoch loop over paired rows (inputs[i] -> targets[i]). Shuffles with a
// seeded Fisher-Yates per epoch; a final short batch is kept when it has
// at least 2 samples (batchnorm precondition) and dropped otherwise.
// Returns the per-epoch mean training loss (sample-weighted).
template <class Model>
std::vector<double> train_fem(Model& model, const Mat64& inputs,
                              const Mat64& targets, const TrainConfig& cfg) {
    cfg.validate();
    if (inputs.rows == 0) raise(ErrorClass::dimension, "train_fem: empty dataset");
    if (inputs.rows != targets.rows)
        raise(ErrorClass::dimension, "train_fem: input/target row count mismatch");
    if (inputs.cols != model.in_dim() || targets.cols != model.out_dim())
        raise(ErrorClass::dimension, "train_fem: dataset width mismatch with model");

    auto blocks = model.trainable_blocks();
    AdamWState state = AdamWState::init(blocks);
    SeededRng shuffle_rng(cfg.seed, 0x53485546); // shuffle stream

    std::vector<std::size_t> order(inputs.rows);
    std::iota(order.begin(), order.end(), 0);
    std::vector<double> trace;
    trace.reserve(cfg.epochs);

    Mat64 xb, yb, grad;
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        const double lr = lr_at_epoch(cfg, epoch);
        for (std::size_t i = order.size(); i > 1; --i) {
            const std::size_t j = shuffle_rng.next_below(i);
            std::swap(order[i - 1], order[j]);
        }
        double epoch_loss = 0.0;
        std::size_t epoch_samples = 0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t bsz = std::min(cfg.batch_size, order.size() - start);
            if (bsz < 2) break; // drop degenerate final batch
            xb = Mat64(bsz, inputs.cols);
            yb = Mat64(bsz, targets.cols);
            for (std::size_t r = 0; r < bsz; ++r) {
                xb.set_row(r, inputs.row_span(order[start + r]));
                yb.set_row(r, targets.row_span(order[start + r]));
            }
            model.zero_grads();
            Mat64 pred = model.train_forward(xb);
            const double loss = mse_loss_batch(yb, pred, grad);
            if (!std::isfinite(loss))
                raise(ErrorClass::numeric,
                      "train_fem: non-finite loss at epoch " + std::to_string(epoch));
            model.train_backward(grad);
            adamw_step(blocks, state, lr, cfg);
            epoch_loss += loss * static_cast<double>(bsz);
            epoch_samples += bsz;
        }
        if (epoch_samples == 0)
            raise(ErrorClass::dimension, "train_fem: no usable batches");
        trace.push_back(epoch_loss / static_cast<double>(epoch_samples));
    }
    return trace;
}

// Central finite differences over every trainable parameter.
// loss_with_backward() must zero grads, run forward+backward on a fixed
// sample, and return the loss; loss_only() must compute the same loss
// without touching gradients. Returns the worst relative error
// |analytic - numeric| / max(1e-8, |analytic|, |numeric|).
template <class Model>
double grad_check(Model& model, const std::function<double()>& loss_with_backward,
                  const std::function<double()>& loss_only, double h = 1e-5) {
    loss_with_backward();
    auto blocks = model.trainable_blocks();
    std::vector<Vec64> analytic;
    for (auto& b : blocks) analytic.emplace_back(b.grad.begin(), b.grad.end());

    double worst = 0.0;
    for (std::size_t k = 0; k < blocks.size(); ++k) {
        auto& block = blocks[k];
        for (std::size_t i = 0; i < block.size(); ++i) {
            const double orig = block.value[i];
            block.value[i] = orig + h;
            const double up = loss_only();
            block.value[i] = orig - h;
            const double down = loss_only();
            block.value[i] = orig;
            const double numeric = (up - down) / (2.0 * h);
            const double a = analytic[k][i];
            const double denom = std::max({1e-8, std::abs(a), std::abs(numeric)});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

} // namespace fem
