#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "evsv/core/error.hpp"
#include "evsv/core/tensor.hpp"

namespace evsv::nn {

struct AdamConfig {
    double base_lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
    double decay_rate = 1.0;       // multiplicative lr decay
    std::size_t decay_every = 10000;
};

// paper-style schedule: lr 1e-6 with 0.98 decay every 10k iterations
inline AdamConfig paper_schedule() {
    AdamConfig c;
    c.base_lr = 1e-6;
    c.decay_rate = 0.98;
    c.decay_every = 10000;
    return c;
}

struct AdamState {
    AdamConfig cfg;
    std::size_t step = 0;  // completed steps
    std::vector<Tensor> m, v;

    void init(const std::vector<Tensor*>& params, const AdamConfig& config) {
        cfg = config;
        step = 0;
        m.clear();
        v.clear();
        for (const Tensor* p : params) {
            m.emplace_back(p->shape);
            v.emplace_back(p->shape);
        }
    }
};

inline double effective_lr(const AdamState& s) {
    const std::size_t k = s.cfg.decay_every > 0 ? s.step / s.cfg.decay_every : 0;
    return s.cfg.base_lr * std::pow(s.cfg.decay_rate, static_cast<double>(k));
}

inline void adam_step(AdamState& s, const std::vector<Tensor*>& params,
                      const std::vector<const Tensor*>& grads) {
    require(params.size() == grads.size() && params.size() == s.m.size(),
            "dimension error");
    for (std::size_t p = 0; p < params.size(); ++p) {
        require(params[p]->shape == grads[p]->shape, "dimension error");
        require(grads[p]->all_finite(), "divergence detected");
    }

    const double lr = effective_lr(s);
    const double t = static_cast<double>(s.step + 1);
    const double bc1 = 1.0 - std::pow(s.cfg.beta1, t);
    const double bc2 = 1.0 - std::pow(s.cfg.beta2, t);

    for (std::size_t p = 0; p < params.size(); ++p) {
        Tensor& theta = *params[p];
        const Tensor& g = *grads[p];
        Tensor& m = s.m[p];
        Tensor& v = s.v[p];
        for (std::size_t i = 0; i < theta.size(); ++i) {
            m[i] = s.cfg.beta1 * m[i] + (1.0 - s.cfg.beta1) * g[i];
            v[i] = s.cfg.beta2 * v[i] + (1.0 - s.cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            theta[i] -= lr * mhat / (std::sqrt(vhat) + s.cfg.eps);
        }
    }
    ++s.step;
}

// Global-norm gradient clipping (L2 over all tensors jointly).
inline void clip_gradients(std::vector<Tensor*> grads, double max_norm) {
    double sq = 0.0;
    for (const Tensor* g : grads) {
        for (double v : g->data) sq += v * v;
    }
    const double norm = std::sqrt(sq);
    if (norm <= max_norm || norm == 0.0) return;
    const double scale = max_norm / norm;
    for (Tensor* g : grads) {
        for (double& v : g->data) v *= scale;
    }
}

}  // namespace evsv::nn
