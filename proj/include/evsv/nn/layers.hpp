#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "evsv/core/error.hpp"
#include "evsv/core/rng.hpp"
#include "evsv/core/tensor.hpp"

namespace evsv::nn {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

enum class Activation { Linear, Tanh, Sigmoid, Gated };

// Fully connected layer. "Gated" splits the pre-activation in half and
// emits a * sigmoid(b), so the output dimension is weight.rows() / 2.
struct DenseLayer {
    Tensor weight;  // out_pre x in
    Tensor bias;    // out_pre
    Activation activation = Activation::Linear;

    std::size_t in_dim() const { return weight.cols(); }
    std::size_t pre_dim() const { return weight.rows(); }
    std::size_t out_dim() const {
        return activation == Activation::Gated ? pre_dim() / 2 : pre_dim();
    }

    static DenseLayer create(std::size_t in, std::size_t out_pre, Activation act,
                             SeededRng& rng) {
        require(act != Activation::Gated || out_pre % 2 == 0,
                "gated layer needs an even pre-activation width");
        DenseLayer l;
        l.activation = act;
        l.weight = Tensor{{out_pre, in}};
        l.bias = Tensor{{out_pre}};
        const double r = 1.0 / std::sqrt(static_cast<double>(in));
        l.weight.randomize_uniform(rng, -r, r);
        return l;
    }
};

struct DenseCache {
    Tensor input;  // B x in
    Tensor pre;    // B x out_pre
};

struct DenseGrads {
    Tensor d_weight;
    Tensor d_bias;
    Tensor d_input;
};

inline Tensor dense_forward(const DenseLayer& l, const Tensor& x,
                            DenseCache* cache = nullptr) {
    require(x.cols() == l.in_dim(), "dimension error");
    const std::size_t batch = x.rows();
    const std::size_t out_pre = l.pre_dim();

    Tensor pre{{batch, out_pre}};
    for (std::size_t b = 0; b < batch; ++b) {
        double* row = pre.data.data() + b * out_pre;
        for (std::size_t j = 0; j < out_pre; ++j) row[j] = l.bias[j];
    }
    matmul_bt_acc(x.data.data(), batch, l.in_dim(), l.weight.data.data(), out_pre,
                  pre.data.data());

    Tensor y{{batch, l.out_dim()}};
    switch (l.activation) {
        case Activation::Linear:
            y.data = pre.data;
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < pre.size(); ++i) y[i] = std::tanh(pre[i]);
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < pre.size(); ++i) y[i] = sigmoid(pre[i]);
            break;
        case Activation::Gated: {
            const std::size_t half = out_pre / 2;
            for (std::size_t b = 0; b < batch; ++b) {
                const double* p = pre.data.data() + b * out_pre;
                double* o = y.data.data() + b * half;
                for (std::size_t k = 0; k < half; ++k) {
                    o[k] = p[k] * sigmoid(p[half + k]);
                }
            }
            break;
        }
    }
    if (cache) {
        cache->input = x;
        cache->pre = std::move(pre);
    }
    return y;
}

inline DenseGrads dense_backward(const DenseLayer& l, const DenseCache& cache,
                                 const Tensor& d_out) {
    const std::size_t batch = cache.input.rows();
    const std::size_t out_pre = l.pre_dim();
    require(d_out.rows() == batch && d_out.cols() == l.out_dim(), "dimension error");

    Tensor d_pre{{batch, out_pre}};
    switch (l.activation) {
        case Activation::Linear:
            d_pre.data = d_out.data;
            break;
        case Activation::Tanh:
            for (std::size_t i = 0; i < d_pre.size(); ++i) {
                const double th = std::tanh(cache.pre[i]);
                d_pre[i] = d_out[i] * (1.0 - th * th);
            }
            break;
        case Activation::Sigmoid:
            for (std::size_t i = 0; i < d_pre.size(); ++i) {
                const double s = sigmoid(cache.pre[i]);
                d_pre[i] = d_out[i] * s * (1.0 - s);
            }
            break;
        case Activation::Gated: {
            const std::size_t half = out_pre / 2;
            for (std::size_t b = 0; b < batch; ++b) {
                const double* p = cache.pre.data.data() + b * out_pre;
                const double* dy = d_out.data.data() + b * half;
                double* dp = d_pre.data.data() + b * out_pre;
                for (std::size_t k = 0; k < half; ++k) {
                    const double s = sigmoid(p[half + k]);
                    dp[k] = dy[k] * s;
                    dp[half + k] = dy[k] * p[k] * s * (1.0 - s);
                }
            }
            break;
        }
    }

    DenseGrads g;
    g.d_weight = Tensor{{out_pre, l.in_dim()}};
    g.d_bias = Tensor{{out_pre}};
    g.d_input = Tensor{{batch, l.in_dim()}};
    matmul_at_acc(d_pre.data.data(), batch, out_pre, cache.input.data.data(),
                  l.in_dim(), g.d_weight.data.data());
    for (std::size_t b = 0; b < batch; ++b) {
        const double* dp = d_pre.data.data() + b * out_pre;
        for (std::size_t j = 0; j < out_pre; ++j) g.d_bias[j] += dp[j];
    }
    matmul_acc(d_pre.data.data(), batch, out_pre, l.weight.data.data(), l.in_dim(),
               g.d_input.data.data());
    return g;
}

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

// Gate blocks stacked in the order [input; forget; cell; output].
// Forget-gate bias starts at 1.
struct LstmLayer {
    Tensor w_x;   // 4H x In
    Tensor w_h;   // 4H x H
    Tensor bias;  // 4H
    std::size_t hidden = 0;

    std::size_t in_dim() const { return w_x.cols(); }

    static LstmLayer create(std::size_t in, std::size_t hidden, SeededRng& rng) {
        LstmLayer l;
        l.hidden = hidden;
        l.w_x = Tensor{{4 * hidden, in}};
        l.w_h = Tensor{{4 * hidden, hidden}};
        l.bias = Tensor{{4 * hidden}};
        const double rx = 1.0 / std::sqrt(static_cast<double>(in));
        const double rh = 1.0 / std::sqrt(static_cast<double>(hidden));
        l.w_x.randomize_uniform(rng, -rx, rx);
        l.w_h.randomize_uniform(rng, -rh, rh);
        for (std::size_t j = hidden; j < 2 * hidden; ++j) l.bias[j] = 1.0;
        return l;
    }
};

struct LstmCache {
    std::size_t steps = 0, batch = 0;
    std::vector<Tensor> x;                // T of B x In
    std::vector<Tensor> i, f, g, o;       // post-activation gates, B x H
    std::vector<Tensor> c;                // cell states, B x H
    std::vector<Tensor> h;                // hidden states, B x H
};

struct LstmGrads {
    Tensor d_wx, d_wh, d_bias;
    Tensor d_input;  // T x B x In
};

// x is time-major {T, B, In}; returns hidden states {T, B, H}.
inline Tensor lstm_forward(const LstmLayer& l, const Tensor& x,
                           LstmCache* cache = nullptr) {
    require(x.shape.size() == 3, "dimension error");
    const std::size_t steps = x.shape[0], batch = x.shape[1], in = x.shape[2];
    require(in == l.in_dim() && steps >= 1, "dimension error");
    const std::size_t hid = l.hidden;

    Tensor h_all{{steps, batch, hid}};
    Tensor h_prev{{batch, hid}};
    Tensor c_prev{{batch, hid}};
    if (cache) {
        cache->steps = steps;
        cache->batch = batch;
        cache->x.resize(steps);
        cache->i.resize(steps);
        cache->f.resize(steps);
        cache->g.resize(steps);
        cache->o.resize(steps);
        cache->c.resize(steps);
        cache->h.resize(steps);
    }

    Tensor z{{batch, 4 * hid}};
    for (std::size_t t = 0; t < steps; ++t) {
        Tensor x_t{{batch, in}};
        std::copy_n(x.data.data() + t * batch * in, batch * in, x_t.data.data());

        for (std::size_t b = 0; b < batch; ++b) {
            double* row = z.data.data() + b * 4 * hid;
            for (std::size_t j = 0; j < 4 * hid; ++j) row[j] = l.bias[j];
        }
        matmul_bt_acc(x_t.data.data(), batch, in, l.w_x.data.data(), 4 * hid,
                      z.data.data());
        matmul_bt_acc(h_prev.data.data(), batch, hid, l.w_h.data.data(), 4 * hid,
                      z.data.data());

        Tensor gi{{batch, hid}}, gf{{batch, hid}}, gg{{batch, hid}}, go{{batch, hid}};
        Tensor c_t{{batch, hid}}, h_t{{batch, hid}};
        for (std::size_t b = 0; b < batch; ++b) {
            const double* zr = z.data.data() + b * 4 * hid;
            const double* cp = c_prev.data.data() + b * hid;
            double* pi = gi.data.data() + b * hid;
            double* pf = gf.data.data() + b * hid;
            double* pg = gg.data.data() + b * hid;
            double* po = go.data.data() + b * hid;
            double* pc = c_t.data.data() + b * hid;
            double* ph = h_t.data.data() + b * hid;
            for (std::size_t k = 0; k < hid; ++k) {
                pi[k] = sigmoid(zr[k]);
                pf[k] = sigmoid(zr[hid + k]);
                pg[k] = std::tanh(zr[2 * hid + k]);
                po[k] = sigmoid(zr[3 * hid + k]);
                pc[k] = pf[k] * cp[k] + pi[k] * pg[k];
                ph[k] = po[k] * std::tanh(pc[k]);
            }
        }
        std::copy_n(h_t.data.data(), batch * hid,
                    h_all.data.data() + t * batch * hid);
        if (cache) {
            cache->x[t] = std::move(x_t);
            cache->i[t] = gi;
            cache->f[t] = gf;
            cache->g[t] = gg;
            cache->o[t] = go;
            cache->c[t] = c_t;
            cache->h[t] = h_t;
        }
        h_prev = std::move(h_t);
        c_prev = std::move(c_t);
    }
    return h_all;
}

// Full backpropagation through time. d_h_all carries the upstream gradient
// for every timestep's hidden state, shape {T, B, H}.
inline LstmGrads lstm_backward(const LstmLayer& l, const LstmCache& cache,
                               const Tensor& d_h_all) {
    const std::size_t steps = cache.steps, batch = cache.batch;
    const std::size_t hid = l.hidden, in = l.in_dim();
    require(d_h_all.shape == std::vector<std::size_t>({steps, batch, hid}),
            "dimension error");

    LstmGrads grads;
    grads.d_wx = Tensor{{4 * hid, in}};
    grads.d_wh = Tensor{{4 * hid, hid}};
    grads.d_bias = Tensor{{4 * hid}};
    grads.d_input = Tensor{{steps, batch, in}};

    Tensor dh_next{{batch, hid}};
    Tensor dc_next{{batch, hid}};
    Tensor dz{{batch, 4 * hid}};

    for (std::size_t ts = steps; ts-- > 0;) {
        const Tensor& gi = cache.i[ts];
        const Tensor& gf = cache.f[ts];
        const Tensor& gg = cache.g[ts];
        const Tensor& go = cache.o[ts];
        const Tensor& c_t = cache.c[ts];

        for (std::size_t b = 0; b < batch; ++b) {
            const double* dh_up = d_h_all.data.data() + (ts * batch + b) * hid;
            const double* cp = ts > 0 ? cache.c[ts - 1].data.data() + b * hid : nullptr;
            double* dzr = dz.data.data() + b * 4 * hid;
            double* dhn = dh_next.data.data() + b * hid;
            double* dcn = dc_next.data.data() + b * hid;
            for (std::size_t k = 0; k < hid; ++k) {
                const double i_v = gi(b, k), f_v = gf(b, k), g_v = gg(b, k),
                             o_v = go(b, k);
                const double tc = std::tanh(c_t(b, k));
                const double dh = dh_up[k] + dhn[k];
                const double d_o = dh * tc;
                const double dc = dh * o_v * (1.0 - tc * tc) + dcn[k];
                const double d_i = dc * g_v;
                const double d_f = dc * (ts > 0 ? cp[k] : 0.0);
                const double d_g = dc * i_v;
                dzr[k] = d_i * i_v * (1.0 - i_v);
                dzr[hid + k] = d_f * f_v * (1.0 - f_v);
                dzr[2 * hid + k] = d_g * (1.0 - g_v * g_v);
                dzr[3 * hid + k] = d_o * o_v * (1.0 - o_v);
                dcn[k] = dc * f_v;
            }
        }

        matmul_at_acc(dz.data.data(), batch, 4 * hid, cache.x[ts].data.data(), in,
                      grads.d_wx.data.data());
        if (ts > 0) {
            matmul_at_acc(dz.data.data(), batch, 4 * hid,
                          cache.h[ts - 1].data.data(), hid, grads.d_wh.data.data());
        }
        for (std::size_t b = 0; b < batch; ++b) {
            const double* dzr = dz.data.data() + b * 4 * hid;
            for (std::size_t j = 0; j < 4 * hid; ++j) grads.d_bias[j] += dzr[j];
        }
        matmul_acc(dz.data.data(), batch, 4 * hid, l.w_x.data.data(), in,
                   grads.d_input.data.data() + ts * batch * in);
        dh_next.fill(0.0);
        matmul_acc(dz.data.data(), batch, 4 * hid, l.w_h.data.data(), hid,
                   dh_next.data.data());
    }
    return grads;
}

}  // namespace evsv::nn
