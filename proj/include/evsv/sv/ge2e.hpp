#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "evsv/core/error.hpp"
#include "evsv/core/tensor.hpp"

namespace evsv::sv {

// Learned scale/offset of the scaled-cosine similarity. w stays positive.
struct Ge2eParams {
    double w = 10.0;
    double b = -5.0;

    void clamp() { w = std::max(w, 1e-6); }
};

namespace detail {

struct CosineParts {
    double value;       // cos(e, c)
    double e_norm, c_norm, dot_ec;
};

inline CosineParts cosine_parts(const double* e, const double* c, std::size_t d) {
    CosineParts p{};
    double ee = 0.0, cc = 0.0, ec = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
        ee += e[k] * e[k];
        cc += c[k] * c[k];
        ec += e[k] * c[k];
    }
    p.e_norm = std::max(std::sqrt(ee), 1e-12);
    p.c_norm = std::max(std::sqrt(cc), 1e-12);
    p.dot_ec = ec;
    p.value = ec / (p.e_norm * p.c_norm);
    return p;
}

}  // namespace detail

// S[j,i,k] = w cos(e_ji, c_k) + b, with the leave-one-out centroid when
// k == j. embeddings is {N, M, D}.
inline Tensor ge2e_similarity(const Tensor& embeddings, const Ge2eParams& params) {
    require(embeddings.shape.size() == 3, "dimension error");
    const std::size_t n = embeddings.shape[0], m = embeddings.shape[1],
                      d = embeddings.shape[2];
    require(n >= 2, "need >= 2 speakers");
    require(m >= 2, "need >= 2 utterances per speaker");

    // per-speaker embedding sums
    std::vector<std::vector<double>> sums(n, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            const double* e = embeddings.data.data() + (j * m + i) * d;
            for (std::size_t k = 0; k < d; ++k) sums[j][k] += e[k];
        }
    }

    Tensor sim{{n, m, n}};
    std::vector<double> centroid(d);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            const double* e = embeddings.data.data() + (j * m + i) * d;
            for (std::size_t k = 0; k < n; ++k) {
                if (k == j) {
                    const double inv = 1.0 / static_cast<double>(m - 1);
                    for (std::size_t c = 0; c < d; ++c) {
                        centroid[c] = (sums[j][c] - e[c]) * inv;
                    }
                } else {
                    const double inv = 1.0 / static_cast<double>(m);
                    for (std::size_t c = 0; c < d; ++c) centroid[c] = sums[k][c] * inv;
                }
                const auto cp = detail::cosine_parts(e, centroid.data(), d);
                sim.data[(j * m + i) * n + k] = params.w * cp.value + params.b;
            }
        }
    }
    return sim;
}

// Softmax variant: loss = sum_{j,i} [ -S[j,i,j] + log sum_k exp(S[j,i,k]) ].
inline double ge2e_loss(const Tensor& sim) {
    require(sim.shape.size() == 3 && sim.shape[0] == sim.shape[2], "dimension error");
    const std::size_t n = sim.shape[0], m = sim.shape[1];
    double loss = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            const double* row = sim.data.data() + (j * m + i) * n;
            double mx = row[0];
            for (std::size_t k = 1; k < n; ++k) mx = std::max(mx, row[k]);
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k) sum += std::exp(row[k] - mx);
            loss += -row[j] + mx + std::log(sum);
        }
    }
    return loss;
}

struct Ge2eGrads {
    Tensor d_embeddings;  // {N, M, D}
    double d_w = 0.0;
    double d_b = 0.0;
    double loss = 0.0;
};

// Loss and analytic gradients of ge2e_loss(ge2e_similarity(.)) with respect
// to the raw embeddings and to w, b. Centroid contributions (including the
// leave-one-out coupling across utterances of the same speaker) are
// accumulated explicitly.
inline Ge2eGrads ge2e_backward(const Tensor& embeddings, const Ge2eParams& params) {
    require(embeddings.shape.size() == 3, "dimension error");
    const std::size_t n = embeddings.shape[0], m = embeddings.shape[1],
                      d = embeddings.shape[2];
    require(n >= 2, "need >= 2 speakers");
    require(m >= 2, "need >= 2 utterances per speaker");

    const Tensor sim = ge2e_similarity(embeddings, params);

    Ge2eGrads g;
    g.loss = ge2e_loss(sim);
    g.d_embeddings = Tensor{{n, m, d}};

    std::vector<std::vector<double>> sums(n, std::vector<double>(d, 0.0));
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            const double* e = embeddings.data.data() + (j * m + i) * d;
            for (std::size_t k = 0; k < d; ++k) sums[j][k] += e[k];
        }
    }

    std::vector<double> centroid(d);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t i = 0; i < m; ++i) {
            const double* row = sim.data.data() + (j * m + i) * n;
            const double* e = embeddings.data.data() + (j * m + i) * d;

            double mx = row[0];
            for (std::size_t k = 1; k < n; ++k) mx = std::max(mx, row[k]);
            double denom = 0.0;
            for (std::size_t k = 0; k < n; ++k) denom += std::exp(row[k] - mx);

            for (std::size_t k = 0; k < n; ++k) {
                // dL/dS = softmax(S) - 1[k == j]
                double ds = std::exp(row[k] - mx) / denom;
                if (k == j) ds -= 1.0;
                if (ds == 0.0) continue;

                double centroid_scale;
                if (k == j) {
                    const double inv = 1.0 / static_cast<double>(m - 1);
                    for (std::size_t c = 0; c < d; ++c) {
                        centroid[c] = (sums[j][c] - e[c]) * inv;
                    }
                    centroid_scale = inv;
                } else {
                    const double inv = 1.0 / static_cast<double>(m);
                    for (std::size_t c = 0; c < d; ++c) centroid[c] = sums[k][c] * inv;
                    centroid_scale = inv;
                }

                const auto cp = detail::cosine_parts(e, centroid.data(), d);
                g.d_w += ds * cp.value;
                g.d_b += ds;

                const double dw_cos = ds * params.w;
                const double inv_ec = 1.0 / (cp.e_norm * cp.c_norm);
                // d cos/d e and d cos/d c of the general cosine
                double* de = g.d_embeddings.data.data() + (j * m + i) * d;
                for (std::size_t c = 0; c < d; ++c) {
                    de[c] += dw_cos * (centroid[c] * inv_ec -
                                       cp.value * e[c] / (cp.e_norm * cp.e_norm));
                }
                // centroid depends on the member embeddings
                for (std::size_t mem = 0; mem < m; ++mem) {
                    if (k == j && mem == i) continue;  // excluded by leave-one-out
                    double* dmem = g.d_embeddings.data.data() + (k * m + mem) * d;
                    for (std::size_t c = 0; c < d; ++c) {
                        const double dcos_dc =
                            e[c] * inv_ec -
                            cp.value * centroid[c] / (cp.c_norm * cp.c_norm);
                        dmem[c] += dw_cos * dcos_dc * centroid_scale;
                    }
                }
            }
        }
    }
    return g;
}

}  // namespace evsv::sv
