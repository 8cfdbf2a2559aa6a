#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "evsv/core/error.hpp"
#include "evsv/core/tensor.hpp"
#include "evsv/dsp/mel.hpp"
#include "evsv/nn/checkpoint.hpp"
#include "evsv/nn/layers.hpp"

namespace evsv::sv {

// L2-normalized speaker embedding.
struct DVector {
    std::vector<double> values;

    double norm() const { return l2_norm(values); }
};

struct SpeakerProfile {
    std::string speaker_id;
    DVector centroid;
    std::size_t num_enrollment_utterances = 0;
};

inline double cosine(const DVector& a, const DVector& b) {
    require(a.values.size() == b.values.size(), "dimension error");
    const double na = a.norm(), nb = b.norm();
    require(na > 0.0 && nb > 0.0, "zero-norm d-vector");
    return dot(a.values, b.values) / (na * nb);
}

struct EncoderConfig {
    std::size_t input_dim = 40;
    std::size_t lstm_layers = 2;
    std::size_t hidden_size = 96;
    std::size_t dvector_dim = 64;
};

// Multi-layer LSTM over mel frames; the d-vector is the temporal mean of the
// final projection layer, L2-normalized.
struct SpeakerEncoder {
    EncoderConfig cfg;
    std::vector<nn::LstmLayer> lstm;
    nn::DenseLayer proj;  // hidden -> dvector, linear

    static SpeakerEncoder create(const EncoderConfig& cfg, SeededRng& rng) {
        require(cfg.lstm_layers >= 1 && cfg.hidden_size >= 1 && cfg.dvector_dim >= 1,
                "invalid encoder config");
        SpeakerEncoder m;
        m.cfg = cfg;
        std::size_t in = cfg.input_dim;
        for (std::size_t l = 0; l < cfg.lstm_layers; ++l) {
            m.lstm.push_back(nn::LstmLayer::create(in, cfg.hidden_size, rng));
            in = cfg.hidden_size;
        }
        m.proj = nn::DenseLayer::create(cfg.hidden_size, cfg.dvector_dim,
                                        nn::Activation::Linear, rng);
        return m;
    }

    std::vector<Tensor*> params() {
        std::vector<Tensor*> p;
        for (auto& l : lstm) {
            p.push_back(&l.w_x);
            p.push_back(&l.w_h);
            p.push_back(&l.bias);
        }
        p.push_back(&proj.weight);
        p.push_back(&proj.bias);
        return p;
    }

    nn::Checkpoint to_checkpoint() const {
        nn::Checkpoint c;
        Tensor meta{{4}};
        meta[0] = static_cast<double>(cfg.input_dim);
        meta[1] = static_cast<double>(cfg.lstm_layers);
        meta[2] = static_cast<double>(cfg.hidden_size);
        meta[3] = static_cast<double>(cfg.dvector_dim);
        c.add("meta", meta);
        for (std::size_t l = 0; l < lstm.size(); ++l) {
            const std::string base = "lstm" + std::to_string(l);
            c.add(base + ".w_x", lstm[l].w_x);
            c.add(base + ".w_h", lstm[l].w_h);
            c.add(base + ".bias", lstm[l].bias);
        }
        c.add("proj.weight", proj.weight);
        c.add("proj.bias", proj.bias);
        return c;
    }

    static SpeakerEncoder from_checkpoint(const nn::Checkpoint& c) {
        const Tensor& meta = c.get("meta");
        require(meta.size() == 4, "invalid encoder checkpoint");
        EncoderConfig cfg;
        cfg.input_dim = static_cast<std::size_t>(meta[0]);
        cfg.lstm_layers = static_cast<std::size_t>(meta[1]);
        cfg.hidden_size = static_cast<std::size_t>(meta[2]);
        cfg.dvector_dim = static_cast<std::size_t>(meta[3]);
        SpeakerEncoder m;
        m.cfg = cfg;
        for (std::size_t l = 0; l < cfg.lstm_layers; ++l) {
            const std::string base = "lstm" + std::to_string(l);
            nn::LstmLayer layer;
            layer.hidden = cfg.hidden_size;
            layer.w_x = c.get(base + ".w_x");
            layer.w_h = c.get(base + ".w_h");
            layer.bias = c.get(base + ".bias");
            m.lstm.push_back(std::move(layer));
        }
        m.proj.activation = nn::Activation::Linear;
        m.proj.weight = c.get("proj.weight");
        m.proj.bias = c.get("proj.bias");
        return m;
    }
};

struct EncoderForwardCache {
    std::vector<nn::LstmCache> lstm_caches;
    nn::DenseCache proj_cache;
    Tensor mean;    // B x H
    Tensor v;       // B x D pre-normalization
    Tensor e;       // B x D unit rows
    std::size_t steps = 0, batch = 0;
};

// x is time-major {T, B, input_dim}; returns unit-norm embeddings {B, D}.
inline Tensor encoder_forward(const SpeakerEncoder& m, const Tensor& x,
                              EncoderForwardCache* cache = nullptr) {
    require(x.shape.size() == 3 && x.shape[2] == m.cfg.input_dim, "dimension error");
    require(x.shape[0] >= 1, "dimension error");
    const std::size_t steps = x.shape[0], batch = x.shape[1];
    const std::size_t hid = m.cfg.hidden_size;

    if (cache) {
        cache->lstm_caches.assign(m.lstm.size(), nn::LstmCache{});
        cache->steps = steps;
        cache->batch = batch;
    }
    Tensor h = x;
    for (std::size_t l = 0; l < m.lstm.size(); ++l) {
        h = nn::lstm_forward(m.lstm[l], h, cache ? &cache->lstm_caches[l] : nullptr);
    }

    Tensor mean{{batch, hid}};
    for (std::size_t t = 0; t < steps; ++t) {
        const double* src = h.data.data() + t * batch * hid;
        for (std::size_t i = 0; i < batch * hid; ++i) mean[i] += src[i];
    }
    for (double& v : mean.data) v /= static_cast<double>(steps);

    Tensor v = nn::dense_forward(m.proj, mean, cache ? &cache->proj_cache : nullptr);

    Tensor e{{batch, m.cfg.dvector_dim}};
    for (std::size_t b = 0; b < batch; ++b) {
        const double* vr = v.data.data() + b * m.cfg.dvector_dim;
        double* er = e.data.data() + b * m.cfg.dvector_dim;
        double sq = 0.0;
        for (std::size_t k = 0; k < m.cfg.dvector_dim; ++k) sq += vr[k] * vr[k];
        const double norm = std::max(std::sqrt(sq), 1e-12);
        for (std::size_t k = 0; k < m.cfg.dvector_dim; ++k) er[k] = vr[k] / norm;
    }
    if (cache) {
        cache->mean = std::move(mean);
        cache->v = std::move(v);
        cache->e = e;
    }
    return e;
}

struct EncoderGrads {
    std::vector<Tensor> tensors;  // aligned with SpeakerEncoder::params()

    std::vector<const Tensor*> as_ptrs() const {
        std::vector<const Tensor*> p;
        for (const auto& t : tensors) p.push_back(&t);
        return p;
    }

    std::vector<Tensor*> as_mutable_ptrs() {
        std::vector<Tensor*> p;
        for (auto& t : tensors) p.push_back(&t);
        return p;
    }
};

// Backward through normalization, projection, temporal mean, and the LSTM
// stack. d_e is the upstream gradient on the unit embeddings {B, D}.
inline EncoderGrads encoder_backward(const SpeakerEncoder& m,
                                     const EncoderForwardCache& cache,
                                     const Tensor& d_e) {
    const std::size_t batch = cache.batch, steps = cache.steps;
    const std::size_t dim = m.cfg.dvector_dim, hid = m.cfg.hidden_size;
    require(d_e.rows() == batch && d_e.cols() == dim, "dimension error");

    // y = v / |v| :  dv = (dy - y (dy . y)) / |v|
    Tensor d_v{{batch, dim}};
    for (std::size_t b = 0; b < batch; ++b) {
        const double* vr = cache.v.data.data() + b * dim;
        const double* er = cache.e.data.data() + b * dim;
        const double* dy = d_e.data.data() + b * dim;
        double* dv = d_v.data.data() + b * dim;
        double sq = 0.0;
        for (std::size_t k = 0; k < dim; ++k) sq += vr[k] * vr[k];
        const double norm = std::max(std::sqrt(sq), 1e-12);
        double proj = 0.0;
        for (std::size_t k = 0; k < dim; ++k) proj += dy[k] * er[k];
        for (std::size_t k = 0; k < dim; ++k) {
            dv[k] = (dy[k] - er[k] * proj) / norm;
        }
    }

    auto proj_grads = nn::dense_backward(m.proj, cache.proj_cache, d_v);

    Tensor d_h_all{{steps, batch, hid}};
    const double inv_steps = 1.0 / static_cast<double>(steps);
    for (std::size_t t = 0; t < steps; ++t) {
        double* dst = d_h_all.data.data() + t * batch * hid;
        for (std::size_t i = 0; i < batch * hid; ++i) {
            dst[i] = proj_grads.d_input[i] * inv_steps;
        }
    }

    std::vector<nn::LstmGrads> lstm_grads(m.lstm.size());
    Tensor upstream = std::move(d_h_all);
    for (std::size_t l = m.lstm.size(); l-- > 0;) {
        lstm_grads[l] = nn::lstm_backward(m.lstm[l], cache.lstm_caches[l], upstream);
        upstream = std::move(lstm_grads[l].d_input);
    }

    EncoderGrads g;
    for (std::size_t l = 0; l < m.lstm.size(); ++l) {
        g.tensors.push_back(std::move(lstm_grads[l].d_wx));
        g.tensors.push_back(std::move(lstm_grads[l].d_wh));
        g.tensors.push_back(std::move(lstm_grads[l].d_bias));
    }
    g.tensors.push_back(std::move(proj_grads.d_weight));
    g.tensors.push_back(std::move(proj_grads.d_bias));
    return g;
}

// Mel frames packed time-major for a batch of one.
inline Tensor mel_to_input(const dsp::MelSpectrogram& mel) {
    require(mel.num_frames() >= 1, "dimension error");
    Tensor x{{mel.num_frames(), 1, dsp::kMelBands}};
    for (std::size_t t = 0; t < mel.num_frames(); ++t) {
        require(mel.frames[t].size() == dsp::kMelBands, "dimension error");
        std::copy(mel.frames[t].begin(), mel.frames[t].end(),
                  x.data.data() + t * dsp::kMelBands);
    }
    return x;
}

inline DVector embed(const SpeakerEncoder& m, const dsp::MelSpectrogram& mel) {
    const Tensor e = encoder_forward(m, mel_to_input(mel));
    DVector d;
    d.values.assign(e.data.begin(), e.data.end());
    return d;
}

inline SpeakerProfile enroll(const SpeakerEncoder& m, const std::string& speaker_id,
                             const std::vector<dsp::MelSpectrogram>& utterances) {
    require(!utterances.empty(), "empty enrollment");
    SpeakerProfile p;
    p.speaker_id = speaker_id;
    p.num_enrollment_utterances = utterances.size();
    p.centroid.values.assign(m.cfg.dvector_dim, 0.0);
    for (const auto& mel : utterances) {
        const DVector d = embed(m, mel);
        for (std::size_t k = 0; k < d.values.size(); ++k) {
            p.centroid.values[k] += d.values[k];
        }
    }
    const double norm = std::max(p.centroid.norm(), 1e-12);
    for (double& v : p.centroid.values) v /= norm;
    return p;
}

inline double verify(const SpeakerEncoder& m, const SpeakerProfile& profile,
                     const dsp::MelSpectrogram& utterance) {
    require(profile.centroid.values.size() == m.cfg.dvector_dim, "dimension error");
    return cosine(profile.centroid, embed(m, utterance));
}

}  // namespace evsv::sv
