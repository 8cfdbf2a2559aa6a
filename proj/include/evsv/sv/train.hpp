#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "evsv/core/error.hpp"
#include "evsv/core/rng.hpp"
#include "evsv/eval/eer.hpp"
#include "evsv/nn/adam.hpp"
#include "evsv/sv/encoder.hpp"
#include "evsv/sv/ge2e.hpp"

namespace evsv::sv {

struct SpeakerUtterances {
    std::string speaker_id;
    std::vector<dsp::MelSpectrogram> mels;
};

struct SvTrainConfig {
    std::size_t batch_speakers = 32;    // N (paper preset)
    std::size_t utts_per_speaker = 5;   // M (paper preset)
    EncoderConfig encoder;
    nn::AdamConfig optimizer;           // desk-scale default lr 1e-3;
                                        // nn::paper_schedule() for the paper values
    std::size_t max_iterations = 2000;
    std::size_t crop_frames = 100;      // fixed window per batch element
    double clip_norm = 5.0;
    double wb_grad_scale = 0.01;        // damps the loss scale/offset updates
    std::size_t eval_every = 50;
    std::size_t patience = 0;           // eval checks without improvement; 0 = off
};

struct SvTrainLogRow {
    std::size_t iter = 0;
    double loss = 0.0;
    double lr = 0.0;
    double val_eer = -1.0;  // < 0 when not evaluated at this iteration
};

struct SvTrainResult {
    SpeakerEncoder model;
    Ge2eParams ge2e;
    std::vector<SvTrainLogRow> log;
    std::size_t iterations_run = 0;
    double best_val_eer = std::numeric_limits<double>::quiet_NaN();
};

namespace detail {

// Random fixed-length crop; shorter inputs wrap around.
inline void fill_crop(const dsp::MelSpectrogram& mel, std::size_t crop,
                      std::size_t batch_index, std::size_t batch_size,
                      SeededRng& rng, Tensor& x) {
    const std::size_t t_frames = mel.num_frames();
    std::size_t start = 0;
    if (t_frames > crop) {
        start = rng.uniform_int(t_frames - crop + 1);
    }
    for (std::size_t t = 0; t < crop; ++t) {
        const auto& row = mel.frames[(start + t) % t_frames];
        double* dst = x.data.data() +
                      (t * batch_size + batch_index) * dsp::kMelBands;
        std::copy(row.begin(), row.end(), dst);
    }
}

}  // namespace detail

// EER over held-out speakers: first half of each speaker's utterances
// enrolls a profile, the rest are scored against every profile.
inline double validation_eer(const SpeakerEncoder& model,
                             const std::vector<SpeakerUtterances>& speakers) {
    std::vector<SpeakerProfile> profiles;
    std::vector<std::pair<std::string, DVector>> tests;
    for (const auto& spk : speakers) {
        if (spk.mels.size() < 2) continue;
        const std::size_t n_enroll = (spk.mels.size() + 1) / 2;
        std::vector<dsp::MelSpectrogram> enroll_mels(spk.mels.begin(),
                                                     spk.mels.begin() + n_enroll);
        profiles.push_back(enroll(model, spk.speaker_id, enroll_mels));
        for (std::size_t i = n_enroll; i < spk.mels.size(); ++i) {
            tests.emplace_back(spk.speaker_id, embed(model, spk.mels[i]));
        }
    }
    require(profiles.size() >= 2, "degenerate trial set");
    eval::TrialScoreSet scores;
    for (const auto& [spk_id, dvec] : tests) {
        for (const auto& prof : profiles) {
            scores.add(prof.speaker_id, spk_id, eval::Emotion::Neutral,
                       cosine(prof.centroid, dvec));
        }
    }
    return eval::compute_eer(scores).eer;
}

inline SvTrainResult train_sv(const std::vector<SpeakerUtterances>& train,
                              const std::vector<SpeakerUtterances>& validation,
                              const SvTrainConfig& cfg, std::uint64_t seed) {
    const std::size_t n = cfg.batch_speakers, m = cfg.utts_per_speaker;
    std::vector<std::size_t> eligible;
    for (std::size_t s = 0; s < train.size(); ++s) {
        if (train[s].mels.size() >= m) eligible.push_back(s);
    }
    require(eligible.size() >= n && n >= 2 && m >= 2,
            "corpus too small for N×M batch");

    SeededRng rng(seed);
    SvTrainResult result;
    result.model = SpeakerEncoder::create(cfg.encoder, rng);
    result.ge2e = Ge2eParams{};

    Tensor w_param{{1}}, b_param{{1}};
    w_param[0] = result.ge2e.w;
    b_param[0] = result.ge2e.b;

    auto params = result.model.params();
    params.push_back(&w_param);
    params.push_back(&b_param);
    nn::AdamState opt;
    opt.init(params, cfg.optimizer);

    auto snapshot = [&]() {
        std::vector<Tensor> copy;
        for (Tensor* p : params) copy.push_back(*p);
        return copy;
    };
    auto restore = [&](const std::vector<Tensor>& saved) {
        for (std::size_t i = 0; i < params.size(); ++i) *params[i] = saved[i];
    };

    std::vector<Tensor> best_params;
    double best_eer = std::numeric_limits<double>::infinity();
    std::size_t since_best = 0;
    const bool early_stop = cfg.patience > 0 && !validation.empty();

    Tensor x{{cfg.crop_frames, n * m, dsp::kMelBands}};
    std::vector<std::size_t> speaker_order;
    std::vector<std::size_t> utt_order;

    std::size_t iter = 0;
    for (; iter < cfg.max_iterations; ++iter) {
        speaker_order = eligible;
        rng.shuffle(speaker_order);
        for (std::size_t sj = 0; sj < n; ++sj) {
            const auto& spk = train[speaker_order[sj]];
            utt_order.resize(spk.mels.size());
            for (std::size_t u = 0; u < utt_order.size(); ++u) utt_order[u] = u;
            rng.shuffle(utt_order);
            for (std::size_t ui = 0; ui < m; ++ui) {
                detail::fill_crop(spk.mels[utt_order[ui]], cfg.crop_frames,
                                  sj * m + ui, n * m, rng, x);
            }
        }

        EncoderForwardCache cache;
        Tensor e = encoder_forward(result.model, x, &cache);
        e.shape = {n, m, cfg.encoder.dvector_dim};
        auto ge2e_grads = ge2e_backward(e, result.ge2e);

        Tensor d_e = std::move(ge2e_grads.d_embeddings);
        d_e.shape = {n * m, cfg.encoder.dvector_dim};
        auto model_grads = encoder_backward(result.model, cache, d_e);

        Tensor d_w{{1}}, d_b{{1}};
        d_w[0] = ge2e_grads.d_w * cfg.wb_grad_scale;
        d_b[0] = ge2e_grads.d_b * cfg.wb_grad_scale;
        auto grad_ptrs = model_grads.as_mutable_ptrs();
        grad_ptrs.push_back(&d_w);
        grad_ptrs.push_back(&d_b);
        nn::clip_gradients(grad_ptrs, cfg.clip_norm);

        std::vector<const Tensor*> const_grads(grad_ptrs.begin(), grad_ptrs.end());
        nn::adam_step(opt, params, const_grads);
        result.ge2e.w = w_param[0];
        result.ge2e.b = b_param[0];
        result.ge2e.clamp();
        w_param[0] = result.ge2e.w;

        SvTrainLogRow row;
        row.iter = iter;
        row.loss = ge2e_grads.loss;
        row.lr = effective_lr(opt);

        if (!validation.empty() && cfg.eval_every > 0 &&
            (iter + 1) % cfg.eval_every == 0) {
            row.val_eer = validation_eer(result.model, validation);
            if (early_stop) {
                if (row.val_eer < best_eer - 1e-12) {
                    best_eer = row.val_eer;
                    best_params = snapshot();
                    since_best = 0;
                } else if (++since_best >= cfg.patience) {
                    result.log.push_back(row);
                    ++iter;
                    break;
                }
            }
        }
        result.log.push_back(row);
    }

    if (early_stop && !best_params.empty()) {
        restore(best_params);
        result.ge2e.w = w_param[0];
        result.ge2e.b = b_param[0];
        result.best_val_eer = best_eer;
    }
    result.iterations_run = iter;
    return result;
}

// Encoder plus GE2E scale/offset, for saving one artifact per trained model.
inline nn::Checkpoint sv_checkpoint(const SpeakerEncoder& model,
                                    const Ge2eParams& ge2e) {
    nn::Checkpoint c = model.to_checkpoint();
    Tensor wb{{2}};
    wb[0] = ge2e.w;
    wb[1] = ge2e.b;
    c.add("ge2e.wb", wb);
    return c;
}

}  // namespace evsv::sv
