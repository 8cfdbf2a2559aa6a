#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "evsv/nn/gradcheck.hpp"
#include "evsv/sv/encoder.hpp"
#include "evsv/sv/ge2e.hpp"
#include "evsv/sv/train.hpp"

using namespace evsv;
using namespace evsv::sv;

namespace {

// N=2, M=2 batch with orthogonal speakers
Tensor orthogonal_batch() {
    Tensor e{{2, 2, 2}};
    e.data = {1, 0, 1, 0,   // speaker 0: [1,0], [1,0]
              0, 1, 0, 1};  // speaker 1: [0,1], [0,1]
    return e;
}

dsp::MelSpectrogram fake_mel(std::uint64_t seed, std::size_t frames,
                             const std::vector<double>& mean) {
    SeededRng rng(seed);
    dsp::MelSpectrogram mel;
    mel.frames.resize(frames);
    for (auto& f : mel.frames) {
        f.resize(dsp::kMelBands);
        for (std::size_t b = 0; b < dsp::kMelBands; ++b) {
            f[b] = mean[b] + rng.normal(0.0, 0.3);
        }
    }
    return mel;
}

std::vector<double> speaker_mean(std::uint64_t seed) {
    SeededRng rng(seed);
    std::vector<double> m(dsp::kMelBands);
    for (auto& v : m) v = rng.normal(0.0, 1.0);
    return m;
}

}  // namespace

TEST_CASE("similarity of orthogonal speakers") {
    Ge2eParams p;
    p.w = 1.0;
    p.b = 0.0;
    auto sim = ge2e_similarity(orthogonal_batch(), p);
    // own-speaker similarity 1 (leave-one-out centroid is the twin utterance)
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(sim.data[(0 * 2 + i) * 2 + 0] == Catch::Approx(1.0));
        CHECK(sim.data[(0 * 2 + i) * 2 + 1] == Catch::Approx(0.0).margin(1e-12));
        CHECK(sim.data[(1 * 2 + i) * 2 + 1] == Catch::Approx(1.0));
        CHECK(sim.data[(1 * 2 + i) * 2 + 0] == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("identical embeddings give similarity 1 everywhere") {
    Tensor e{{3, 2, 4}};
    for (std::size_t b = 0; b < 6; ++b) {
        e.data[b * 4 + 0] = 1.0;  // all embeddings [1,0,0,0]
    }
    Ge2eParams p;
    p.w = 1.0;
    p.b = 0.0;
    auto sim = ge2e_similarity(e, p);
    for (double v : sim.data) CHECK(v == Catch::Approx(1.0));
}

TEST_CASE("similarity is linear in w") {
    SeededRng rng(3);
    Tensor e{{2, 3, 5}};
    e.randomize_uniform(rng, -1, 1);
    Ge2eParams p1{1.0, 0.0}, p2{2.0, 0.0};
    auto s1 = ge2e_similarity(e, p1);
    auto s2 = ge2e_similarity(e, p2);
    for (std::size_t i = 0; i < s1.size(); ++i) {
        CHECK(s2[i] == Catch::Approx(2.0 * s1[i]).margin(1e-12));
    }
}

TEST_CASE("leave-one-out centroid at M=2 is the twin utterance") {
    SeededRng rng(9);
    Tensor e{{2, 2, 6}};
    e.randomize_uniform(rng, -1, 1);
    Ge2eParams p{1.0, 0.0};
    auto sim = ge2e_similarity(e, p);
    // S[j,0,j] must equal cos(e_j0, e_j1) computed directly
    for (std::size_t j = 0; j < 2; ++j) {
        DVector a, b;
        a.values.assign(e.data.begin() + (j * 2 + 0) * 6,
                        e.data.begin() + (j * 2 + 0) * 6 + 6);
        b.values.assign(e.data.begin() + (j * 2 + 1) * 6,
                        e.data.begin() + (j * 2 + 1) * 6 + 6);
        CHECK(sim.data[(j * 2 + 0) * 2 + j] == Catch::Approx(cosine(a, b)));
    }
}

TEST_CASE("ge2e_loss on the orthogonal example") {
    Ge2eParams p{1.0, 0.0};
    auto sim = ge2e_similarity(orthogonal_batch(), p);
    // hand evaluation: each of the 4 terms is log(1 + e^-1)
    const double expected = 4.0 * std::log(1.0 + std::exp(-1.0));
    CHECK(ge2e_loss(sim) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("uniform similarities give N*M*log(N)") {
    Tensor sim{{4, 3, 4}};
    sim.fill(0.37);
    CHECK(ge2e_loss(sim) == Catch::Approx(12.0 * std::log(4.0)).epsilon(1e-12));
}

TEST_CASE("raising the own-speaker similarity lowers the loss") {
    SeededRng rng(4);
    Tensor sim{{3, 2, 3}};
    sim.randomize_uniform(rng, -1, 1);
    const double base = ge2e_loss(sim);
    Tensor bumped = sim;
    bumped.data[(1 * 2 + 0) * 3 + 1] += 0.25;  // S[1,0,1]
    CHECK(ge2e_loss(bumped) < base);
}

TEST_CASE("ge2e gradients (embeddings, w, b) match finite differences") {
    SeededRng rng(11);
    Tensor e{{3, 3, 4}};
    e.randomize_uniform(rng, -1, 1);
    // normalize rows as the encoder would
    for (std::size_t r = 0; r < 9; ++r) {
        double sq = 0.0;
        for (std::size_t k = 0; k < 4; ++k) sq += e.data[r * 4 + k] * e.data[r * 4 + k];
        for (std::size_t k = 0; k < 4; ++k) e.data[r * 4 + k] /= std::sqrt(sq);
    }
    Tensor w{{1}}, b{{1}};
    w[0] = 7.0;
    b[0] = -3.0;

    auto loss_fn = [&]() {
        Ge2eParams p{w[0], b[0]};
        return ge2e_loss(ge2e_similarity(e, p));
    };
    auto grads = ge2e_backward(e, Ge2eParams{w[0], b[0]});
    Tensor dw{{1}}, db{{1}};
    dw[0] = grads.d_w;
    db[0] = grads.d_b;

    const double err = nn::grad_check(loss_fn, {&e, &w, &b},
                                      {&grads.d_embeddings, &dw, &db});
    CHECK(err < 1e-3);
}

TEST_CASE("ge2e requires at least two speakers") {
    Tensor e{{1, 3, 4}};
    CHECK_THROWS_WITH(ge2e_similarity(e, Ge2eParams{}),
                      Catch::Matchers::ContainsSubstring("need >= 2 speakers"));
}

TEST_CASE("full GE2E loss through the LSTM encoder passes the gradient check") {
    SeededRng rng(21);
    EncoderConfig cfg;
    cfg.input_dim = 4;
    cfg.lstm_layers = 2;
    cfg.hidden_size = 5;
    cfg.dvector_dim = 3;
    auto model = SpeakerEncoder::create(cfg, rng);
    // keep pre-normalization norms O(1) so the finite-difference oracle
    // stays in its accurate regime
    for (double& v : model.proj.weight.data) v *= 4.0;

    // 2 speakers x 2 utterances, 6 frames each
    Tensor x{{6, 4, 4}};
    x.randomize_uniform(rng, -1, 1);
    Ge2eParams ge2e;

    auto loss_fn = [&]() {
        Tensor e = encoder_forward(model, x);
        e.shape = {2, 2, cfg.dvector_dim};
        return ge2e_loss(ge2e_similarity(e, ge2e));
    };

    EncoderForwardCache cache;
    Tensor e = encoder_forward(model, x, &cache);
    e.shape = {2, 2, cfg.dvector_dim};
    auto ge2e_grads = ge2e_backward(e, ge2e);
    Tensor d_e = std::move(ge2e_grads.d_embeddings);
    d_e.shape = {4, cfg.dvector_dim};
    auto grads = encoder_backward(model, cache, d_e);

    const double err =
        nn::grad_check(loss_fn, model.params(), grads.as_ptrs());
    CHECK(err < 1e-3);
}

TEST_CASE("embeddings are unit norm and deterministic") {
    SeededRng rng(31);
    auto model = SpeakerEncoder::create(EncoderConfig{40, 1, 8, 6}, rng);
    auto mel = fake_mel(5, 30, speaker_mean(1));
    auto d1 = embed(model, mel);
    auto d2 = embed(model, mel);
    CHECK(d1.norm() == Catch::Approx(1.0).margin(1e-6));
    CHECK(d1.values == d2.values);

    // frame order matters to an LSTM
    auto reversed = mel;
    std::reverse(reversed.frames.begin(), reversed.frames.end());
    auto d3 = embed(model, reversed);
    CHECK(cosine(d1, d3) < 1.0 - 1e-6);
}

TEST_CASE("enrollment averaging") {
    SeededRng rng(33);
    auto model = SpeakerEncoder::create(EncoderConfig{40, 1, 8, 6}, rng);
    auto mel_a = fake_mel(6, 25, speaker_mean(2));
    auto mel_b = fake_mel(7, 25, speaker_mean(2));

    auto single = enroll(model, "s", {mel_a});
    auto d = embed(model, mel_a);
    for (std::size_t k = 0; k < d.values.size(); ++k) {
        CHECK(single.centroid.values[k] == Catch::Approx(d.values[k]).margin(1e-9));
    }

    auto twice = enroll(model, "s", {mel_a, mel_a});
    for (std::size_t k = 0; k < d.values.size(); ++k) {
        CHECK(twice.centroid.values[k] == Catch::Approx(d.values[k]).margin(1e-9));
    }

    auto ab = enroll(model, "s", {mel_a, mel_b});
    auto ba = enroll(model, "s", {mel_b, mel_a});
    for (std::size_t k = 0; k < ab.centroid.values.size(); ++k) {
        CHECK(ab.centroid.values[k] == Catch::Approx(ba.centroid.values[k]).margin(1e-12));
    }

    CHECK_THROWS_WITH(enroll(model, "s", {}),
                      Catch::Matchers::ContainsSubstring("empty enrollment"));
}

TEST_CASE("verification scores") {
    SeededRng rng(35);
    auto model = SpeakerEncoder::create(EncoderConfig{40, 1, 8, 6}, rng);
    auto mel = fake_mel(8, 25, speaker_mean(3));
    auto prof = enroll(model, "s", {mel});
    CHECK(verify(model, prof, mel) == Catch::Approx(1.0).margin(1e-6));

    // hand-built orthogonal centroid/embedding
    DVector a, b;
    a.values = {1, 0, 0};
    b.values = {0, 1, 0};
    CHECK(cosine(a, b) == 0.0);
    CHECK(cosine(a, b) >= -1.0);

    // scores stay in [-1, 1]
    for (std::uint64_t s = 0; s < 5; ++s) {
        auto other = fake_mel(100 + s, 25, speaker_mean(50 + s));
        const double score = verify(model, prof, other);
        CHECK(score <= 1.0 + 1e-12);
        CHECK(score >= -1.0 - 1e-12);
    }
}

TEST_CASE("train_sv learns a toy corpus and is reproducible") {
    // 12 speakers x 20 utterances of cluster-mean mel frames
    std::vector<SpeakerUtterances> train_data;
    for (int s = 0; s < 12; ++s) {
        SpeakerUtterances spk;
        spk.speaker_id = "spk" + std::to_string(s);
        const auto mean = speaker_mean(1000 + s);
        for (int u = 0; u < 20; ++u) {
            spk.mels.push_back(fake_mel(2000 + s * 100 + u, 25, mean));
        }
        train_data.push_back(std::move(spk));
    }

    SvTrainConfig cfg;
    cfg.batch_speakers = 8;
    cfg.utts_per_speaker = 4;
    cfg.encoder = EncoderConfig{40, 1, 12, 8};
    cfg.max_iterations = 300;
    cfg.crop_frames = 20;
    cfg.eval_every = 0;

    auto result = train_sv(train_data, {}, cfg, 42);
    REQUIRE(result.log.size() == 300);
    double head = 0.0, tail = 0.0;
    for (int i = 0; i < 100; ++i) head += result.log[i].loss / 100.0;
    for (int i = 200; i < 300; ++i) tail += result.log[i].loss / 100.0;
    CHECK(tail < head);

    auto result2 = train_sv(train_data, {}, cfg, 42);
    CHECK(nn::checkpoint_hash(sv_checkpoint(result.model, result.ge2e)) ==
          nn::checkpoint_hash(sv_checkpoint(result2.model, result2.ge2e)));

    auto result3 = train_sv(train_data, {}, cfg, 43);
    CHECK(nn::checkpoint_hash(sv_checkpoint(result.model, result.ge2e)) !=
          nn::checkpoint_hash(sv_checkpoint(result3.model, result3.ge2e)));
}

TEST_CASE("train_sv rejects an undersized corpus") {
    std::vector<SpeakerUtterances> small;
    for (int s = 0; s < 4; ++s) {
        SpeakerUtterances spk;
        spk.speaker_id = "s" + std::to_string(s);
        const auto mean = speaker_mean(s);
        for (int u = 0; u < 5; ++u) spk.mels.push_back(fake_mel(s * 10 + u, 20, mean));
        small.push_back(std::move(spk));
    }
    SvTrainConfig cfg;
    cfg.batch_speakers = 8;
    cfg.utts_per_speaker = 4;
    cfg.encoder = EncoderConfig{40, 1, 8, 6};
    CHECK_THROWS_WITH(train_sv(small, {}, cfg, 1),
                      Catch::Matchers::ContainsSubstring("corpus too small"));
}
