#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "evsv/dsp/fft.hpp"
#include "evsv/dsp/feature_io.hpp"
#include "evsv/dsp/mcep.hpp"
#include "evsv/dsp/mel.hpp"
#include "evsv/dsp/pitch.hpp"
#include "evsv/dsp/synth.hpp"
#include "evsv/dsp/wav.hpp"
#include "test_util.hpp"

using namespace evsv;
using namespace evsv::dsp;

TEST_CASE("frame_signal frame count and windowing") {
    Waveform w = testutil::sine(100.0, 1.0);  // 16000 samples
    auto frames = frame_signal(w, 25.0, 10.0);
    CHECK(frames.size() == 98);  // floor((16000-400)/160)+1
    CHECK(frames[0].size() == 400);
    // Hann endpoints are zero
    CHECK(frames[0][0] == 0.0);
    CHECK(frames[0][399] == 0.0);

    Waveform one;
    one.sample_rate_hz = 16000;
    one.samples.assign(400, 0.1);
    CHECK(frame_signal(one, 25.0, 10.0).size() == 1);

    Waveform tiny;
    tiny.sample_rate_hz = 16000;
    tiny.samples.assign(100, 0.1);
    CHECK_THROWS_WITH(frame_signal(tiny, 25.0, 10.0),
                      Catch::Matchers::ContainsSubstring("utterance too short"));
}

TEST_CASE("fft matches naive dft") {
    SeededRng rng(11);
    const std::size_t n = 64;
    std::vector<std::complex<double>> a(n);
    for (auto& v : a) v = {rng.uniform(-1, 1), rng.uniform(-1, 1)};
    auto b = a;
    fft(b);
    for (std::size_t k = 0; k < n; ++k) {
        std::complex<double> ref(0, 0);
        for (std::size_t t = 0; t < n; ++t) {
            const double ang = -2.0 * M_PI * k * t / n;
            ref += a[t] * std::complex<double>(std::cos(ang), std::sin(ang));
        }
        CHECK(std::abs(b[k] - ref) < 1e-9);
    }
    // round trip
    fft(b, true);
    for (std::size_t t = 0; t < n; ++t) CHECK(std::abs(b[t] - a[t]) < 1e-12);
}

TEST_CASE("mel_spectrogram dimensions and floor") {
    Waveform w = testutil::sine(440.0, 1.0);
    auto mel = mel_spectrogram(w);
    REQUIRE(mel.num_frames() >= 1);
    for (const auto& f : mel.frames) CHECK(f.size() == 40);

    auto silent = mel_spectrogram(testutil::silence(0.5));
    const double floor_val = std::log(1e-10);
    for (const auto& f : silent.frames) {
        for (double v : f) CHECK(v == Catch::Approx(floor_val).margin(1e-12));
    }
}

TEST_CASE("mel bin ordering follows frequency") {
    auto mel440 = mel_spectrogram(testutil::sine(440.0, 1.0));
    auto mel220 = mel_spectrogram(testutil::sine(220.0, 1.0));
    auto argmax = [](const std::vector<double>& v) {
        return std::distance(v.begin(), std::max_element(v.begin(), v.end()));
    };
    CHECK(argmax(mel440.frames[10]) > argmax(mel220.frames[10]));
}

TEST_CASE("mel determinism") {
    Waveform w = testutil::white_noise(0.7, 99);
    auto a = mel_spectrogram(w);
    auto b = mel_spectrogram(w);
    REQUIRE(a.num_frames() == b.num_frames());
    for (std::size_t t = 0; t < a.num_frames(); ++t) {
        CHECK(a.frames[t] == b.frames[t]);
    }
}

TEST_CASE("estimate_f0 on a pure tone") {
    Waveform w = testutil::sine(220.0, 1.0);
    auto c = estimate_f0(w);
    const double voiced_rate =
        static_cast<double>(c.num_voiced()) / static_cast<double>(c.num_frames());
    CHECK(voiced_rate >= 0.9);
    CHECK(c.median_voiced_f0() == Catch::Approx(220.0).margin(5.0));
    for (std::size_t t = 0; t < c.num_frames(); ++t) {
        if (c.voiced[t]) {
            CHECK(c.f0_hz[t] >= 50.0);
            CHECK(c.f0_hz[t] <= 600.0);
        } else {
            CHECK(c.f0_hz[t] == 0.0);
        }
    }
}

TEST_CASE("estimate_f0 marks noise unvoiced") {
    // threshold frozen after running the tracker on seeded noise
    Waveform w = testutil::white_noise(1.0, 4242);
    auto c = estimate_f0(w);
    const double unvoiced_rate =
        1.0 - static_cast<double>(c.num_voiced()) / static_cast<double>(c.num_frames());
    CHECK(unvoiced_rate >= 0.8);
}

TEST_CASE("estimate_f0 on silence") {
    auto c = estimate_f0(testutil::silence(0.5));
    CHECK(c.num_voiced() == 0);
    for (double v : c.f0_hz) CHECK(v == 0.0);
}

TEST_CASE("estimate_f0 is amplitude invariant") {
    Waveform w = testutil::sine(173.0, 0.8);
    auto base = estimate_f0(w);
    for (double a : {0.5, 0.1, 0.013}) {
        Waveform scaled = w;
        for (double& s : scaled.samples) s *= a;
        auto c = estimate_f0(scaled);
        REQUIRE(c.num_frames() == base.num_frames());
        for (std::size_t t = 0; t < c.num_frames(); ++t) {
            CHECK(c.voiced[t] == base.voiced[t]);
            CHECK(c.f0_hz[t] == Catch::Approx(base.f0_hz[t]).margin(1e-6));
        }
    }
}

TEST_CASE("mcep dimensions and silence") {
    auto m = mcep_analyze(testutil::sine(200.0, 0.5));
    REQUIRE(m.num_frames() >= 1);
    for (const auto& f : m.coeffs) CHECK(f.size() == 24);

    auto s = mcep_analyze(testutil::silence(0.5));
    const double c0_expected = std::sqrt(40.0) * std::log(1e-10);
    for (const auto& f : s.coeffs) {
        CHECK(f[0] == Catch::Approx(c0_expected).margin(1e-9));
        for (std::size_t k = 1; k < f.size(); ++k) {
            CHECK(f[k] == Catch::Approx(0.0).margin(1e-9));
        }
    }
}

TEST_CASE("mcep separates sine from noise") {
    // distance recorded from seeded signals before freezing the threshold
    auto ms = mcep_analyze(testutil::sine(250.0, 1.0));
    auto mn = mcep_analyze(testutil::white_noise(1.0, 7));
    std::vector<double> mean_s(24, 0.0), mean_n(24, 0.0);
    for (const auto& f : ms.coeffs)
        for (std::size_t k = 0; k < 24; ++k) mean_s[k] += f[k] / ms.num_frames();
    for (const auto& f : mn.coeffs)
        for (std::size_t k = 0; k < 24; ++k) mean_n[k] += f[k] / mn.num_frames();
    double d2 = 0.0;
    for (std::size_t k = 0; k < 24; ++k) {
        d2 += (mean_s[k] - mean_n[k]) * (mean_s[k] - mean_n[k]);
    }
    CHECK(std::sqrt(d2) > 0.1);
}

TEST_CASE("synthesize round-trips the F0 track") {
    Waveform src = testutil::sine(200.0, 1.0);
    auto mc = mcep_analyze(src);
    for (int i = 0; i < 10; ++i) {
        auto contour = testutil::smooth_contour(mc.num_frames(), 1000 + i, 180.0,
                                                /*hop_ms=*/10.0);
        auto w = synthesize(mc, contour);
        auto back = estimate_f0(w);
        const double med_in = contour.median_voiced_f0();
        const double med_out = back.median_voiced_f0();
        CHECK(std::fabs(med_out - med_in) / med_in < 0.10);
    }
}

TEST_CASE("synthesize with all-unvoiced contour gives noise") {
    auto mc = mcep_analyze(testutil::white_noise(1.0, 3));
    F0Contour c;
    c.hop_ms = 10.0;
    c.f0_hz.assign(mc.num_frames(), 0.0);
    c.voiced.assign(mc.num_frames(), false);
    auto w = synthesize(mc, c);
    auto back = estimate_f0(w);
    const double unvoiced_rate =
        1.0 - static_cast<double>(back.num_voiced()) /
                  static_cast<double>(back.num_frames());
    CHECK(unvoiced_rate >= 0.8);
}

TEST_CASE("synthesize rejects mismatched frame counts") {
    auto mc = mcep_analyze(testutil::sine(150.0, 1.0));  // ~98 frames
    F0Contour c;
    c.hop_ms = 10.0;
    c.f0_hz.assign(mc.num_frames() + 5, 150.0);
    c.voiced.assign(mc.num_frames() + 5, true);
    CHECK_THROWS_WITH(synthesize(mc, c),
                      Catch::Matchers::ContainsSubstring("feature length mismatch"));
}

TEST_CASE("wav round trip and resampling") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "evsv_wav_test";
    fs::create_directories(dir);
    const auto path = (dir / "tone.wav").string();

    Waveform w = testutil::sine(300.0, 0.5);
    write_wav(path, w);
    Waveform r = read_wav(path);
    REQUIRE(r.sample_rate_hz == 16000);
    REQUIRE(r.samples.size() == w.samples.size());
    for (std::size_t i = 0; i < r.samples.size(); ++i) {
        CHECK(std::fabs(r.samples[i] - w.samples[i]) < 1e-4);
    }

    // 8 kHz input gets resampled to 16 kHz
    Waveform w8 = testutil::sine(300.0, 0.5, 0.8, 8000);
    const auto path8 = (dir / "tone8.wav").string();
    write_wav(path8, w8);
    Waveform r8 = read_wav(path8);
    CHECK(r8.sample_rate_hz == 16000);
    CHECK(std::llabs(static_cast<long long>(r8.samples.size()) - 8000) <= 2);

    fs::remove_all(dir);
}

TEST_CASE("feature cache round trip") {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "evsv_feat_test";
    fs::create_directories(dir);

    Waveform w = testutil::sine(210.0, 0.6);
    auto mel = mel_spectrogram(w);
    const auto mel_path = (dir / "u.mel.evsf").string();
    write_mel(mel_path, mel);
    auto mel2 = read_mel(mel_path, FrameParams{});
    REQUIRE(mel2.num_frames() == mel.num_frames());
    for (std::size_t t = 0; t < mel.num_frames(); ++t) {
        for (std::size_t b = 0; b < 40; ++b) {
            CHECK(mel2.frames[t][b] ==
                  Catch::Approx(mel.frames[t][b]).margin(1e-4));
        }
    }

    auto f0 = estimate_f0(w);
    const auto f0_path = (dir / "u.f0.evsf").string();
    write_f0(f0_path, f0);
    auto f0b = read_f0(f0_path, f0.hop_ms);
    REQUIRE(f0b.num_frames() == f0.num_frames());
    for (std::size_t t = 0; t < f0.num_frames(); ++t) {
        CHECK(f0b.voiced[t] == f0.voiced[t]);
        CHECK(std::fabs(f0b.f0_hz[t] - f0.f0_hz[t]) < 1e-3);
    }

    CHECK_THROWS_WITH(read_feature_matrix((dir / "absent.evsf").string()),
                      Catch::Matchers::ContainsSubstring("missing feature cache"));
    fs::remove_all(dir);
}
