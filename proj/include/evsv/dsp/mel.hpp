#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "evsv/core/error.hpp"
#include "evsv/dsp/fft.hpp"
#include "evsv/dsp/waveform.hpp"

namespace evsv::dsp {

constexpr std::size_t kMelBands = 40;
constexpr double kMelFmin = 0.0;
constexpr double kMelFmax = 8000.0;
constexpr double kLogFloor = 1e-10;

struct FrameParams {
    double frame_ms = 25.0;
    double hop_ms = 10.0;
};

// T x 40 log-mel energies.
struct MelSpectrogram {
    std::vector<std::vector<double>> frames;  // frames[t][band]
    double frame_ms = 25.0;
    double hop_ms = 10.0;

    std::size_t num_frames() const { return frames.size(); }
};

inline double hz_to_mel(double hz) { return 2595.0 * std::log10(1.0 + hz / 700.0); }
inline double mel_to_hz(double mel) { return 700.0 * (std::pow(10.0, mel / 2595.0) - 1.0); }

// Triangular mel filterbank, peak 1, over nfft/2+1 power bins.
inline std::vector<std::vector<double>> mel_filterbank(std::size_t num_bands,
                                                       std::size_t nfft,
                                                       int sample_rate_hz,
                                                       double fmin = kMelFmin,
                                                       double fmax = kMelFmax) {
    const std::size_t nbins = nfft / 2 + 1;
    const double mel_lo = hz_to_mel(fmin);
    const double mel_hi = hz_to_mel(fmax);
    std::vector<double> edges(num_bands + 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<double>(i) /
                                          static_cast<double>(num_bands + 1));
    }

    std::vector<std::vector<double>> fb(num_bands, std::vector<double>(nbins, 0.0));
    for (std::size_t m = 0; m < num_bands; ++m) {
        const double f0 = edges[m], f1 = edges[m + 1], f2 = edges[m + 2];
        for (std::size_t k = 0; k < nbins; ++k) {
            const double fk = static_cast<double>(k) * sample_rate_hz /
                              static_cast<double>(nfft);
            if (fk > f0 && fk < f1) {
                fb[m][k] = (fk - f0) / (f1 - f0);
            } else if (fk >= f1 && fk <= f2 && f2 > f1) {
                fb[m][k] = (f2 - fk) / (f2 - f1);
            }
        }
    }
    return fb;
}

// Power spectrum per frame -> mel energies (40 bands, 0-8 kHz).
inline std::vector<std::vector<double>> mel_energies(const Waveform& w,
                                                     const FrameParams& fp) {
    w.validate();
    const auto frames = frame_signal(w, fp.frame_ms, fp.hop_ms);
    const std::size_t frame_len = frames[0].size();
    const std::size_t nfft = next_pow2(frame_len);
    const auto fb = mel_filterbank(kMelBands, nfft, w.sample_rate_hz);

    std::vector<std::vector<double>> out(frames.size(),
                                         std::vector<double>(kMelBands, 0.0));
    for (std::size_t t = 0; t < frames.size(); ++t) {
        const auto p = power_spectrum(frames[t], nfft);
        for (std::size_t m = 0; m < kMelBands; ++m) {
            double e = 0.0;
            for (std::size_t k = 0; k < p.size(); ++k) e += fb[m][k] * p[k];
            out[t][m] = e;
        }
    }
    return out;
}

inline MelSpectrogram mel_spectrogram(const Waveform& w,
                                      const FrameParams& fp = FrameParams{}) {
    MelSpectrogram mel;
    mel.frame_ms = fp.frame_ms;
    mel.hop_ms = fp.hop_ms;
    auto energies = mel_energies(w, fp);
    mel.frames.resize(energies.size());
    for (std::size_t t = 0; t < energies.size(); ++t) {
        mel.frames[t].resize(kMelBands);
        for (std::size_t m = 0; m < kMelBands; ++m) {
            mel.frames[t][m] = std::log(energies[t][m] + kLogFloor);
        }
    }
    return mel;
}

}  // namespace evsv::dsp
