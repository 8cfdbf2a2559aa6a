#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "evsv/core/error.hpp"

namespace evsv::dsp {

constexpr int kDefaultSampleRate = 16000;

// Raw mono utterance, samples in [-1, 1].
struct Waveform {
    std::vector<double> samples;
    int sample_rate_hz = kDefaultSampleRate;

    double duration_s() const {
        return static_cast<double>(samples.size()) / sample_rate_hz;
    }

    void validate() const {
        require(!samples.empty(), "empty waveform");
        require(sample_rate_hz > 0, "invalid sample rate");
        for (double s : samples) {
            require(std::isfinite(s) && std::fabs(s) <= 1.0 + 1e-12,
                    "waveform sample out of range");
        }
    }
};

// Linear-interpolation resampler; good enough for the source material here.
inline Waveform resample(const Waveform& w, int target_rate) {
    if (w.sample_rate_hz == target_rate) return w;
    require(target_rate > 0, "invalid sample rate");
    const double ratio = static_cast<double>(w.sample_rate_hz) / target_rate;
    const std::size_t out_len = static_cast<std::size_t>(
        std::floor(static_cast<double>(w.samples.size() - 1) / ratio)) + 1;
    Waveform out;
    out.sample_rate_hz = target_rate;
    out.samples.resize(out_len);
    for (std::size_t i = 0; i < out_len; ++i) {
        const double pos = i * ratio;
        const std::size_t i0 = static_cast<std::size_t>(pos);
        const std::size_t i1 = std::min(i0 + 1, w.samples.size() - 1);
        const double frac = pos - static_cast<double>(i0);
        out.samples[i] = (1.0 - frac) * w.samples[i0] + frac * w.samples[i1];
    }
    return out;
}

inline void peak_normalize(Waveform& w, double peak = 0.9) {
    double maxabs = 0.0;
    for (double s : w.samples) maxabs = std::max(maxabs, std::fabs(s));
    if (maxabs <= 0.0) return;
    const double g = peak / maxabs;
    for (double& s : w.samples) s *= g;
}

inline std::vector<double> hann_window(std::size_t n) {
    std::vector<double> w(n);
    if (n == 1) {
        w[0] = 1.0;
        return w;
    }
    for (std::size_t i = 0; i < n; ++i) {
        w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * i / static_cast<double>(n - 1));
    }
    return w;
}

inline std::size_t frame_length_samples(int sample_rate_hz, double frame_ms) {
    return static_cast<std::size_t>(std::lround(sample_rate_hz * frame_ms / 1000.0));
}

inline std::size_t frame_count(std::size_t num_samples, std::size_t frame_len,
                               std::size_t hop_len) {
    require(num_samples >= frame_len, "utterance too short");
    return (num_samples - frame_len) / hop_len + 1;
}

// Hann-windowed frames; frame count T = floor((len - frame) / hop) + 1.
inline std::vector<std::vector<double>> frame_signal(const Waveform& w,
                                                     double frame_ms,
                                                     double hop_ms) {
    require(hop_ms > 0 && frame_ms >= hop_ms, "invalid framing parameters");
    const std::size_t frame_len = frame_length_samples(w.sample_rate_hz, frame_ms);
    const std::size_t hop_len = frame_length_samples(w.sample_rate_hz, hop_ms);
    require(frame_len > 0 && hop_len > 0, "invalid framing parameters");
    const std::size_t t = frame_count(w.samples.size(), frame_len, hop_len);

    const std::vector<double> win = hann_window(frame_len);
    std::vector<std::vector<double>> frames(t);
    for (std::size_t f = 0; f < t; ++f) {
        frames[f].resize(frame_len);
        const double* src = w.samples.data() + f * hop_len;
        for (std::size_t i = 0; i < frame_len; ++i) frames[f][i] = src[i] * win[i];
    }
    return frames;
}

}  // namespace evsv::dsp
