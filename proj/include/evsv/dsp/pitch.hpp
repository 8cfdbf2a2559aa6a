#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "evsv/core/error.hpp"
#include "evsv/dsp/waveform.hpp"

namespace evsv::dsp {

constexpr double kF0Min = 50.0;
constexpr double kF0Max = 600.0;
constexpr double kVoicingThreshold = 0.3;

struct PitchParams {
    double frame_ms = 40.0;  // long enough for two periods at 50 Hz
    double hop_ms = 5.0;
};

// Per-frame F0 track; f0_hz[t] > 0 iff voiced[t].
struct F0Contour {
    std::vector<double> f0_hz;
    std::vector<bool> voiced;
    double hop_ms = 5.0;

    std::size_t num_frames() const { return f0_hz.size(); }

    std::size_t num_voiced() const {
        std::size_t n = 0;
        for (bool v : voiced) n += v ? 1 : 0;
        return n;
    }

    double median_voiced_f0() const {
        std::vector<double> v;
        for (std::size_t t = 0; t < f0_hz.size(); ++t)
            if (voiced[t]) v.push_back(f0_hz[t]);
        if (v.empty()) return 0.0;
        std::sort(v.begin(), v.end());
        const std::size_t n = v.size();
        return (n % 2 == 1) ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    }
};

namespace detail {

// Normalized cross-correlation at the given lag, over the leading
// window - lag samples. Scale-invariant by construction.
inline double normalized_autocorr(const double* x, std::size_t len, std::size_t lag) {
    const std::size_t n = len - lag;
    double num = 0.0, e0 = 0.0, e1 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        num += x[i] * x[i + lag];
        e0 += x[i] * x[i];
        e1 += x[i + lag] * x[i + lag];
    }
    const double denom = std::sqrt(e0 * e1);
    if (denom <= 0.0) return 0.0;
    return num / denom;
}

}  // namespace detail

// Autocorrelation pitch tracker: peak of the normalized autocorrelation in
// the 50-600 Hz lag range; frames whose peak falls below 0.3 are unvoiced.
// Octave-error guard: among near-maximal peaks, prefer the shortest lag.
inline F0Contour estimate_f0(const Waveform& w,
                             const PitchParams& pp = PitchParams{}) {
    w.validate();
    const std::size_t frame_len = frame_length_samples(w.sample_rate_hz, pp.frame_ms);
    const std::size_t hop_len = frame_length_samples(w.sample_rate_hz, pp.hop_ms);
    const std::size_t t_frames = frame_count(w.samples.size(), frame_len, hop_len);

    const std::size_t lag_min = static_cast<std::size_t>(
        std::floor(w.sample_rate_hz / kF0Max));
    const std::size_t lag_max = std::min<std::size_t>(
        static_cast<std::size_t>(std::ceil(w.sample_rate_hz / kF0Min)),
        frame_len / 2);

    F0Contour c;
    c.hop_ms = pp.hop_ms;
    c.f0_hz.assign(t_frames, 0.0);
    c.voiced.assign(t_frames, false);

    std::vector<double> frame(frame_len);
    std::vector<double> r(lag_max + 1, 0.0);
    for (std::size_t t = 0; t < t_frames; ++t) {
        const double* src = w.samples.data() + t * hop_len;
        double mean = 0.0;
        for (std::size_t i = 0; i < frame_len; ++i) mean += src[i];
        mean /= static_cast<double>(frame_len);
        double energy = 0.0;
        for (std::size_t i = 0; i < frame_len; ++i) {
            frame[i] = src[i] - mean;
            energy += frame[i] * frame[i];
        }
        if (energy <= 0.0) continue;  // digital silence

        double r_max = -1.0;
        for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
            r[lag] = detail::normalized_autocorr(frame.data(), frame_len, lag);
            r_max = std::max(r_max, r[lag]);
        }
        if (r_max < kVoicingThreshold) continue;

        // shortest lag whose local peak is within 3% of the global max
        std::size_t best = 0;
        for (std::size_t lag = lag_min; lag <= lag_max; ++lag) {
            const bool local_peak =
                (lag == lag_min || r[lag] >= r[lag - 1]) &&
                (lag == lag_max || r[lag] >= r[lag + 1]);
            if (local_peak && r[lag] >= 0.97 * r_max) {
                best = lag;
                break;
            }
        }
        if (best == 0) continue;

        // parabolic interpolation around the peak
        double lag_star = static_cast<double>(best);
        if (best > lag_min && best < lag_max) {
            const double a = r[best - 1], b = r[best], cc = r[best + 1];
            const double denom = a - 2.0 * b + cc;
            if (std::fabs(denom) > 1e-12) {
                const double delta = 0.5 * (a - cc) / denom;
                if (std::fabs(delta) <= 1.0) lag_star += delta;
            }
        }

        double f0 = static_cast<double>(w.sample_rate_hz) / lag_star;
        f0 = std::max(kF0Min, std::min(kF0Max, f0));
        c.f0_hz[t] = f0;
        c.voiced[t] = true;
    }
    return c;
}

// Linear-interpolates a contour onto a new frame grid (used to align the
// 5 ms F0 track with the 10 ms spectral track before synthesis).
inline F0Contour resample_contour(const F0Contour& c, std::size_t target_frames,
                                  double target_hop_ms) {
    require(c.num_frames() >= 1, "empty contour");
    F0Contour out;
    out.hop_ms = target_hop_ms;
    out.f0_hz.assign(target_frames, 0.0);
    out.voiced.assign(target_frames, false);
    const double scale = target_hop_ms / c.hop_ms;
    for (std::size_t t = 0; t < target_frames; ++t) {
        const double pos = std::min(t * scale,
                                    static_cast<double>(c.num_frames() - 1));
        const std::size_t i0 = static_cast<std::size_t>(pos);
        const std::size_t i1 = std::min(i0 + 1, c.num_frames() - 1);
        const double frac = pos - static_cast<double>(i0);
        const std::size_t nearest = frac < 0.5 ? i0 : i1;
        if (!c.voiced[nearest]) continue;
        double f0;
        if (c.voiced[i0] && c.voiced[i1]) {
            f0 = (1.0 - frac) * c.f0_hz[i0] + frac * c.f0_hz[i1];
        } else {
            f0 = c.f0_hz[nearest];
        }
        out.voiced[t] = true;
        out.f0_hz[t] = std::max(kF0Min, std::min(kF0Max, f0));
    }
    return out;
}

}  // namespace evsv::dsp
