#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "evsv/core/error.hpp"
#include "evsv/dsp/pitch.hpp"

namespace evsv::dsp {

constexpr std::size_t kCwtScales = 10;

// Empirical unit-gain calibration for the dyadic Mexican-hat analysis /
// (k+2.5)^(-5/2) synthesis pair over phrase-rate contours. Pearson
// correlation of the round trip is insensitive to this constant; it only
// restores the dynamic range of reconstructed contours.
constexpr double kCwtReconstructGain = 8.2;

// 10-scale wavelet decomposition of the interpolated, z-normalized log-F0.
struct LogF0Cwt {
    std::vector<std::vector<double>> coeffs;  // coeffs[scale][t], 10 rows
    double norm_mean = 0.0;
    double norm_std = 1.0;
    std::array<double, kCwtScales> scale_means{};
    std::array<double, kCwtScales> scale_stds{};
    double hop_ms = 5.0;

    std::size_t num_frames() const { return coeffs.empty() ? 0 : coeffs[0].size(); }
};

namespace detail {

inline double mexican_hat(double x) {
    static const double norm = 2.0 / (std::sqrt(3.0) * std::pow(M_PI, 0.25));
    return norm * (1.0 - x * x) * std::exp(-0.5 * x * x);
}

// index into a mirror-padded signal
inline std::size_t reflect_index(long i, long n) {
    if (n == 1) return 0;
    const long period = 2 * (n - 1);
    long j = i % period;
    if (j < 0) j += period;
    if (j >= n) j = period - j;
    return static_cast<std::size_t>(j);
}

// Interpolated log-F0: linear across unvoiced gaps, edge-hold at the ends.
inline std::vector<double> continuous_log_f0(const F0Contour& c) {
    const std::size_t t_frames = c.num_frames();
    require(c.num_voiced() >= 1, "no voiced frames");

    std::vector<double> logf0(t_frames, 0.0);
    long prev = -1;
    for (std::size_t t = 0; t < t_frames; ++t) {
        if (!c.voiced[t]) continue;
        const double v = std::log(c.f0_hz[t]);
        logf0[t] = v;
        if (prev < 0) {
            for (std::size_t u = 0; u < t; ++u) logf0[u] = v;  // edge-hold
        } else if (static_cast<std::size_t>(prev) + 1 < t) {
            const double v0 = logf0[prev];
            const double span = static_cast<double>(t - prev);
            for (std::size_t u = prev + 1; u < t; ++u) {
                logf0[u] = v0 + (v - v0) * static_cast<double>(u - prev) / span;
            }
        }
        prev = static_cast<long>(t);
    }
    for (std::size_t u = prev + 1; u < t_frames; ++u) logf0[u] = logf0[prev];
    return logf0;
}

}  // namespace detail

// Mexican-hat CWT at dyadic scales 2^k frames, k = 0..9, of the
// per-utterance z-normalized continuous log-F0.
inline LogF0Cwt cwt_decompose(const F0Contour& c) {
    const auto logf0 = detail::continuous_log_f0(c);
    const std::size_t t_frames = logf0.size();

    LogF0Cwt out;
    out.hop_ms = c.hop_ms;
    double mean = 0.0;
    for (double v : logf0) mean += v;
    mean /= static_cast<double>(t_frames);
    double var = 0.0;
    for (double v : logf0) var += (v - mean) * (v - mean);
    var /= static_cast<double>(t_frames);
    out.norm_mean = mean;
    const double stddev = std::sqrt(var);
    out.norm_std = std::max(stddev, 1e-8);

    // degenerate (constant) contours normalize to exactly zero
    std::vector<double> z(t_frames, 0.0);
    if (stddev >= 1e-8) {
        for (std::size_t t = 0; t < t_frames; ++t) {
            z[t] = (logf0[t] - mean) / out.norm_std;
        }
    }

    out.coeffs.assign(kCwtScales, std::vector<double>(t_frames, 0.0));
    const long n = static_cast<long>(t_frames);
    for (std::size_t k = 0; k < kCwtScales; ++k) {
        const double s = std::pow(2.0, static_cast<double>(k));
        const long half = static_cast<long>(std::ceil(4.0 * s));
        const double inv_sqrt_s = 1.0 / std::sqrt(s);
        std::vector<double> kernel(2 * half + 1);
        for (long u = -half; u <= half; ++u) {
            kernel[u + half] = detail::mexican_hat(static_cast<double>(u) / s);
        }
        auto& row = out.coeffs[k];
        for (long t = 0; t < n; ++t) {
            double acc = 0.0;
            for (long u = -half; u <= half; ++u) {
                acc += z[detail::reflect_index(t + u, n)] * kernel[u + half];
            }
            row[t] = acc * inv_sqrt_s;
        }
        double sm = 0.0;
        for (double v : row) sm += v;
        sm /= static_cast<double>(t_frames);
        double sv = 0.0;
        for (double v : row) sv += (v - sm) * (v - sm);
        sv /= static_cast<double>(t_frames);
        out.scale_means[k] = sm;
        out.scale_stds[k] = std::max(std::sqrt(sv), 1e-8);
    }
    return out;
}

// Weighted sum across scales ((k+2.5)^(-5/2) weights), de-normalized with
// the stored per-utterance statistics. Returns the continuous log-F0 track.
inline std::vector<double> cwt_reconstruct(const LogF0Cwt& x) {
    require(x.coeffs.size() == kCwtScales, "dimension error");
    const std::size_t t_frames = x.num_frames();
    require(x.norm_std > 0.0, "invalid normalization");
    std::vector<double> rec(t_frames, 0.0);
    for (std::size_t k = 0; k < kCwtScales; ++k) {
        const double wgt = std::pow(static_cast<double>(k) + 2.5, -2.5);
        const auto& row = x.coeffs[k];
        for (std::size_t t = 0; t < t_frames; ++t) rec[t] += wgt * row[t];
    }
    for (std::size_t t = 0; t < t_frames; ++t) {
        rec[t] = rec[t] * kCwtReconstructGain * x.norm_std + x.norm_mean;
    }
    return rec;
}

// Rebuilds an F0 contour from a reconstructed log-F0 track, reusing the
// source voicing mask.
inline F0Contour contour_from_log_f0(const std::vector<double>& logf0,
                                     const std::vector<bool>& voiced,
                                     double hop_ms) {
    require(logf0.size() == voiced.size(), "feature length mismatch");
    F0Contour c;
    c.hop_ms = hop_ms;
    c.f0_hz.assign(logf0.size(), 0.0);
    c.voiced = voiced;
    for (std::size_t t = 0; t < logf0.size(); ++t) {
        if (voiced[t]) {
            c.f0_hz[t] = std::max(kF0Min, std::min(kF0Max, std::exp(logf0[t])));
        }
    }
    return c;
}

}  // namespace evsv::dsp
