#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "evsv/core/error.hpp"
#include "evsv/dsp/mel.hpp"

namespace evsv::dsp {

constexpr std::size_t kMcepOrder = 24;

// T x 24 mel-cepstra; coefficient 0 carries the energy term.
struct McepSequence {
    std::vector<std::vector<double>> coeffs;  // coeffs[t][k]
    double frame_ms = 25.0;
    double hop_ms = 10.0;

    std::size_t num_frames() const { return coeffs.size(); }
};

// Orthonormal DCT-II of a length-n vector, first `keep` coefficients.
inline std::vector<double> dct2(const std::vector<double>& x, std::size_t keep) {
    const std::size_t n = x.size();
    std::vector<double> out(keep, 0.0);
    for (std::size_t k = 0; k < keep; ++k) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            s += x[i] * std::cos(M_PI * static_cast<double>(k) *
                                 (static_cast<double>(i) + 0.5) /
                                 static_cast<double>(n));
        }
        const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
        out[k] = scale * s;
    }
    return out;
}

// Inverse of dct2: expands `keep` coefficients back to length n.
inline std::vector<double> idct2(const std::vector<double>& c, std::size_t n) {
    std::vector<double> out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double s = 0.0;
        for (std::size_t k = 0; k < c.size(); ++k) {
            const double scale = k == 0 ? std::sqrt(1.0 / n) : std::sqrt(2.0 / n);
            s += scale * c[k] * std::cos(M_PI * static_cast<double>(k) *
                                         (static_cast<double>(i) + 0.5) /
                                         static_cast<double>(n));
        }
        out[i] = s;
    }
    return out;
}

// Per frame: power spectrum -> 40-band mel filterbank -> log -> DCT-II,
// keeping the first 24 coefficients.
inline McepSequence mcep_analyze(const Waveform& w,
                                 const FrameParams& fp = FrameParams{}) {
    McepSequence m;
    m.frame_ms = fp.frame_ms;
    m.hop_ms = fp.hop_ms;
    const auto energies = mel_energies(w, fp);
    m.coeffs.resize(energies.size());
    std::vector<double> logmel(kMelBands);
    for (std::size_t t = 0; t < energies.size(); ++t) {
        for (std::size_t b = 0; b < kMelBands; ++b) {
            logmel[b] = std::log(energies[t][b] + kLogFloor);
        }
        m.coeffs[t] = dct2(logmel, kMcepOrder);
    }
    return m;
}

// Spectral envelope (log mel energies) recovered from one mcep frame.
inline std::vector<double> mcep_to_log_mel(const std::vector<double>& coeffs) {
    return idct2(coeffs, kMelBands);
}

}  // namespace evsv::dsp
