#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "evsv/core/error.hpp"
#include "evsv/core/rng.hpp"
#include "evsv/dsp/fft.hpp"
#include "evsv/dsp/mcep.hpp"
#include "evsv/dsp/mel.hpp"
#include "evsv/dsp/pitch.hpp"

namespace evsv::dsp {

namespace detail {

// Per-bin amplitude gains from one mcep frame: inverse DCT -> exp ->
// mel-band power -> interpolated across FFT bins by the triangle weights.
inline std::vector<double> envelope_gains(const std::vector<double>& mcep_frame,
                                          const std::vector<std::vector<double>>& fb,
                                          std::size_t nbins) {
    const auto logmel = mcep_to_log_mel(mcep_frame);
    std::vector<double> amp(kMelBands);
    for (std::size_t m = 0; m < kMelBands; ++m) {
        amp[m] = std::sqrt(std::exp(logmel[m]));  // power -> amplitude
    }
    std::vector<double> gains(nbins, 0.0);
    for (std::size_t k = 0; k < nbins; ++k) {
        double num = 0.0, den = 0.0;
        for (std::size_t m = 0; m < kMelBands; ++m) {
            const double wgt = fb[m][k];
            num += wgt * amp[m];
            den += wgt;
        }
        gains[k] = den > 1e-12 ? num / den : 0.0;
    }
    return gains;
}

}  // namespace detail

// Overlap-add source-filter synthesis: pulse train at F0 for voiced frames,
// white noise for unvoiced, filtered by the envelope recovered from the
// mcep track. Deterministic (fixed-seed noise); peak-normalized to 0.9.
inline Waveform synthesize(const McepSequence& m, const F0Contour& c,
                           int sample_rate_hz = kDefaultSampleRate) {
    require(m.num_frames() >= 1, "empty mcep sequence");
    const std::size_t t_frames = m.num_frames();
    const long diff = static_cast<long>(t_frames) - static_cast<long>(c.num_frames());
    require(diff <= 2 && diff >= -2, "feature length mismatch");
    F0Contour contour = c;
    if (diff != 0) contour = resample_contour(c, t_frames, m.hop_ms);

    const std::size_t frame_len = frame_length_samples(sample_rate_hz, m.frame_ms);
    const std::size_t hop_len = frame_length_samples(sample_rate_hz, m.hop_ms);
    const std::size_t total = (t_frames - 1) * hop_len + frame_len;
    const std::size_t nfft = next_pow2(frame_len);
    const std::size_t nbins = nfft / 2 + 1;
    const auto fb = mel_filterbank(kMelBands, nfft, sample_rate_hz);
    const auto win = hann_window(frame_len);

    // excitation: phase-accumulated pulse train / noise
    SeededRng noise_rng(0x5EEDu);
    std::vector<double> excitation(total, 0.0);
    double phase = 1.0;  // emit a pulse at the first voiced sample
    for (std::size_t n = 0; n < total; ++n) {
        const std::size_t t = std::min(n / hop_len, t_frames - 1);
        if (contour.voiced[t]) {
            phase += contour.f0_hz[t] / sample_rate_hz;
            if (phase >= 1.0) {
                phase -= 1.0;
                // unit-energy-per-period pulse
                excitation[n] = std::sqrt(sample_rate_hz / contour.f0_hz[t]);
            }
        } else {
            excitation[n] = noise_rng.normal();
            phase = 1.0;
        }
    }

    std::vector<double> out(total, 0.0);
    std::vector<double> wsum(total, 0.0);
    std::vector<std::complex<double>> buf(nfft);
    for (std::size_t t = 0; t < t_frames; ++t) {
        const auto gains = detail::envelope_gains(m.coeffs[t], fb, nbins);
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        const std::size_t start = t * hop_len;
        for (std::size_t i = 0; i < frame_len; ++i) {
            buf[i] = {excitation[start + i] * win[i], 0.0};
        }
        fft(buf);
        for (std::size_t k = 0; k < nbins; ++k) {
            buf[k] *= gains[k];
            if (k != 0 && k != nfft / 2) buf[nfft - k] = std::conj(buf[k]);
        }
        fft(buf, /*inverse=*/true);
        for (std::size_t i = 0; i < frame_len; ++i) {
            out[start + i] += buf[i].real() * win[i];
            wsum[start + i] += win[i] * win[i];
        }
    }
    for (std::size_t n = 0; n < total; ++n) {
        out[n] /= std::max(wsum[n], 1e-6);
    }

    Waveform w;
    w.sample_rate_hz = sample_rate_hz;
    w.samples = std::move(out);
    peak_normalize(w, 0.9);
    return w;
}

}  // namespace evsv::dsp
