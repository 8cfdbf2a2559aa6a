#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "evsv/core/error.hpp"

namespace evsv::dsp {

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place iterative radix-2 FFT. n must be a power of two.
inline void fft(std::vector<std::complex<double>>& a, bool inverse = false) {
    const std::size_t n = a.size();
    require(n != 0 && (n & (n - 1)) == 0, "fft size must be a power of two");

    for (std::size_t i = 1, j = 0; i < n; ++i) {
        std::size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (std::size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
        const std::complex<double> wlen(std::cos(ang), std::sin(ang));
        for (std::size_t i = 0; i < n; i += len) {
            std::complex<double> w(1.0, 0.0);
            for (std::size_t k = 0; k < len / 2; ++k) {
                const std::complex<double> u = a[i + k];
                const std::complex<double> v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }

    if (inverse) {
        for (auto& x : a) x /= static_cast<double>(n);
    }
}

// Power spectrum (|X|^2) of a real frame, zero-padded to nfft.
// Returns nfft/2 + 1 bins.
inline std::vector<double> power_spectrum(const std::vector<double>& frame,
                                          std::size_t nfft) {
    std::vector<std::complex<double>> buf(nfft, {0.0, 0.0});
    const std::size_t n = std::min(frame.size(), nfft);
    for (std::size_t i = 0; i < n; ++i) buf[i] = {frame[i], 0.0};
    fft(buf);
    std::vector<double> p(nfft / 2 + 1);
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = std::norm(buf[i]);
    return p;
}

}  // namespace evsv::dsp
