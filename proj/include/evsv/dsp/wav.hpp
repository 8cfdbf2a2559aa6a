#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "evsv/core/error.hpp"
#include "evsv/dsp/waveform.hpp"

namespace evsv::dsp {

namespace detail {

inline std::uint32_t read_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16le(const std::uint8_t* p) {
    return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(v & 0xFF);
    out.push_back((v >> 8) & 0xFF);
    out.push_back((v >> 16) & 0xFF);
    out.push_back((v >> 24) & 0xFF);
}

inline void put_u16le(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(v & 0xFF);
    out.push_back((v >> 8) & 0xFF);
}

}  // namespace detail

// Reads 16-bit PCM mono WAV at any rate; resamples to 16 kHz.
inline Waveform read_wav(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "missing audio");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    require(bytes.size() >= 44, "invalid wav: " + path);
    require(std::memcmp(bytes.data(), "RIFF", 4) == 0 &&
                std::memcmp(bytes.data() + 8, "WAVE", 4) == 0,
            "invalid wav: " + path);

    std::uint16_t channels = 0, bits = 0;
    std::uint32_t rate = 0;
    const std::uint8_t* data = nullptr;
    std::uint32_t data_len = 0;

    std::size_t pos = 12;
    while (pos + 8 <= bytes.size()) {
        const char* id = reinterpret_cast<const char*>(bytes.data() + pos);
        const std::uint32_t len = detail::read_u32le(bytes.data() + pos + 4);
        const std::uint8_t* body = bytes.data() + pos + 8;
        if (pos + 8 + len > bytes.size()) break;
        if (std::memcmp(id, "fmt ", 4) == 0 && len >= 16) {
            const std::uint16_t format = detail::read_u16le(body);
            require(format == 1, "unsupported wav encoding (want pcm): " + path);
            channels = detail::read_u16le(body + 2);
            rate = detail::read_u32le(body + 4);
            bits = detail::read_u16le(body + 14);
        } else if (std::memcmp(id, "data", 4) == 0) {
            data = body;
            data_len = len;
        }
        pos += 8 + len + (len & 1);
    }

    require(data != nullptr && rate > 0, "invalid wav: " + path);
    require(channels == 1, "unsupported wav channel count (want mono): " + path);
    require(bits == 16, "unsupported wav sample width (want 16-bit): " + path);

    Waveform w;
    w.sample_rate_hz = static_cast<int>(rate);
    const std::size_t n = data_len / 2;
    w.samples.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const std::int16_t s =
            static_cast<std::int16_t>(detail::read_u16le(data + 2 * i));
        w.samples[i] = static_cast<double>(s) / 32768.0;
    }
    require(!w.samples.empty(), "invalid wav (no samples): " + path);
    return resample(w, kDefaultSampleRate);
}

inline void write_wav(const std::string& path, const Waveform& w) {
    std::vector<std::uint8_t> out;
    const std::uint32_t n = static_cast<std::uint32_t>(w.samples.size());
    const std::uint32_t data_len = n * 2;
    out.reserve(44 + data_len);

    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    detail::put_u32le(out, 36 + data_len);
    out.insert(out.end(), {'W', 'A', 'V', 'E'});
    out.insert(out.end(), {'f', 'm', 't', ' '});
    detail::put_u32le(out, 16);
    detail::put_u16le(out, 1);  // PCM
    detail::put_u16le(out, 1);  // mono
    detail::put_u32le(out, static_cast<std::uint32_t>(w.sample_rate_hz));
    detail::put_u32le(out, static_cast<std::uint32_t>(w.sample_rate_hz) * 2);
    detail::put_u16le(out, 2);   // block align
    detail::put_u16le(out, 16);  // bits
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    detail::put_u32le(out, data_len);

    for (std::size_t i = 0; i < n; ++i) {
        double v = w.samples[i];
        v = std::max(-1.0, std::min(1.0, v));
        const std::int16_t s = static_cast<std::int16_t>(std::lround(v * 32767.0));
        detail::put_u16le(out, static_cast<std::uint16_t>(s));
    }

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), "cannot write wav: " + path);
    f.write(reinterpret_cast<const char*>(out.data()),
            static_cast<std::streamsize>(out.size()));
    require(f.good(), "cannot write wav: " + path);
}

}  // namespace evsv::dsp
