#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "evsv/core/error.hpp"
#include "evsv/dsp/cwt.hpp"
#include "evsv/dsp/mcep.hpp"
#include "evsv/dsp/mel.hpp"
#include "evsv/dsp/pitch.hpp"

namespace evsv::dsp {

// Feature cache files: magic "EVSF", version byte, dim count, dims (u32 LE),
// then row-major 32-bit little-endian floats. One file per utterance per
// feature kind; the kind is carried by the file name suffix
// (.mel.evsf / .mcep.evsf / .f0.evsf).

constexpr std::uint8_t kFeatureFileVersion = 1;

namespace detail {

inline void put_u32le_f(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(v & 0xFF);
    out.push_back((v >> 8) & 0xFF);
    out.push_back((v >> 16) & 0xFF);
    out.push_back((v >> 24) & 0xFF);
}

inline void put_f32le(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t bits;
    std::memcpy(&bits, &f, 4);
    put_u32le_f(out, bits);
}

inline std::uint32_t get_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

inline float get_f32le(const std::uint8_t* p) {
    const std::uint32_t bits = get_u32le(p);
    float f;
    std::memcpy(&f, &bits, 4);
    return f;
}

}  // namespace detail

inline void write_feature_matrix(const std::string& path,
                                 const std::vector<std::vector<double>>& rows) {
    require(!rows.empty(), "empty feature matrix");
    const std::uint32_t r = static_cast<std::uint32_t>(rows.size());
    const std::uint32_t c = static_cast<std::uint32_t>(rows[0].size());
    std::vector<std::uint8_t> out;
    out.reserve(10 + static_cast<std::size_t>(r) * c * 4);
    out.insert(out.end(), {'E', 'V', 'S', 'F'});
    out.push_back(kFeatureFileVersion);
    out.push_back(2);  // dim count
    detail::put_u32le_f(out, r);
    detail::put_u32le_f(out, c);
    for (const auto& row : rows) {
        require(row.size() == c, "ragged feature matrix");
        for (double v : row) detail::put_f32le(out, static_cast<float>(v));
    }
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), "cannot write feature cache: " + path);
    f.write(reinterpret_cast<const char*>(out.data()),
            static_cast<std::streamsize>(out.size()));
    require(f.good(), "cannot write feature cache: " + path);
}

inline std::vector<std::vector<double>> read_feature_matrix(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "missing feature cache: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    require(bytes.size() >= 14 && std::memcmp(bytes.data(), "EVSF", 4) == 0,
            "invalid feature cache: " + path);
    require(bytes[4] == kFeatureFileVersion, "unsupported feature cache version");
    require(bytes[5] == 2, "unsupported feature cache rank");
    const std::uint32_t r = detail::get_u32le(bytes.data() + 6);
    const std::uint32_t c = detail::get_u32le(bytes.data() + 10);
    require(bytes.size() == 14 + static_cast<std::size_t>(r) * c * 4,
            "truncated feature cache: " + path);
    std::vector<std::vector<double>> rows(r, std::vector<double>(c));
    const std::uint8_t* p = bytes.data() + 14;
    for (std::uint32_t i = 0; i < r; ++i) {
        for (std::uint32_t j = 0; j < c; ++j, p += 4) {
            rows[i][j] = static_cast<double>(detail::get_f32le(p));
        }
    }
    return rows;
}

inline void write_mel(const std::string& path, const MelSpectrogram& m) {
    write_feature_matrix(path, m.frames);
}

inline MelSpectrogram read_mel(const std::string& path, const FrameParams& fp) {
    MelSpectrogram m;
    m.frames = read_feature_matrix(path);
    for (const auto& row : m.frames) {
        require(row.size() == kMelBands, "invalid mel cache: " + path);
    }
    m.frame_ms = fp.frame_ms;
    m.hop_ms = fp.hop_ms;
    return m;
}

inline void write_mcep(const std::string& path, const McepSequence& m) {
    write_feature_matrix(path, m.coeffs);
}

inline McepSequence read_mcep(const std::string& path, const FrameParams& fp) {
    McepSequence m;
    m.coeffs = read_feature_matrix(path);
    for (const auto& row : m.coeffs) {
        require(row.size() == kMcepOrder, "invalid mcep cache: " + path);
    }
    m.frame_ms = fp.frame_ms;
    m.hop_ms = fp.hop_ms;
    return m;
}

// F0 stored as a 2 x T matrix: row 0 = f0_hz, row 1 = voiced flags.
inline void write_f0(const std::string& path, const F0Contour& c) {
    std::vector<std::vector<double>> rows(2, std::vector<double>(c.num_frames()));
    for (std::size_t t = 0; t < c.num_frames(); ++t) {
        rows[0][t] = c.f0_hz[t];
        rows[1][t] = c.voiced[t] ? 1.0 : 0.0;
    }
    write_feature_matrix(path, rows);
}

inline F0Contour read_f0(const std::string& path, double hop_ms) {
    const auto rows = read_feature_matrix(path);
    require(rows.size() == 2, "invalid f0 cache: " + path);
    F0Contour c;
    c.hop_ms = hop_ms;
    const std::size_t t_frames = rows[0].size();
    c.f0_hz.resize(t_frames);
    c.voiced.resize(t_frames);
    for (std::size_t t = 0; t < t_frames; ++t) {
        c.voiced[t] = rows[1][t] > 0.5;
        c.f0_hz[t] = c.voiced[t] ? rows[0][t] : 0.0;
    }
    return c;
}

}  // namespace evsv::dsp
