#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "evsv/core/error.hpp"
#include "evsv/core/hash.hpp"
#include "evsv/core/tensor.hpp"

namespace evsv::nn {

// Checkpoint files: magic "EVCK", version byte, named parameter blocks
// (name length + UTF-8 name + shape + little-endian 64-bit floats), and a
// SHA-256 of the payload in the footer for determinism checks.

constexpr std::uint8_t kCheckpointVersion = 1;

struct Checkpoint {
    std::vector<std::pair<std::string, Tensor>> blocks;

    void add(const std::string& name, const Tensor& t) { blocks.emplace_back(name, t); }

    const Tensor& get(const std::string& name) const {
        for (const auto& [n, t] : blocks) {
            if (n == name) return t;
        }
        fail("missing checkpoint block: " + name);
    }

    bool has(const std::string& name) const {
        for (const auto& [n, t] : blocks) {
            if (n == name) return true;
        }
        return false;
    }
};

namespace detail {

inline void put_u32le(std::vector<std::uint8_t>& out, std::uint32_t v) {
    out.push_back(v & 0xFF);
    out.push_back((v >> 8) & 0xFF);
    out.push_back((v >> 16) & 0xFF);
    out.push_back((v >> 24) & 0xFF);
}

inline void put_f64le(std::vector<std::uint8_t>& out, double d) {
    std::uint64_t bits;
    std::memcpy(&bits, &d, 8);
    for (int i = 0; i < 8; ++i) out.push_back((bits >> (8 * i)) & 0xFF);
}

inline std::uint32_t get_u32le(const std::uint8_t* p) {
    return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
           (static_cast<std::uint32_t>(p[2]) << 16) |
           (static_cast<std::uint32_t>(p[3]) << 24);
}

inline double get_f64le(const std::uint8_t* p) {
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
}

inline std::vector<std::uint8_t> encode_payload(const Checkpoint& ckpt) {
    std::vector<std::uint8_t> payload;
    put_u32le(payload, static_cast<std::uint32_t>(ckpt.blocks.size()));
    for (const auto& [name, t] : ckpt.blocks) {
        put_u32le(payload, static_cast<std::uint32_t>(name.size()));
        payload.insert(payload.end(), name.begin(), name.end());
        payload.push_back(static_cast<std::uint8_t>(t.shape.size()));
        for (std::size_t d : t.shape) {
            put_u32le(payload, static_cast<std::uint32_t>(d));
        }
        for (double v : t.data) put_f64le(payload, v);
    }
    return payload;
}

}  // namespace detail

// Hex SHA-256 of the serialized parameter payload.
inline std::string checkpoint_hash(const Checkpoint& ckpt) {
    return to_hex(sha256(detail::encode_payload(ckpt)));
}

inline void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
    const auto payload = detail::encode_payload(ckpt);
    const auto digest = sha256(payload);
    std::vector<std::uint8_t> out;
    out.reserve(5 + payload.size() + digest.size());
    out.insert(out.end(), {'E', 'V', 'C', 'K'});
    out.push_back(kCheckpointVersion);
    out.insert(out.end(), payload.begin(), payload.end());
    out.insert(out.end(), digest.begin(), digest.end());

    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    require(f.good(), "cannot write checkpoint: " + path);
    f.write(reinterpret_cast<const char*>(out.data()),
            static_cast<std::streamsize>(out.size()));
    require(f.good(), "cannot write checkpoint: " + path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "missing checkpoint: " + path);
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    require(bytes.size() >= 4 + 1 + 4 + 32 &&
                std::memcmp(bytes.data(), "EVCK", 4) == 0,
            "invalid checkpoint: " + path);
    require(bytes[4] == kCheckpointVersion, "unsupported checkpoint version");

    const std::uint8_t* payload = bytes.data() + 5;
    const std::size_t payload_len = bytes.size() - 5 - 32;
    const auto digest = sha256(payload, payload_len);
    require(std::memcmp(digest.data(), bytes.data() + bytes.size() - 32, 32) == 0,
            "checkpoint hash mismatch: " + path);

    Checkpoint ckpt;
    const std::uint8_t* p = payload;
    const std::uint8_t* end = payload + payload_len;
    require(p + 4 <= end, "truncated checkpoint");
    const std::uint32_t nblocks = detail::get_u32le(p);
    p += 4;
    for (std::uint32_t blk = 0; blk < nblocks; ++blk) {
        require(p + 4 <= end, "truncated checkpoint");
        const std::uint32_t name_len = detail::get_u32le(p);
        p += 4;
        require(p + name_len + 1 <= end, "truncated checkpoint");
        std::string name(reinterpret_cast<const char*>(p), name_len);
        p += name_len;
        const std::uint8_t ndims = *p++;
        std::vector<std::size_t> shape(ndims);
        require(p + 4 * ndims <= end, "truncated checkpoint");
        for (std::uint8_t d = 0; d < ndims; ++d) {
            shape[d] = detail::get_u32le(p);
            p += 4;
        }
        Tensor t{shape};
        require(p + 8 * t.size() <= end, "truncated checkpoint");
        for (std::size_t i = 0; i < t.size(); ++i) {
            t[i] = detail::get_f64le(p);
            p += 8;
        }
        ckpt.blocks.emplace_back(std::move(name), std::move(t));
    }
    return ckpt;
}

}  // namespace evsv::nn
