#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "evsv/core/error.hpp"

namespace evsv {

using Sha256Digest = std::array<std::uint8_t, 32>;

inline Sha256Digest sha256(const void* data, std::size_t len) {
    Sha256Digest out{};
    unsigned int out_len = 0;
    if (EVP_Digest(data, len, out.data(), &out_len, EVP_sha256(), nullptr) != 1 ||
        out_len != out.size()) {
        fail("sha256 failure");
    }
    return out;
}

inline Sha256Digest sha256(const std::vector<std::uint8_t>& bytes) {
    return sha256(bytes.data(), bytes.size());
}

inline std::string to_hex(const Sha256Digest& d) {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (std::uint8_t b : d) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xF]);
    }
    return s;
}

inline std::string sha256_hex(const void* data, std::size_t len) {
    return to_hex(sha256(data, len));
}

inline std::string sha256_hex(const std::string& s) {
    return sha256_hex(s.data(), s.size());
}

inline std::string sha256_file_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open file for hashing: " + path);
    std::vector<char> bytes((std::istreambuf_iterator<char>(in)),
                            std::istreambuf_iterator<char>());
    return sha256_hex(bytes.data(), bytes.size());
}

}  // namespace evsv
