#pragma once

#include <openssl/evp.h>

#include <array>
#include <cstddef>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "polypersona/errors.hpp"

namespace polypersona {

inline std::string to_hex(const unsigned char* data, std::size_t n) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string out;
    out.reserve(n * 2);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(digits[data[i] >> 4]);
        out.push_back(digits[data[i] & 0x0f]);
    }
    return out;
}

inline std::string sha256_hex(std::string_view bytes) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256: digest failed");
    }
    return to_hex(md.data(), len);
}

inline std::string sha256_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

// Short stable identifier: prefix + first 16 hex digits of SHA-256 over the
// unit-separator-joined parts.
template <class... Parts>
std::string stable_id(std::string_view prefix, const Parts&... parts) {
    std::string joined;
    bool first = true;
    ((joined += (first ? "" : "\x1f"), joined += std::string_view(parts), first = false), ...);
    return std::string(prefix) + sha256_hex(joined).substr(0, 16);
}

}  // namespace polypersona
