/// @file hashing.hpp
/// @brief Content hashes used for corpus checksums, cache keys and feature hashing.

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace mdca {

/// Lower-case hex SHA-256 digest.
std::string sha256_hex(std::string_view bytes);

/// 64-bit FNV-1a. Stable across platforms; used where a cryptographic
/// digest is unnecessary (feature hashing, seed derivation).
constexpr std::uint64_t fnv1a64(std::string_view bytes,
                                std::uint64_t seed = 0xcbf29ce484222325ULL) {
    std::uint64_t h = seed;
    for (char c : bytes) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace mdca
