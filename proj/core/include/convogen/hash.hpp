#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace convogen {

// FNV-1a, used for content-addressed cache keys and config hashes.
// Not cryptographic; collisions are acceptable for cache addressing.
constexpr std::uint64_t fnv1a64(std::string_view data, std::uint64_t seed = 14695981039346656037ull) {
    std::uint64_t h = seed;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

std::string to_hex(std::uint64_t value);

inline std::string hash_hex(std::string_view data) { return to_hex(fnv1a64(data)); }

}  // namespace convogen
