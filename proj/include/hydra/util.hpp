#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>

namespace hydra {

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent deterministic RNG stream per (seed, purpose) pair. Named streams
// keep parameter groups reproducible even when some groups are skipped.
inline std::mt19937_64 seeded_rng(std::uint64_t seed, std::string_view stream) {
    return std::mt19937_64(splitmix64(seed) ^ fnv1a64(stream));
}

std::string to_hex(std::uint64_t v);

}  // namespace hydra
