#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace clgen {

using Rng = std::mt19937_64;

/// splitmix64 finalizer; used to decorrelate derived seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t hash_name(std::string_view name) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : name) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

/// Seed for a named random stream. Every source of randomness in a run is
/// derived from the run seed through one of these, so two runs with the same
/// seed consume identical streams regardless of execution order.
constexpr std::uint64_t stream_seed(std::uint64_t seed, std::string_view name,
                                    std::uint64_t index = 0) noexcept {
    return mix_seed(mix_seed(seed ^ hash_name(name)) + index);
}

inline Rng make_stream(std::uint64_t seed, std::string_view name, std::uint64_t index = 0) {
    return Rng{stream_seed(seed, name, index)};
}

} // namespace clgen
