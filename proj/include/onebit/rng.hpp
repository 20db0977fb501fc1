#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace onebit {

/// SplitMix64 finalizer; a bijective mixer on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derives an independent stream seed from a parent seed and a path of
/// indices, so trial t of a sweep never depends on trials before it.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> path) {
    std::uint64_t s = splitmix64(parent);
    for (std::uint64_t index : path) s = splitmix64(s ^ splitmix64(index + 0x632be59bd9b4e019ULL));
    return s;
}

using Rng = std::mt19937_64;

}  // namespace onebit
