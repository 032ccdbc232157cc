#pragma once

#include <cstdint>
#include <random>

namespace mmq {

using Rng = std::mt19937_64;

/// splitmix64 finalizer.
[[nodiscard]] constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of the stream with the given index under a master seed. Streams for
/// distinct (master, index) pairs are decorrelated by two mixing rounds.
[[nodiscard]] constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) noexcept {
    return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

[[nodiscard]] inline Rng make_stream(std::uint64_t master, std::uint64_t index) {
    return Rng(stream_seed(master, index));
}

}  // namespace mmq
