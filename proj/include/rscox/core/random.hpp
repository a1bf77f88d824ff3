#pragma once

#include <cstdint>
#include <random>

namespace rscox {

using Rng = std::mt19937_64;

/// Purposes of independent random streams derived from one master seed.
enum class Stream : std::uint64_t {
    Noise = 1,
    Counts = 2,
    McPressure = 3,
    Mala = 4,
    Forecast = 5,
    Bootstrap = 6,
    Replicate = 7,
};

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed for the stream (master, purpose, index). Streams for different
/// indices are independent of scheduling order, which keeps per-cell
/// parallel work reproducible under any worker count.
inline std::uint64_t deriveSeed(std::uint64_t master, Stream purpose, std::uint64_t index)
{
    std::uint64_t h = splitmix64(master);
    h = splitmix64(h ^ static_cast<std::uint64_t>(purpose));
    return splitmix64(h ^ (index * 0xd1b54a32d192ed03ULL));
}

inline Rng makeStream(std::uint64_t master, Stream purpose, std::uint64_t index)
{
    const std::uint64_t s = deriveSeed(master, purpose, index);
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32)};
    return Rng(seq);
}

}  // namespace rscox
