#pragma once

#include <array>
#include <cstdint>

namespace sarvb {

/// SplitMix64 finaliser; used to hash seeds and stream identifiers.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of an independent stream identified by (seed, stream).
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

/// xoshiro256** seeded through SplitMix64, with hand-rolled variate
/// generators so that draws are identical across standard libraries.
///
/// Streams: Rng(seed, s) for distinct s never share state; replications
/// and chains use their own stream id.
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    std::uint64_t next_u64() noexcept;

    /// Uniform on the open interval (0, 1).
    double uniform() noexcept;

    /// Uniform on the open interval (lo, hi).
    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Standard normal via the Marsaglia polar method.
    double normal() noexcept;

    /// Gamma with the given shape and rate (mean shape / rate), Marsaglia-Tsang.
    double gamma(double shape, double rate) noexcept;

private:
    std::array<std::uint64_t, 4> s_{};
    double cached_normal_ = 0.0;
    bool has_cached_normal_ = false;
};

}  // namespace sarvb
