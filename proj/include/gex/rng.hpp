#pragma once

#include <cstdint>
#include <random>

namespace gex {

// Derives a decorrelated 64-bit seed for a numbered stream from a base seed.
// SplitMix64 finalizer over seed + stream * golden-ratio increment; adjacent
// (seed, stream) pairs map to unrelated states.
inline std::uint64_t stream_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Deterministic per-stream generator. uniform01() is strictly inside (0,1)
// so that quantile transforms never see 0 or 1.
class Rng {
public:
    Rng(std::uint64_t seed, std::uint64_t stream)
        : gen_(stream_seed(seed, stream)) {}

    double uniform01() {
        return (static_cast<double>(gen_() >> 11) + 0.5) * 0x1.0p-53;
    }

    std::uint64_t raw() { return gen_(); }

private:
    std::mt19937_64 gen_;
};

}  // namespace gex
