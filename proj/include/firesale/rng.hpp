#pragma once

#include <cstdint>
#include <limits>

namespace firesale {

/// SplitMix64: a counter-based generator. Every (seed, stream...) key
/// yields an independent, reproducible sequence, so parallel runs do not
/// depend on scheduling. Satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t state) : state_(state) {}

    /// Generator for run `b` of group `a` under `seed`.
    static SplitMix64 stream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
        return SplitMix64(mix(mix(mix(seed) ^ (a + 0x632be59bd9b4e019ULL)) ^ (b + 0x9e3779b97f4a7c15ULL)));
    }

    static constexpr std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    static constexpr std::uint64_t min() { return 0; }
    static constexpr std::uint64_t max() { return std::numeric_limits<std::uint64_t>::max(); }

private:
    std::uint64_t state_;
};

} // namespace firesale
