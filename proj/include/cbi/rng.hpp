#pragma once

#include <cstdint>
#include <limits>

namespace cbi {

/// SplitMix64: a counter-based generator. Output i is a fixed bijective mix of
/// seed + i * 0x9e3779b97f4a7c15, so streams are reproducible on every platform.
/// Satisfies UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit SplitMix64(std::uint64_t seed = 0) noexcept : state_(seed) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    result_type operator()() noexcept {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix(state_);
    }

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform01() noexcept { return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

/// Seed of the independent substream for (seed, replicate index).
inline std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) noexcept {
    return SplitMix64::mix(SplitMix64::mix(seed) ^ (index * 0xd1b54a32d192ed03ULL + 0x632be59bd9b4e019ULL));
}

}  // namespace cbi
