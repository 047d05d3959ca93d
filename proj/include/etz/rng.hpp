#pragma once

// Counter-keyed random streams.
//
// Generator: SplitMix64 (Steele, Lea & Flood, 2014), constants as published
// in the reference implementation; stream layout version 1. Every draw in
// the library comes from a stream keyed by (seed, domain, replicate, subject),
// so results do not depend on the order or the thread in which streams are
// consumed. Gaussian variates use boost::random::normal_distribution, whose
// ziggurat is implemented in Boost itself and therefore portable, unlike
// std::normal_distribution.

#include <cstdint>
#include <limits>

namespace etz::rng {

inline constexpr int kStreamLayoutVersion = 1;

constexpr std::uint64_t splitmix64_mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Independent uses of the same seed are separated by domain tags.
enum class Domain : std::uint64_t {
    outcomes = 1,
    assignment = 2,
    bias_study = 3,
    power_check = 4,
};

constexpr std::uint64_t stream_key(std::uint64_t seed, Domain domain, std::uint64_t replicate,
                                   std::uint64_t subject) noexcept {
    constexpr std::uint64_t golden = 0x9E3779B97F4A7C15ULL;
    std::uint64_t h = splitmix64_mix(seed + golden);
    h = splitmix64_mix(h ^ (static_cast<std::uint64_t>(domain) * golden));
    h = splitmix64_mix(h ^ (replicate + 0x632BE59BD9B4E019ULL));
    h = splitmix64_mix(h ^ (subject + 0xD1B54A32D192ED03ULL));
    return h;
}

/// SplitMix64 as a UniformRandomBitGenerator.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    explicit constexpr SplitMix64(std::uint64_t state) noexcept : state_(state) {}

    SplitMix64(std::uint64_t seed, Domain domain, std::uint64_t replicate,
               std::uint64_t subject) noexcept
        : state_(stream_key(seed, domain, replicate, subject)) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept {
        return std::numeric_limits<result_type>::max();
    }

    constexpr result_type operator()() noexcept {
        state_ += 0x9E3779B97F4A7C15ULL;
        return splitmix64_mix(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept {
        return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
    }

private:
    std::uint64_t state_;
};

/// Standard normal variate drawn from `gen`.
double standard_normal(SplitMix64& gen);

}  // namespace etz::rng
