#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <random>

namespace noisegate {

/// SplitMix64 finalizer; used to derive independent seeds.
constexpr std::uint64_t splitmix64(std::uint64_t& x) noexcept {
    x += 0x9E3779B97F4A7C15ULL;
    auto z = x;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// xoshiro256** engine. Satisfies UniformRandomBitGenerator, so it plugs into
/// <random> and Boost.Random distributions.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    constexpr explicit Xoshiro256(std::uint64_t seed = 1) noexcept {
        auto x = seed;
        for (auto& v : s_) v = splitmix64(x);
    }

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        const auto result = rotl(s_[1] * 5, 7) * 9;
        const auto t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Uniform double in (0, 1); never returns 0 so it is safe under log().
    constexpr double uniform_open() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    friend constexpr bool operator==(const Xoshiro256&, const Xoshiro256&) = default;

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept {
        return (x << k) | (x >> (64 - k));
    }

    std::array<std::uint64_t, 4> s_{};
};

/// Counter-based stream derivation: the engine for stream `index` depends only
/// on (seed, index), never on how work is scheduled across threads.
constexpr Xoshiro256 make_stream(std::uint64_t seed, std::uint64_t index) noexcept {
    std::uint64_t x = seed;
    const auto a = splitmix64(x);
    std::uint64_t y = a ^ (index * 0xD1B54A32D192ED03ULL);
    const auto b = splitmix64(y);
    return Xoshiro256(b ^ splitmix64(y));
}

/// Uniform double in (0, 1) from any UniformRandomBitGenerator.
template <class Rng>
double uniform_open(Rng& rng) {
    if constexpr (requires { rng.uniform_open(); }) {
        return rng.uniform_open();
    } else {
        for (;;) {
            const double u = std::generate_canonical<double, 53>(rng);
            if (u > 0.0 && u < 1.0) return u;
        }
    }
}

} // namespace noisegate
