#pragma once

// Seeded, splittable random streams.
//
// A run is identified by a 64-bit seed. Work is cut into chunks of a fixed
// size; chunk c draws from the xoshiro256** state obtained by seeding with
// SplitMix64(seed) and applying the 2^128-step jump c times. Substreams are
// therefore disjoint for any realistic number of draws, and the value drawn
// at (seed, chunk, index) does not depend on how chunks are scheduled.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>

namespace carousel {

class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t operator()()
    {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    std::uint64_t state_;
};

/// xoshiro256** 1.0 (Blackman & Vigna), satisfies UniformRandomBitGenerator.
class Xoshiro256 {
public:
    using result_type = std::uint64_t;

    explicit Xoshiro256(std::uint64_t seed = 0)
    {
        SplitMix64 sm(seed);
        for (auto& w : s_)
            w = sm();
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()()
    {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Advances the state by 2^128 draws.
    void jump()
    {
        static constexpr std::array<std::uint64_t, 4> kJump = {
            0x180ec6d33cfd0abaULL, 0xd5a61266f0c9392cULL, 0xa9582618e03fc9aaULL, 0x39abdc4529b1661cULL};
        std::array<std::uint64_t, 4> acc{};
        for (std::uint64_t word : kJump) {
            for (int b = 0; b < 64; ++b) {
                if (word & (std::uint64_t{1} << b)) {
                    for (int i = 0; i < 4; ++i)
                        acc[i] ^= s_[i];
                }
                (*this)();
            }
        }
        s_ = acc;
    }

    bool operator==(const Xoshiro256&) const = default;

    using State = std::array<std::uint64_t, 4>;
    const State& state() const noexcept { return s_; }

    /// Raw state constructor; the all-zero state is a fixed point and is rejected.
    static Xoshiro256 from_state(const State& s)
    {
        if ((s[0] | s[1] | s[2] | s[3]) == 0)
            throw std::invalid_argument("xoshiro256** state must not be all zero");
        Xoshiro256 g;
        g.s_ = s;
        return g;
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::array<std::uint64_t, 4> s_{};
};

/// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Xoshiro256& rng)
{
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform on the open interval (0, 1).
inline double uniform_open01(Xoshiro256& rng)
{
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Unit-mean exponential, strictly positive.
inline double exponential1(Xoshiro256& rng)
{
    return -std::log(uniform_open01(rng));
}

/// Seed for an independent sub-experiment identified by `tag`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag)
{
    SplitMix64 sm(seed ^ (tag * 0xd1342543de82ef95ULL));
    sm();
    return sm();
}

} // namespace carousel
