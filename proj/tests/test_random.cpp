#include <gtest/gtest.h>

#include <bitset>
#include <cmath>
#include <set>
#include <vector>

#include "carousel/random.hpp"

using namespace carousel;

TEST(SplitMix64, ReferenceOutputsForSeedZero)
{
    SplitMix64 sm(0);
    EXPECT_EQ(sm(), 0xe220a8397b1dcdafULL);
    EXPECT_EQ(sm(), 0x6e789e6aa1b965f4ULL);
    EXPECT_EQ(sm(), 0x06c45d188009454fULL);
}

TEST(Xoshiro256, ReferenceOutputsFromUnitState)
{
    // State {1, 2, 3, 4}; values from a separate arbitrary-precision transcription of the update.
    auto g = Xoshiro256::from_state({1, 2, 3, 4});
    EXPECT_EQ(g(), 11520ULL); // rotl(2 * 5, 7) * 9
    EXPECT_EQ(g(), 0ULL);
    EXPECT_EQ(g(), 1509978240ULL);
    EXPECT_THROW(Xoshiro256::from_state({0, 0, 0, 0}), std::invalid_argument);
}

namespace {

using Bits = std::bitset<256>;
using Matrix = std::vector<Bits>; // row i holds coefficients of output bit i

Bits to_bits(const Xoshiro256::State& s)
{
    Bits b;
    for (int w = 0; w < 4; ++w)
        for (int i = 0; i < 64; ++i)
            b[w * 64 + i] = (s[w] >> i) & 1u;
    return b;
}

Xoshiro256::State from_bits(const Bits& b)
{
    Xoshiro256::State s{};
    for (int w = 0; w < 4; ++w)
        for (int i = 0; i < 64; ++i)
            if (b[w * 64 + i])
                s[w] |= std::uint64_t{1} << i;
    return s;
}

Matrix multiply(const Matrix& a, const Matrix& b)
{
    Matrix c(256);
    for (int i = 0; i < 256; ++i)
        for (int k = 0; k < 256; ++k)
            if (a[i][k])
                c[i] ^= b[k];
    return c;
}

Bits transform(const Matrix& m, const Bits& x)
{
    Bits y;
    for (int i = 0; i < 256; ++i)
        y[i] = (m[i] & x).count() % 2;
    return y;
}

} // namespace

TEST(Xoshiro256, JumpEqualsTransitionMatrixPower)
{
    // The state update is linear over GF(2); build its matrix column by column,
    // square it 128 times and compare with the polynomial jump.
    Matrix step(256);
    for (int j = 0; j < 256; ++j) {
        Bits e;
        e[j] = true;
        auto g = Xoshiro256::from_state(from_bits(e));
        g();
        const Bits col = to_bits(g.state());
        for (int i = 0; i < 256; ++i)
            step[i][j] = col[i];
    }
    Matrix power = step;
    for (int i = 0; i < 128; ++i)
        power = multiply(power, power);

    for (std::uint64_t seed : {1ULL, 42ULL, 0xdeadbeefULL}) {
        Xoshiro256 g(seed);
        const auto expected = from_bits(transform(power, to_bits(g.state())));
        g.jump();
        EXPECT_EQ(g.state(), expected);
    }
}

TEST(Xoshiro256, JumpedStreamsDiffer)
{
    Xoshiro256 a(9);
    Xoshiro256 b = a;
    b.jump();
    std::set<std::uint64_t> seen;
    for (int i = 0; i < 1000; ++i) {
        seen.insert(a());
        seen.insert(b());
    }
    EXPECT_EQ(seen.size(), 2000u);
}

TEST(Uniforms, RangesAndMoments)
{
    Xoshiro256 g(123);
    const int n = 200000;
    double s = 0.0, e = 0.0, e2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = uniform01(g);
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
        s += u;
        const double x = exponential1(g);
        ASSERT_GT(x, 0.0);
        e += x;
        e2 += x * x;
    }
    // Means within 4 standard errors: sd(U) = 1/sqrt(12), sd(X) = 1, sd(X^2) = sqrt(20).
    EXPECT_NEAR(s / n, 0.5, 4.0 / std::sqrt(12.0 * n));
    EXPECT_NEAR(e / n, 1.0, 4.0 / std::sqrt(n));
    EXPECT_NEAR(e2 / n, 2.0, 4.0 * std::sqrt(20.0 / n));
}

TEST(Uniforms, OpenIntervalExcludesEndpoints)
{
    auto g = Xoshiro256::from_state({1, 0, 0, 0});
    for (int i = 0; i < 1000; ++i) {
        const double u = uniform_open01(g);
        ASSERT_GT(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(DeriveSeed, DistinctTagsGiveDistinctSeeds)
{
    std::set<std::uint64_t> seeds;
    for (std::uint64_t tag = 0; tag < 1000; ++tag)
        seeds.insert(derive_seed(7, tag));
    EXPECT_EQ(seeds.size(), 1000u);
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
}
