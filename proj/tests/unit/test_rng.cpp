// SPDX-License-Identifier: Apache-2.0

#include "mmw/rng.hpp"

#include <gtest/gtest.h>

#include <random>
#include <set>

using namespace mmw;

TEST(Rng, SameKeySameSequence) {
    const StreamKey key{.seed = 9, .trial = 3, .block = 2, .draw = 1, .purpose = Purpose::Fading};
    RngStream a(key);
    RngStream b(key);
    for (int i = 0; i < 100; ++i) {
        EXPECT_EQ(a(), b());
    }
}

TEST(Rng, KeyFieldsSeparateStreams) {
    const StreamKey base{.seed = 9, .trial = 3, .block = 2, .draw = 1, .purpose = Purpose::Fading};
    std::vector<StreamKey> keys(6, base);
    keys[1].seed = 10;
    keys[2].trial = 4;
    keys[3].block = 3;
    keys[4].purpose = Purpose::UplinkNoise;
    keys[5].user = 1;
    std::set<std::uint64_t> first;
    for (const StreamKey& k : keys) {
        RngStream r(k);
        first.insert(r());
    }
    EXPECT_EQ(first.size(), keys.size());
}

TEST(Rng, UniformRange) {
    RngStream r(1);
    for (int i = 0; i < 10000; ++i) {
        const double u = r.uniform();
        ASSERT_GE(u, 0.0);
        ASSERT_LT(u, 1.0);
    }
}

TEST(Rng, ComplexNormalMoments) {
    RngStream r(2);
    const int n = 200000;
    double power = 0.0;
    cd mean{0.0, 0.0};
    cd pseudo{0.0, 0.0};
    for (int i = 0; i < n; ++i) {
        const cd z = r.complex_normal(2.0);
        power += std::norm(z);
        mean += z;
        pseudo += z * z;
    }
    EXPECT_NEAR(power / n, 2.0, 0.03);
    EXPECT_NEAR(std::abs(mean / static_cast<double>(n)), 0.0, 0.01);
    EXPECT_NEAR(std::abs(pseudo / static_cast<double>(n)), 0.0, 0.03);
}

TEST(Rng, WorksWithStandardDistributions) {
    RngStream r(3);
    std::uniform_int_distribution<int> d(0, 9);
    std::vector<int> hist(10, 0);
    for (int i = 0; i < 10000; ++i) {
        ++hist[d(r)];
    }
    for (int h : hist) {
        EXPECT_GT(h, 800);
    }
}

TEST(Rng, Mix64IsABijectionOnSamples) {
    std::set<std::uint64_t> out;
    for (std::uint64_t i = 0; i < 1000; ++i) {
        out.insert(mix64(i));
    }
    EXPECT_EQ(out.size(), 1000u);
}
