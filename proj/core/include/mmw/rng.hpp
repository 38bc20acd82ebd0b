// SPDX-License-Identifier: Apache-2.0
//
// Keyed random streams. Every draw in a run comes from a stream identified by
// (master seed, trial, block, draw, purpose, user), so adding or removing a
// consumer never shifts anyone else's numbers.

#pragma once

#include "mmw/types.hpp"

#include <cstdint>
#include <limits>

namespace mmw {

enum class Purpose : std::uint32_t {
    ClusterPlacement = 1,
    Fading = 2,
    UplinkNoise = 3,
    DownlinkNoise = 4,
    EffectiveUplinkNoise = 5,
    EffectiveDownlinkNoise = 6,
    Generic = 7,
};

struct StreamKey {
    std::uint64_t seed = 0;
    std::uint64_t trial = 0;
    std::uint64_t block = 0;
    std::uint64_t draw = 0;
    Purpose purpose = Purpose::Generic;
    std::uint32_t user = 0;
};

/// Counter-based SplitMix64 stream. Satisfies UniformRandomBitGenerator;
/// normal variates use Box-Muller so sequences are identical on every platform.
class RngStream {
public:
    using result_type = std::uint64_t;

    explicit RngStream(const StreamKey& key);
    explicit RngStream(std::uint64_t seed) : RngStream(StreamKey{.seed = seed}) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    /// Uniform on [0, 1) with 53 random bits.
    double uniform();
    double normal();
    /// Circularly symmetric complex Gaussian with the given variance.
    cd complex_normal(double variance = 1.0);
    void fill_complex_normal(CMatrix& m, double variance = 1.0);

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

std::uint64_t mix64(std::uint64_t x);

} // namespace mmw
