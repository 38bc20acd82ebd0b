// SPDX-License-Identifier: Apache-2.0

#include "mmw/rng.hpp"

namespace mmw {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

RngStream::RngStream(const StreamKey& key) {
    std::uint64_t h = mix64(key.seed + kGolden);
    h = mix64(h ^ (key.trial + 0x1000000000000001ULL));
    h = mix64(h ^ (key.block + 0x2000000000000003ULL));
    h = mix64(h ^ (key.draw + 0x3000000000000005ULL));
    h = mix64(h ^ (static_cast<std::uint64_t>(key.purpose) + 0x4000000000000007ULL));
    h = mix64(h ^ (static_cast<std::uint64_t>(key.user) + 0x5000000000000009ULL));
    state_ = h;
}

RngStream::result_type RngStream::operator()() {
    state_ += kGolden;
    return mix64(state_);
}

double RngStream::uniform() {
    return static_cast<double>((*this)() >> 11) * 0x1.0p-53;
}

double RngStream::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u1 = 1.0 - uniform(); // (0, 1]
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double t = 2.0 * kPi * u2;
    spare_ = r * std::sin(t);
    has_spare_ = true;
    return r * std::cos(t);
}

cd RngStream::complex_normal(double variance) {
    const double s = std::sqrt(0.5 * variance);
    const double re = normal();
    const double im = normal();
    return {s * re, s * im};
}

void RngStream::fill_complex_normal(CMatrix& m, double variance) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
        for (Eigen::Index i = 0; i < m.rows(); ++i) {
            m(i, j) = complex_normal(variance);
        }
    }
}

} // namespace mmw
