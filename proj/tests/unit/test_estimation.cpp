// SPDX-License-Identifier: Apache-2.0

#include "mmw/estimation.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

#include <numeric>
#include <set>

using namespace mmw;
using mmw::test::max_abs;
using mmw::test::random_matrix;

namespace {

std::vector<CMatrix> random_tap_channel(int k, int m, int l, int s, std::uint64_t seed) {
    RngStream rng(seed);
    std::vector<CMatrix> taps(l, CMatrix(k, m));
    for (CMatrix& t : taps) {
        rng.fill_complex_normal(t);
    }
    std::vector<CMatrix> h(s, CMatrix::Zero(k, m));
    for (int nu = 0; nu < s; ++nu) {
        for (int t = 0; t < l; ++t) {
            h[nu] += std::polar(1.0, -2.0 * kPi * t * nu / s) * taps[t];
        }
    }
    return h;
}

} // namespace

TEST(PilotBooks, OrthonormalRows) {
    const PilotBook b = make_pilot_books(4, 3, 2, 6, 64, 4);
    EXPECT_LT(max_abs(b.uplink_full * b.uplink_full.adjoint() - CMatrix::Identity(4, 4)), 1e-12);
    EXPECT_LT(max_abs(b.uplink_effective * b.uplink_effective.adjoint() - CMatrix::Identity(3, 3)),
              1e-12);
    EXPECT_LT(max_abs(b.downlink * b.downlink.adjoint() - CMatrix::Identity(2, 2)), 1e-12);
    EXPECT_EQ(b.td_offsets, (std::vector<int>{0, 1, 2, 3}));
}

TEST(PilotBooks, ShortPilotThrows) {
    EXPECT_THROW(make_pilot_books(4, 3, 2, 3, 64, 4), InvalidInput);
    EXPECT_THROW(make_pilot_books(4, 3, 2, 4, 4, 8), InvalidInput);
}

TEST(TdGrid, EquallySpacedWithOffset) {
    EXPECT_EQ(td_pilot_indices(64, 4, 0), (std::vector<int>{0, 16, 32, 48}));
    EXPECT_EQ(td_pilot_indices(64, 4, 3), (std::vector<int>{3, 19, 35, 51}));
    EXPECT_EQ(td_offset_capacity(64, 4), 16);
}

TEST(TdGrid, NonDividingLengthRoundsHalfUp) {
    // 10 * l / 4 = 0, 2.5, 5, 7.5
    EXPECT_EQ(td_pilot_indices(10, 4, 0), (std::vector<int>{0, 3, 5, 8}));
    EXPECT_EQ(td_offset_capacity(10, 4), 2);
}

TEST(TdGrid, OffsetOutsideCapacityThrows) {
    EXPECT_THROW(td_pilot_indices(64, 4, 16), PilotCapacityError);
    EXPECT_THROW(td_pilot_indices(64, 4, -1), PilotCapacityError);
}

TEST(TdGrid, UserOffsetsDisjointUpToCapacity) {
    const int s = 64;
    const int l = 4;
    const int k = 4;
    std::set<int> tones;
    for (int u = 0; u < td_offset_capacity(s, l) / k; ++u) {
        for (int off : user_td_offsets(u, k)) {
            for (int nu : td_pilot_indices(s, l, off)) {
                EXPECT_TRUE(tones.insert(nu).second) << "tone " << nu << " reused";
            }
        }
    }
    EXPECT_EQ(tones.size(), static_cast<std::size_t>(s));
}

TEST(TdGrid, SubbandIndicesRepeatPerBand) {
    const std::vector<int> idx = td_subband_pilot_indices(64, 2, 4, 1);
    EXPECT_EQ(idx, (std::vector<int>{1, 9, 17, 25, 33, 41, 49, 57}));
    EXPECT_THROW(td_subband_pilot_indices(64, 3, 4, 0), InvalidInput);
}

TEST(FdEstimation, NoiselessRecoveryIsExact) {
    const CMatrix h = random_matrix(4, 8, 3);
    const CMatrix book = unitary_dft_rows(4, 6);
    RngStream rng(1);
    const CMatrix y = simulate_uplink_pilot_rx(h, book, 10.0, rng, 0.0);
    EXPECT_EQ(y.rows(), 8);
    EXPECT_EQ(y.cols(), 6);
    const CMatrix est = ml_depilot(y, book, std::sqrt(10.0 * 6)).transpose();
    EXPECT_LT(max_abs(est - h), 1e-12);
    const MlDepilot cached(book, std::sqrt(60.0));
    EXPECT_LT(max_abs(cached(y).transpose() - h), 1e-12);
}

TEST(FdEstimation, ErrorVarianceMatchesOracle) {
    const int k = 4;
    const int m = 8;
    const int t_p = 4;
    const double p_r = 5.0;
    const std::vector<CMatrix> h(64, random_matrix(k, m, 8));
    const CMatrix book = unitary_dft_rows(k, t_p);
    NmseAccumulator acc;
    for (int trial = 0; trial < 200; ++trial) {
        RngStream rng(StreamKey{.seed = 2, .trial = static_cast<std::uint64_t>(trial)});
        acc.add(nmse_sample(estimate_fd(h, book, p_r, t_p, rng).estimate, h));
    }
    const double oracle = k * m / (p_r * t_p * h[0].squaredNorm());
    EXPECT_NEAR(acc.nmse_linear() / oracle, 1.0, 0.03);
}

TEST(TdEstimation, NoiselessTapChannelReconstructsExactly) {
    const int s = 32;
    const int l = 4;
    const std::vector<CMatrix> h = random_tap_channel(3, 5, l, s, 4);
    const TdEstimator td(s, 1, l, user_td_offsets(0, 3));
    RngStream rng(1);
    const EstimateReport rep = estimate_td(h, td, 2.0, 3, rng, 0.0);
    for (int nu = 0; nu < s; ++nu) {
        EXPECT_LT(max_abs(rep.estimate[nu] - h[nu]), 1e-11);
    }
    EXPECT_EQ(rep.pilot_symbols_spent, 3LL * l);
    EXPECT_LE(rep.nmse_db, -200.0);
}

TEST(TdEstimation, SubbandReconstructionWithinEachBand) {
    const int s = 32;
    const int l = 2;
    const std::vector<CMatrix> h = random_tap_channel(2, 3, l, s, 5);
    const TdEstimator td(s, 2, 4, user_td_offsets(0, 2));
    RngStream rng(1);
    const EstimateReport rep = estimate_td(h, td, 1.0, 2, rng, 0.0);
    for (int nu = 0; nu < s; ++nu) {
        EXPECT_LT(max_abs(rep.estimate[nu] - h[nu]), 1e-10);
    }
}

TEST(TdEstimation, BeatsFdByGridRatio) {
    const int s = 64;
    const int l = 4;
    const std::vector<CMatrix> h = random_tap_channel(4, 8, l, s, 6);
    const TdEstimator td(s, 1, l, user_td_offsets(0, 4));
    const CMatrix book = unitary_dft_rows(4, 4);
    NmseAccumulator fd;
    NmseAccumulator tda;
    for (int trial = 0; trial < 100; ++trial) {
        RngStream a(StreamKey{.seed = 3, .trial = static_cast<std::uint64_t>(trial)});
        RngStream b(StreamKey{.seed = 4, .trial = static_cast<std::uint64_t>(trial)});
        fd.add(nmse_sample(estimate_fd(h, book, 1.0, 4, a).estimate, h));
        tda.add(nmse_sample(estimate_td(h, td, 1.0, 4, b).estimate, h));
    }
    EXPECT_NEAR(tda.nmse_db() - fd.nmse_db(), 10.0 * std::log10(double(l) / s), 0.3);
}

TEST(TdReconstructor, ConditionAndSynthesis) {
    const TdReconstructor r(64, td_pilot_indices(64, 4, 0));
    EXPECT_NEAR(r.condition_number(), 1.0, 1e-9);
    EXPECT_EQ(r.synthesis().rows(), 4);
    EXPECT_EQ(r.synthesis().cols(), 64);
    // Clustered tones make the conversion matrix ill-conditioned.
    EXPECT_THROW(TdReconstructor(4096, std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8, 9}),
                 IllConditionedPilots);
}

TEST(Nmse, FloorAndMismatch) {
    const std::vector<CMatrix> h{random_matrix(2, 2, 1)};
    EXPECT_EQ(nmse_db(h, h), kNmseFloorDb);
    const std::vector<CMatrix> two{h[0], h[0]};
    EXPECT_THROW(nmse_db(two, h), InvalidInput);
}

TEST(Nmse, AccumulatorMergeEqualsSequential) {
    NmseAccumulator all;
    NmseAccumulator a;
    NmseAccumulator b;
    RngStream rng(9);
    for (int i = 0; i < 50; ++i) {
        const NmseSample s{rng.uniform(), 1.0 + rng.uniform()};
        all.add(s);
        (i < 20 ? a : b).add(s);
    }
    a.merge(b);
    EXPECT_EQ(a.count(), all.count());
    EXPECT_NEAR(a.nmse_db(), all.nmse_db(), 1e-12);
    EXPECT_NEAR(a.stderr_db(), all.stderr_db(), 1e-12);
}
