// SPDX-License-Identifier: Apache-2.0

#include "mmw/channel.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace mmw;
using mmw::test::max_abs;

namespace {

ArrayPair vertical_arrays(int m, int k) {
    return {{m, 0.5, {0.0, 1.0}}, {k, 0.5, {0.0, 1.0}}};
}

} // namespace

TEST(Array, BroadsideAndEndfire) {
    const ArrayGeometry a{4, 0.5, {0.0, 1.0}};
    EXPECT_NEAR(angle_from_broadside(a, {1.0, 0.0}), 0.0, 1e-15);
    EXPECT_NEAR(angle_from_broadside(a, {1.0, 1.0}), kPi / 4, 1e-15);
    EXPECT_NEAR(angle_from_broadside(a, {0.0, 1.0}), kPi / 2, 1e-15);
}

TEST(Array, ResponseIsUnitModulusWithLinearPhase) {
    const ArrayGeometry a{6, 0.5, {0.0, 1.0}};
    const double theta = 0.3;
    const CVector r = array_response(a, theta);
    for (Eigen::Index n = 0; n < r.size(); ++n) {
        EXPECT_NEAR(std::abs(r(n)), 1.0, 1e-15);
        EXPECT_NEAR(std::abs(r(n) - std::polar(1.0, kPi * n * std::sin(theta))), 0.0, 1e-12);
    }
}

TEST(PathLoss, UmiFormula) {
    EXPECT_NEAR(umi_path_loss_db(10.0, 28.0), 32.4 + 21.0 + 20.0 * std::log10(28.0), 1e-12);
    EXPECT_NEAR(umi_path_loss(1.0, 1.0), std::pow(10.0, -3.24), 1e-15);
    EXPECT_THROW(umi_path_loss_db(0.5, 28.0), InvalidInput);
    EXPECT_THROW(umi_path_loss_db(10.0, 0.0), InvalidInput);
}

TEST(Geometry, LosOnTapZeroAndClusterDelay) {
    GeometryParams gp;
    gp.num_taps = 4;
    gp.sample_period_s = 5e-9;
    // Excess path of 3 m is two samples at 5 ns.
    const std::vector<Vec2> clusters{{5.0, std::sqrt(17.25)}};
    const PropagationGeometry g =
        build_geometry({0.0, 0.0}, {10.0, 0.0}, clusters, vertical_arrays(8, 4), gp);
    ASSERT_EQ(g.paths.size(), 2u);
    EXPECT_TRUE(g.paths[0].is_los);
    EXPECT_EQ(g.paths[0].tap_index, 0);
    EXPECT_GT(g.paths[0].tap_powers[0], 0.0);
    EXPECT_EQ(g.paths[1].tap_index, 2);
    EXPECT_GT(g.paths[1].tap_powers[2], 0.0);
    EXPECT_EQ(g.paths[1].tap_powers[0], 0.0);
    EXPECT_LT(g.paths[1].tap_powers[2], g.paths[0].tap_powers[0]);
    EXPECT_EQ(g.dropped_paths, 0);
}

TEST(Geometry, LateClusterIsDropped) {
    GeometryParams gp;
    gp.num_taps = 2;
    const std::vector<Vec2> clusters{{5.0, 30.0}};
    const PropagationGeometry g =
        build_geometry({0.0, 0.0}, {10.0, 0.0}, clusters, vertical_arrays(8, 4), gp);
    EXPECT_EQ(g.paths.size(), 1u);
    EXPECT_EQ(g.dropped_paths, 1);
}

TEST(Geometry, CoincidentEndpointsThrow) {
    EXPECT_THROW(build_geometry({1.0, 1.0}, {1.0, 1.0}, {}, vertical_arrays(2, 2), {}),
                 InvalidInput);
}

TEST(SmallScale, LosDeterministicClusterRandom) {
    GeometryParams gp;
    const std::vector<Vec2> clusters{{5.0, std::sqrt(17.25)}};
    const PropagationGeometry g =
        build_geometry({0.0, 0.0}, {10.0, 0.0}, clusters, vertical_arrays(8, 4), gp);
    RngStream a(1);
    RngStream b(2);
    const PathCoefficients x = draw_small_scale(g, a);
    const PathCoefficients y = draw_small_scale(g, b);
    EXPECT_EQ(x[0][0], y[0][0]);
    EXPECT_NEAR(std::norm(x[0][0]), g.paths[0].tap_powers[0], 1e-18);
    EXPECT_NE(x[1][2], y[1][2]);
    EXPECT_EQ(x[1][0], cd(0.0, 0.0));
}

TEST(SmallScale, ClusterTapVariance) {
    PropagationGeometry g;
    g.num_taps = 2;
    PathParams p;
    p.tap_powers = {0.0, 0.25};
    g.paths.push_back(p);
    RngStream rng(5);
    double acc = 0.0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        acc += std::norm(draw_small_scale(g, rng)[0][1]);
    }
    EXPECT_NEAR(acc / n, 0.25, 0.005);
}

TEST(FreqChannel, MatchesDirectDft) {
    TapChannel taps;
    for (int l = 0; l < 3; ++l) {
        taps.taps.push_back(mmw::test::random_matrix(2, 3, 10 + l));
    }
    const int s = 16;
    const FreqChannel h = assemble_freq_channel(taps, s);
    ASSERT_EQ(h.per_subcarrier.size(), 16u);
    for (int nu = 0; nu < s; ++nu) {
        CMatrix ref = CMatrix::Zero(2, 3);
        for (int l = 0; l < 3; ++l) {
            ref += std::exp(cd(0.0, -2.0 * kPi * l * nu / s)) * taps.taps[l];
        }
        EXPECT_LT(max_abs(h.per_subcarrier[nu] - ref), 1e-12);
    }
}

TEST(FreqChannel, TooManyTapsThrows) {
    TapChannel taps;
    taps.taps.assign(5, CMatrix::Zero(1, 1));
    EXPECT_THROW(assemble_freq_channel(taps, 4), InvalidInput);
}

TEST(FreqChannel, RankOneLosOuterProduct) {
    const ArrayPair arrays = vertical_arrays(8, 4);
    const PropagationGeometry g = build_geometry({0.0, 0.0}, {10.0, 3.0}, {}, arrays, {});
    RngStream rng(1);
    const TapChannel t = build_tap_channel(g, draw_small_scale(g, rng), arrays);
    const CMatrix expect = std::sqrt(g.paths[0].tap_powers[0]) *
                           array_response(arrays.ue, g.paths[0].aoa_rad) *
                           array_response(arrays.bs, g.paths[0].aod_rad).transpose();
    EXPECT_LT(max_abs(t.taps[0] - expect), 1e-15);
}

TEST(BlockClock, WindowBookkeeping) {
    const BlockClock c(0.01, 0.05);
    EXPECT_EQ(c.blocks_per_beam(), 5);
    EXPECT_TRUE(c.refresh_due(1));
    EXPECT_FALSE(c.refresh_due(5));
    EXPECT_TRUE(c.refresh_due(6));
    EXPECT_EQ(c.window_position(7), 2);
    EXPECT_NEAR(c.block_start_time(3), 0.02, 1e-15);
}

TEST(BlockClock, NonIntegerRatioThrows) {
    EXPECT_THROW(BlockClock(0.01, 0.025), InvalidInput);
    EXPECT_THROW(BlockClock(0.0, 0.1), InvalidInput);
}

TEST(Trajectory, LinearMotion) {
    const Trajectory t{{20.0, 10.0}, {0.0, 5.0}};
    const Vec2 p = ue_position_at(t, 1.0);
    EXPECT_DOUBLE_EQ(p.x, 20.0);
    EXPECT_DOUBLE_EQ(p.y, 15.0);
}
