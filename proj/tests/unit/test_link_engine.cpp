// SPDX-License-Identifier: Apache-2.0

#include "mmw/harness.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace mmw;

namespace {

ScenarioConfig small_desk() {
    ScenarioConfig c = make_preset("desk");
    c.num_blocks = 12;
    c.fading_draws = 4;
    c.trial_count = 2;
    return c;
}

struct Recorded {
    std::vector<CMatrix> q;
    std::vector<CMatrix> w;
};

// Runs one plan with an observer and returns every combiner it used.
Recorded record(const ScenarioConfig& cfg, Scheme scheme) {
    Recorded r;
    LinkOptions o;
    o.on_combiner = [&r](const CMatrix& q, const CMatrix& w) {
        r.q.push_back(q);
        r.w.push_back(w);
    };
    const LinkEngine eng(cfg, {plan_for(scheme, cfg.estimator)}, o);
    eng.run_trial(0);
    return r;
}

} // namespace

TEST(Plans, SchemeMapping) {
    const SchemePlan ideal = plan_for(Scheme::IdealDbf, EstimatorKind::FD);
    EXPECT_TRUE(ideal.perfect_csi);
    EXPECT_EQ(ideal.estimator, EstimatorKind::FD);
    const SchemePlan fqfd = plan_for(Scheme::FixedQFd, EstimatorKind::TD);
    EXPECT_EQ(fqfd.estimator, EstimatorKind::FD);
    EXPECT_EQ(fqfd.refresh, Refresh::BeamWindow);
    EXPECT_EQ(fqfd.q_mode, QMode::PerSubcarrier);
    const SchemePlan fqw = plan_for(Scheme::FixedQW, EstimatorKind::TD);
    EXPECT_EQ(fqw.refresh, Refresh::Never);
    EXPECT_TRUE(fqw.freeze_second_stage);
    EXPECT_EQ(plan_for(Scheme::Continuous, EstimatorKind::TD).refresh, Refresh::EveryBlock);
}

TEST(Engine, RejectsBadUserCounts) {
    const ScenarioConfig c = small_desk();
    LinkOptions o;
    o.num_users = 2;
    EXPECT_THROW(LinkEngine(c, {}, o), InvalidInput);
    ScenarioConfig mu = make_preset("desk", true);
    o.multi_user = false;
    EXPECT_THROW(LinkEngine(mu, {}, o), InvalidInput);
}

TEST(Engine, RejectsPilotOverflow) {
    ScenarioConfig c = make_preset("desk", true);
    c.s = 16;
    c.se_subcarrier_stride = 1;
    LinkOptions o;
    o.num_users = 3;
    o.multi_user = true;
    EXPECT_THROW(LinkEngine(c, {}, o), PilotCapacityError);
}

TEST(Engine, ClustersInsideLayoutRectangle) {
    const LinkEngine eng(small_desk(), {}, LinkOptions{});
    const ScenarioConfig& c = eng.config();
    const Vec2 a = c.bs_position;
    const Vec2 b = c.ue_trajectories.front().start_position_m;
    for (std::uint64_t t = 0; t < 20; ++t) {
        const std::vector<Vec2> cl = eng.draw_clusters(t);
        ASSERT_EQ(cl.size(), static_cast<std::size_t>(c.n_cl));
        for (const Vec2& p : cl) {
            EXPECT_GE(p.x, std::min(a.x, b.x));
            EXPECT_LE(p.x, std::max(a.x, b.x));
            EXPECT_GE(p.y, std::min(a.y, b.y));
            EXPECT_LE(p.y, std::max(a.y, b.y));
        }
    }
}

TEST(Engine, TrialIsDeterministicAndDrawsAreShared) {
    const ScenarioConfig c = small_desk();
    const LinkEngine eng(c, trajectory_plans(c), LinkOptions{});
    const TrialResult a = eng.run_trial(1);
    const TrialResult b = eng.run_trial(1);
    ASSERT_EQ(a.blocks.size(), 12u);
    for (std::size_t t = 0; t < a.blocks.size(); ++t) {
        for (std::size_t p = 0; p < a.blocks[t].schemes.size(); ++p) {
            EXPECT_EQ(a.blocks[t].schemes[p].se, b.blocks[t].schemes[p].se);
        }
    }
    for (std::uint64_t x : a.draw_checksums) {
        EXPECT_EQ(x, a.draw_checksums.front());
    }
    EXPECT_NE(eng.run_trial(2).draw_checksums.front(), a.draw_checksums.front());
}

TEST(Engine, OverheadFollowsEstimationMode) {
    const ScenarioConfig c = small_desk();
    const LinkEngine eng(c, trajectory_plans(c), LinkOptions{});
    const TrialResult r = eng.run_trial(0);
    const double rho_fd = overhead_rho(
        make_overhead_model(EstimatorKind::FD, c.t_p, c.n_s, c.t_c, c.s, c.s));
    const double rho_td = overhead_rho(
        make_overhead_model(EstimatorKind::TD, c.t_p, c.n_s, c.t_c, c.s, c.l));
    // Plans in config order: ideal, continuous, fixed-q-td, fixed-q-fd, fixed-qw.
    for (const BlockResult& b : r.blocks) {
        EXPECT_DOUBLE_EQ(b.schemes[0].rho, rho_td);
        EXPECT_DOUBLE_EQ(b.schemes[3].rho, rho_fd);
        EXPECT_GT(b.schemes[2].rho, b.schemes[3].rho);
    }
}

TEST(Engine, IdealUsesCoherentRateOthersUatf) {
    const ScenarioConfig c = small_desk();
    const LinkEngine eng(c, trajectory_plans(c), LinkOptions{});
    const TrialResult r = eng.run_trial(0);
    for (const BlockResult& b : r.blocks) {
        EXPECT_EQ(b.schemes[0].se[0], b.schemes[0].coherent_se[0]);
        for (std::size_t p = 1; p < b.schemes.size(); ++p) {
            EXPECT_EQ(b.schemes[p].se[0], b.schemes[p].uatf_se[0]);
        }
    }
}

TEST(Engine, FixedFirstStageHoldsForBeamWindow) {
    const ScenarioConfig c = small_desk();
    const Recorded r = record(c, Scheme::FixedQTd);
    const std::size_t slots = 64 / c.se_subcarrier_stride;
    const std::size_t per_block = slots * c.fading_draws;
    ASSERT_EQ(r.q.size(), per_block * c.num_blocks);
    for (std::size_t j = 0; j < slots; ++j) {
        // Blocks 2..10 reuse block 1's first stage; block 11 reselects.
        const CMatrix& first = r.q[j];
        for (int tau = 2; tau <= 10; ++tau) {
            EXPECT_EQ(r.q[(tau - 1) * per_block + j], first);
        }
        EXPECT_NE(r.q[10 * per_block + j], first);
    }
}

TEST(Engine, FrozenSecondStageNeverChanges) {
    const ScenarioConfig c = small_desk();
    const Recorded r = record(c, Scheme::FixedQW);
    const std::size_t slots = 64 / c.se_subcarrier_stride;
    const std::size_t per_block = slots * c.fading_draws;
    for (std::size_t i = per_block; i < r.q.size(); ++i) {
        EXPECT_EQ(r.q[i], r.q[i % slots]);
        EXPECT_EQ(r.w[i], r.w[i % slots]);
    }
}

TEST(Engine, CombinersStayOrthonormal) {
    const ScenarioConfig c = small_desk();
    for (Scheme s : all_schemes()) {
        const Recorded r = record(c, s);
        for (std::size_t i = 0; i < r.q.size(); i += 7) {
            EXPECT_LT(mmw::test::orthonormality_error(r.q[i]), 1e-12);
            EXPECT_LT(mmw::test::orthonormality_error(r.q[i] * r.w[i]), 1e-12);
        }
    }
}

TEST(Engine, MultiUserShapes) {
    ScenarioConfig c = make_preset("desk", true);
    c.num_blocks = 2;
    c.fading_draws = 3;
    LinkOptions o;
    o.num_users = 3;
    o.multi_user = true;
    o.per_subcarrier = true;
    const LinkEngine eng(c, {plan_for(Scheme::Continuous, EstimatorKind::TD)}, o);
    const TrialResult r = eng.run_trial(0);
    ASSERT_EQ(r.blocks.size(), 2u);
    const SchemeBlockResult& s = r.blocks[0].schemes[0];
    EXPECT_EQ(s.se.size(), 3u);
    EXPECT_EQ(s.uatf_rate.size(), 3u);
    EXPECT_EQ(s.uatf_rate[0].size(), eng.evaluated_subcarriers().size());
    for (double x : s.se) {
        EXPECT_GT(x, 0.0);
    }
}

TEST(Engine, ChecksumTracksEveryEntry) {
    CMatrix a = CMatrix::Zero(2, 2);
    const std::uint64_t h0 = checksum_update(0, a);
    a(1, 1) = cd{0.0, 1e-300};
    EXPECT_NE(checksum_update(0, a), h0);
}
