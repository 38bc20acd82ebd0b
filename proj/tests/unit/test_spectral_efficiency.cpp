// SPDX-License-Identifier: Apache-2.0

#include "mmw/spectral_efficiency.hpp"
#include "mmw/beamforming.hpp"
#include "mmw/numerics.hpp"
#include "test_util.hpp"

#include <gtest/gtest.h>

using namespace mmw;
using mmw::test::max_abs;
using mmw::test::random_matrix;

TEST(Overhead, FdAndTdPilotCost) {
    const OverheadModel fd = make_overhead_model(EstimatorKind::FD, 4, 2, 200.0, 64, 64);
    const OverheadModel td = make_overhead_model(EstimatorKind::TD, 4, 2, 200.0, 64, 4);
    EXPECT_DOUBLE_EQ(overhead_rho(fd), 1.0 - 6.0 / 200.0);
    EXPECT_DOUBLE_EQ(overhead_rho(td), 1.0 - (4.0 * 4.0 / 64.0 + 2.0) / 200.0);
    EXPECT_GT(overhead_rho(td), overhead_rho(fd));
}

TEST(Overhead, InvalidBlocks) {
    EXPECT_THROW(overhead_rho(make_overhead_model(EstimatorKind::FD, 4, 2, 6.0, 64, 64)),
                 InvalidInput);
    EXPECT_THROW(make_overhead_model(EstimatorKind::TD, 4, 2, 200.0, 64, 65), InvalidInput);
}

TEST(Rate, IdentityCombinerIsLogDet) {
    const CMatrix h = random_matrix(3, 6, 1);
    const CMatrix f = random_matrix(6, 2, 2);
    const CMatrix eye = CMatrix::Identity(3, 3);
    const CMatrix hf = h * f;
    EXPECT_NEAR(rate_perfect(h, f, eye, eye), log2det_identity_plus(hf.adjoint() * hf), 1e-10);
}

TEST(Rate, InvariantToCombinerRotation) {
    const CMatrix h = random_matrix(4, 8, 3);
    const CMatrix f = random_matrix(8, 2, 4);
    const CMatrix q = select_first_stage(h * f, 3);
    const CMatrix w = init_second_stage(3, 2);
    const CMatrix rot = update_second_stage(random_matrix(2, 2, 5), 2);
    EXPECT_NEAR(rate_perfect(h, f, q, w), rate_perfect(h, f, q, w * rot), 1e-10);
}

TEST(Rate, InterferenceOnlyLowersRate) {
    const CMatrix h = random_matrix(4, 8, 6);
    const CMatrix f = random_matrix(8, 2, 7);
    const CMatrix q = select_first_stage(h * f, 3);
    const CMatrix w = init_second_stage(3, 2);
    const std::vector<CMatrix> none;
    const std::vector<CMatrix> one{random_matrix(8, 2, 8)};
    EXPECT_DOUBLE_EQ(rate_perfect_mu(h, f, none, q, w), rate_perfect(h, f, q, w));
    EXPECT_LT(rate_perfect_mu(h, f, one, q, w), rate_perfect(h, f, q, w));
}

TEST(Rate, SePerfectAverages) {
    std::vector<CMatrix> h, f, q, w;
    double sum = 0.0;
    for (int i = 0; i < 4; ++i) {
        h.push_back(random_matrix(2, 4, 10 + i));
        f.push_back(random_matrix(4, 1, 20 + i));
        q.push_back(CMatrix::Identity(2, 2));
        w.push_back(CMatrix::Identity(2, 1));
        sum += rate_perfect(h[i], f[i], q[i], w[i]);
    }
    EXPECT_NEAR(se_perfect(h, f, q, w, 0.9), 0.9 * sum / 4.0, 1e-12);
    f.pop_back();
    EXPECT_THROW(se_perfect(h, f, q, w, 0.9), InvalidInput);
}

TEST(Uatf, StatsAreSampleMeanAndCovariance) {
    std::vector<CMatrix> samples;
    for (int i = 0; i < 5; ++i) {
        samples.push_back(random_matrix(2, 2, 30 + i));
    }
    const EffectiveChannelStats st = effective_stats(samples);
    CMatrix mean = CMatrix::Zero(2, 2);
    for (const CMatrix& e : samples) {
        mean += e / 5.0;
    }
    CMatrix cov = CMatrix::Identity(2, 2);
    for (const CMatrix& e : samples) {
        cov += (e - mean) * (e - mean).adjoint() / 4.0;
    }
    EXPECT_LT(max_abs(st.mean_channel - mean), 1e-12);
    EXPECT_LT(max_abs(st.noise_covariance - cov), 1e-12);
    EXPECT_EQ(st.sample_count, 5);
}

TEST(Uatf, NeedsTwoSamples) {
    EffectiveAccumulator acc;
    acc.add(CMatrix::Identity(2, 2));
    EXPECT_THROW(acc.stats(), InvalidInput);
}

TEST(Uatf, DeterministicChannelEqualsCoherentRate) {
    const CMatrix e = random_matrix(2, 2, 40);
    const std::vector<CMatrix> samples(4, e);
    EXPECT_NEAR(uatf_su_rate(effective_stats(samples)),
                log2det_identity_plus(e.adjoint() * e), 1e-10);
}

TEST(Uatf, BelowMeanCoherentRate) {
    const CMatrix mean = 3.0 * random_matrix(2, 2, 41);
    EffectiveAccumulator acc;
    double coherent = 0.0;
    const int n = 2000;
    for (int i = 0; i < n; ++i) {
        const CMatrix e = mean + random_matrix(2, 2, 1000 + i);
        acc.add(e);
        coherent += log2det_identity_plus(e.adjoint() * e) / n;
    }
    EXPECT_LT(uatf_su_rate(acc.stats()), coherent);
}

TEST(Uatf, MergeEqualsSequential) {
    EffectiveAccumulator all, a, b;
    for (int i = 0; i < 9; ++i) {
        const CMatrix e = random_matrix(2, 2, 50 + i);
        all.add(e);
        (i % 2 ? a : b).add(e);
    }
    a.merge(b);
    const EffectiveChannelStats x = all.stats();
    const EffectiveChannelStats y = a.stats();
    EXPECT_LT(max_abs(x.mean_channel - y.mean_channel), 1e-12);
    EXPECT_LT(max_abs(x.noise_covariance - y.noise_covariance), 1e-12);
}

TEST(Uatf, MultiUserWithoutInterferenceMatchesSingleUser) {
    EffectiveAccumulator su;
    std::vector<MuEffectiveAccumulator> mu(1);
    for (int i = 0; i < 6; ++i) {
        const CMatrix e = random_matrix(2, 2, 60 + i);
        su.add(e);
        mu[0].add(e, {});
    }
    EXPECT_DOUBLE_EQ(uatf_mu_rate(mu)[0], uatf_su_rate(su.stats()));
}

TEST(Uatf, InterferenceEntersCovariance) {
    MuEffectiveAccumulator acc;
    const CMatrix x = random_matrix(2, 2, 70);
    for (int i = 0; i < 3; ++i) {
        acc.add(CMatrix::Identity(2, 2), std::vector<CMatrix>{x});
    }
    EXPECT_LT(max_abs(acc.stats().noise_covariance - (CMatrix::Identity(2, 2) + x * x.adjoint())),
              1e-12);
}

TEST(Uatf, UsersMustShareDrawCount) {
    std::vector<MuEffectiveAccumulator> mu(2);
    for (int i = 0; i < 3; ++i) {
        mu[0].add(CMatrix::Identity(1, 1), {});
    }
    mu[1].add(CMatrix::Identity(1, 1), {});
    mu[1].add(CMatrix::Identity(1, 1), {});
    EXPECT_THROW(uatf_mu_rate(mu), InvalidInput);
}
