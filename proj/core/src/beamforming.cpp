// SPDX-License-Identifier: Apache-2.0

#include "mmw/beamforming.hpp"

#include <sstream>

namespace mmw {

namespace {

// Full U only when more columns are requested than the thin factor holds.
SvdFactorization svd_for_columns(const CMatrix& a, Eigen::Index wanted) {
    const Eigen::Index thin = std::min(a.rows(), a.cols());
    return svd(a, wanted > thin ? SvdMode::Full : SvdMode::Thin);
}

// Leading cols(a) left singular vectors rotated to U V^H; the rest unchanged.
CMatrix oriented_left_vectors(const CMatrix& a, Eigen::Index wanted) {
    const SvdFactorization d = svd_for_columns(a, wanted);
    CMatrix u = d.left_vectors.leftCols(wanted);
    const Eigen::Index c = a.cols();
    if (c <= wanted && c <= a.rows()) {
        u.leftCols(c) = d.left_vectors.leftCols(c) * d.right_vectors.leftCols(c).adjoint();
    }
    return u;
}

} // namespace

Precoder svd_precoder(const CMatrix& channel_estimate, int n_s, double p_t) {
    const Eigen::Index rank_cap = std::min(channel_estimate.rows(), channel_estimate.cols());
    if (n_s < 1 || n_s > rank_cap) {
        throw InvalidInput("svd_precoder: need 1 <= N_s <= min(rows, cols)");
    }
    if (!(p_t > 0.0)) {
        throw InvalidInput("svd_precoder: P_t must be positive");
    }
    const SvdFactorization d = svd(channel_estimate, SvdMode::Thin);
    const double smax = d.singular_values(0);
    const double sns = d.singular_values(n_s - 1);
    if (!(sns > kRankTolerance * smax)) {
        std::ostringstream msg;
        msg << "svd_precoder: N_s = " << n_s << " exceeds the numerical rank (sigma_" << n_s
            << " = " << sns << ", sigma_max = " << smax << ")";
        throw SingularMatrix(msg.str());
    }
    std::vector<double> gains(n_s);
    for (int i = 0; i < n_s; ++i) {
        gains[i] = d.singular_values(i) * d.singular_values(i);
    }
    Precoder out;
    out.power = water_fill(gains, p_t);
    out.f = d.right_vectors.leftCols(n_s);
    for (int i = 0; i < n_s; ++i) {
        out.f.col(i) *= std::sqrt(out.power.per_stream_power[i]);
    }
    return out;
}

CMatrix select_first_stage(const CMatrix& precoded_estimate, int n_c) {
    if (n_c < 1 || n_c > precoded_estimate.rows()) {
        throw InvalidInput("select_first_stage: need 1 <= N_c <= K");
    }
    return oriented_left_vectors(precoded_estimate, n_c);
}

CMatrix select_first_stage_stacked(std::span<const CMatrix> precoded_estimates, int n_c) {
    if (precoded_estimates.empty()) {
        throw InvalidInput("select_first_stage_stacked: no estimates");
    }
    const Eigen::Index k = precoded_estimates[0].rows();
    Eigen::Index cols = 0;
    for (const CMatrix& b : precoded_estimates) {
        cols += b.cols();
    }
    CMatrix stacked(k, cols);
    Eigen::Index at = 0;
    for (const CMatrix& b : precoded_estimates) {
        stacked.middleCols(at, b.cols()) = b;
        at += b.cols();
    }
    return select_first_stage(stacked, n_c);
}

CMatrix init_second_stage(int n_c, int n_s) {
    if (n_s < 1 || n_s > n_c) {
        throw InvalidInput("init_second_stage: need 1 <= N_s <= N_c");
    }
    return CMatrix::Identity(n_c, n_s);
}

CMatrix update_second_stage(const CMatrix& effective_estimate, int n_s) {
    if (n_s < 1 || n_s > effective_estimate.rows()) {
        throw InvalidInput("update_second_stage: need 1 <= N_s <= N_c");
    }
    return oriented_left_vectors(effective_estimate, n_s);
}

double mmse_regularization(int num_users, double p_t) {
    if (num_users < 1 || !(p_t > 0.0)) {
        throw InvalidInput("mmse_regularization: need U >= 1 and P_t > 0");
    }
    return static_cast<double>(num_users) / p_t;
}

MuPrecoder mu_mmse_precoder(const CMatrix& channel_estimate, double mu, int n_s, double p_t) {
    const Eigen::Index rows = channel_estimate.rows();
    if (n_s < 1 || n_s > rows || rows > channel_estimate.cols()) {
        throw InvalidInput("mu_mmse_precoder: need 1 <= N_s <= rows <= M");
    }
    if (!(mu >= 0.0) || !(p_t > 0.0)) {
        throw InvalidInput("mu_mmse_precoder: need mu >= 0 and P_t > 0");
    }
    // (H^H H + mu I)^{-1} H^H = V diag(s / (s^2 + mu)) U^H.
    const SvdFactorization d = svd(channel_estimate, SvdMode::Thin);
    const RVector& s = d.singular_values;
    if (mu == 0.0 && !(s(rows - 1) > kRankTolerance * s(0))) {
        std::ostringstream msg;
        msg << "mu_mmse_precoder: mu = 0 with rank-deficient estimate, sigma_min/sigma_max = "
            << (s(0) > 0.0 ? s(rows - 1) / s(0) : 0.0);
        throw SingularMatrix(msg.str());
    }
    RVector g(rows);
    for (Eigen::Index i = 0; i < rows; ++i) {
        const double den = s(i) * s(i) + mu;
        g(i) = den > 0.0 ? s(i) / den : 0.0;
    }
    MuPrecoder out;
    if (rows == n_s) {
        out.f = d.right_vectors * g.asDiagonal() * d.left_vectors.adjoint();
    } else {
        out.f = d.right_vectors.leftCols(n_s) * g.head(n_s).asDiagonal();
    }
    const double norm_sq = out.f.squaredNorm();
    if (!(norm_sq > 0.0)) {
        throw SingularMatrix("mu_mmse_precoder: estimate is identically zero");
    }
    out.eta = std::sqrt(p_t / norm_sq);
    out.f *= out.eta;
    return out;
}

} // namespace mmw
