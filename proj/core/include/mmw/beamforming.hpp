// SPDX-License-Identifier: Apache-2.0
//
// Precoders and the two-stage receive combiner.

#pragma once

#include "mmw/numerics.hpp"
#include "mmw/types.hpp"

#include <span>

namespace mmw {

struct Precoder {
    CMatrix f; // M x N_s
    PowerAllocation power;
};

/// F = V(:, 1:N_s) diag(sqrt(P)) with P water-filled over the squared
/// singular values of `channel_estimate` (rows x M). Throws SingularMatrix
/// when sigma_{N_s} <= 1e-12 sigma_max.
Precoder svd_precoder(const CMatrix& channel_estimate, int n_s, double p_t);

/// First N_c left singular vectors of the precoded estimate B (K x N_s).
/// When B has at most N_c columns, its leading left singular vectors U_1 are
/// replaced by the polar factor U_1 V^H, which spans the same subspace and
/// makes Q^H B Hermitian positive semidefinite.
CMatrix select_first_stage(const CMatrix& precoded_estimate, int n_c);

/// Frequency-flat first stage: first N_c left singular vectors of the
/// horizontally stacked estimates [B_0, B_1, ...].
CMatrix select_first_stage_stacked(std::span<const CMatrix> precoded_estimates, int n_c);

/// [I_{N_s}; 0], N_c x N_s.
CMatrix init_second_stage(int n_c, int n_s);

/// Orthonormal basis of the first N_s left singular vectors of the effective
/// estimate D (N_c x N_s). With N_s == cols(D) the basis is the polar factor
/// U V^H, so W^H D is Hermitian positive semidefinite.
CMatrix update_second_stage(const CMatrix& effective_estimate, int n_s);

/// Regularization U sigma_n^2 / P_t with sigma_n^2 = 1.
double mmse_regularization(int num_users, double p_t);

struct MuPrecoder {
    CMatrix f;        // M x N_s
    double eta = 0.0; // scale that sets ||f||_F^2 = P_t
};

/// eta (H^H H + mu I)^{-1} H^H for a rows x M estimate. When rows > N_s the
/// directions of the N_s largest channel singular values are kept. Throws
/// SingularMatrix for mu = 0 and a rank-deficient estimate.
MuPrecoder mu_mmse_precoder(const CMatrix& channel_estimate, double mu, int n_s, double p_t);

struct BeamformerState {
    std::vector<CMatrix> precoders;    // F[nu], M x N_s
    std::vector<CMatrix> first_stage;  // Q[nu], K x N_c
    std::vector<CMatrix> second_stage; // W[nu], N_c x N_s
    std::vector<PowerAllocation> power_alloc;
};

struct MuPrecoderSet {
    std::vector<std::vector<CMatrix>> precoders;   // [user][nu]
    std::vector<std::vector<double>> normalizations; // [user][nu]
    double regularization = 0.0;
};

} // namespace mmw
