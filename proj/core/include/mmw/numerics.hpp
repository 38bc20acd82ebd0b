// SPDX-License-Identifier: Apache-2.0
//
// Dense complex-matrix kernels: SVD with a deterministic phase convention,
// right pseudo-inverse, DFT matrices, water-filling and log-determinants.

#pragma once

#include "mmw/types.hpp"

#include <span>

namespace mmw {

struct SvdFactorization {
    CMatrix left_vectors;    // m x m (full) or m x k (thin)
    RVector singular_values; // min(m, n), descending
    CMatrix right_vectors;   // n x n (full) or n x k (thin)
};

enum class SvdMode { Full, Thin };

/// A = U diag(s) V^H. Every left singular vector is rotated so its
/// largest-magnitude entry is real and positive (first index wins on ties);
/// the matching right vector gets the same rotation. Throws InvalidInput on
/// non-finite entries.
SvdFactorization svd(const CMatrix& a, SvdMode mode = SvdMode::Full);

/// A^H (A A^H)^{-1} for a full-row-rank A. Throws SingularMatrix when
/// sigma_min / sigma_max <= kRankTolerance.
CMatrix pseudo_inverse(const CMatrix& a);

/// Moore-Penrose inverse of a full-column-rank A, (A^H A)^{-1} A^H.
CMatrix left_pseudo_inverse(const CMatrix& a);

inline constexpr double kRankTolerance = 1e-12;

/// Unnormalized n-point DFT matrix, entry (a, b) = exp(-j 2 pi a b / n).
CMatrix dft_matrix(int n);

struct PowerAllocation {
    std::vector<double> per_stream_power;
    double water_level = 0.0;
};

/// Maximizes sum log2(1 + P_i g_i) subject to sum P_i = budget, P_i >= 0.
/// Gains <= 0 never receive power. Throws InvalidInput when no gain is
/// positive or the budget is not positive.
PowerAllocation water_fill(std::span<const double> channel_gains, double budget);

/// log2 det(I + X) for Hermitian positive semidefinite X, via Cholesky.
double log2det_identity_plus(const CMatrix& x);

/// log2 det(I + A^H C^{-1} A) for Hermitian positive definite C.
/// Throws SingularMatrix when C is not positive definite.
double log2det_whitened(const CMatrix& a, const CMatrix& c);

double frobenius_sq(const CMatrix& a);

} // namespace mmw
