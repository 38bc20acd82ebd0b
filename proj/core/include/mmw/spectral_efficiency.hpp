// SPDX-License-Identifier: Apache-2.0
//
// Achievable rates: coherent (perfect CSI) log-det rates, effective-channel
// statistics and the use-and-then-forget (UatF) bound, plus the pilot
// overhead factor rho.

#pragma once

#include "mmw/estimation.hpp"
#include "mmw/types.hpp"

#include <span>

namespace mmw {

struct OverheadModel {
    int pilot_len = 1;             // t_p
    int streams = 1;               // N_s
    double block_len_symbols = 1.0;  // t_c
    double effective_pilot_fraction = 1.0; // pilot symbols charged per block
};

/// FD charges t_p symbols; TD charges t_p * tones_per_port / S.
OverheadModel make_overhead_model(EstimatorKind kind, int t_p, int n_s, double t_c, int s,
                                  int tones_per_port);

/// 1 - (pilot cost + N_s) / t_c. Throws InvalidInput when the result is not
/// in (0, 1] or when t_c <= t_p + N_s.
double overhead_rho(const OverheadModel& model);

/// log2 det(I + (U^H U)^{-1} U^H H F F^H H^H U) with U = Q W.
double rate_perfect(const CMatrix& h, const CMatrix& f, const CMatrix& q, const CMatrix& w);

/// Coherent rate with the other users' precoded signals treated as noise:
/// log2 det(I + A^H (U^H U + sum_i B_i B_i^H)^{-1} A), A = U^H H F,
/// B_i = U^H H F_i.
double rate_perfect_mu(const CMatrix& h, const CMatrix& f, std::span<const CMatrix> interferers,
                       const CMatrix& q, const CMatrix& w);

/// (rho / S) sum_nu rate_perfect(...).
double se_perfect(std::span<const CMatrix> h, std::span<const CMatrix> f,
                  std::span<const CMatrix> q, std::span<const CMatrix> w, double rho);

struct EffectiveChannelStats {
    CMatrix mean_channel;     // E-bar, N_s x N_s
    CMatrix noise_covariance; // C
    long long sample_count = 0;
};

/// Running sums of E and E E^H; shards merge by addition.
class EffectiveAccumulator {
public:
    void add(const CMatrix& e);
    void merge(const EffectiveAccumulator& other);
    long long count() const { return n_; }
    /// Throws InvalidInput with fewer than two samples.
    EffectiveChannelStats stats() const;

private:
    long long n_ = 0;
    CMatrix sum_;
    CMatrix sum_outer_;
};

/// Sample mean, and (n-1)-normalized sample covariance of E plus I.
EffectiveChannelStats effective_stats(std::span<const CMatrix> samples);

/// log2 det(I + E-bar^H C^{-1} E-bar). Throws SingularMatrix for singular C.
double uatf_su_rate(const EffectiveChannelStats& stats);

/// Desired-link samples E_uu plus the cross terms E_ui = W_u^H Q_u^H H_u F_i
/// for every other user i, all drawn on the same fading samples.
class MuEffectiveAccumulator {
public:
    void add(const CMatrix& desired, std::span<const CMatrix> interference);
    void merge(const MuEffectiveAccumulator& other);
    long long count() const { return desired_.count(); }
    /// Fluctuation covariance + sum_i E{E_ui E_ui^H} + I.
    EffectiveChannelStats stats() const;

private:
    EffectiveAccumulator desired_;
    CMatrix interference_outer_;
};

/// Per-user UatF rates. Throws InvalidInput when users differ in sample count.
std::vector<double> uatf_mu_rate(std::span<const MuEffectiveAccumulator> users);

} // namespace mmw
