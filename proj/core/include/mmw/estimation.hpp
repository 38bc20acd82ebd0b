// SPDX-License-Identifier: Apache-2.0
//
// Pilot books and channel estimators.
//
// Frequency-domain (FD) estimation runs an ML de-pilot on every subcarrier.
// Time-domain (TD) estimation observes each transmit port on a sparse,
// equally spaced tone grid, converts those tones to taps and re-synthesizes
// the full band. Ports are separated by distinct tone offsets.

#pragma once

#include "mmw/rng.hpp"
#include "mmw/types.hpp"

#include <span>

namespace mmw {

enum class EstimatorKind { FD, TD };

const char* to_string(EstimatorKind kind);

struct PilotBook {
    CMatrix uplink_full;      // K x t_p, orthonormal rows
    CMatrix uplink_effective; // N_c x t_p, orthonormal rows
    CMatrix downlink;         // N_s x N_s, unitary
    std::vector<int> td_offsets;
};

/// Uplink books are leading rows of the unitary t_p-point DFT; the downlink
/// book is the unitary N_s-point DFT. TD offsets are 0, 1, ... per port.
PilotBook make_pilot_books(int k, int n_c, int n_s, int t_p, int s, int l);

/// Rows 0..rows-1 of the unitary n-point DFT.
CMatrix unitary_dft_rows(int rows, int n);

/// nu_l = offset + round(S l / L). Throws PilotCapacityError when the grid
/// does not fit below S or when offset is outside [0, td_offset_capacity).
std::vector<int> td_pilot_indices(int s, int l, int offset);

/// Number of offsets whose grids are pairwise disjoint and inside [0, S):
/// the smallest spacing of the rounded grid, including the wrap-around gap.
int td_offset_capacity(int s, int l);

/// Offsets of one user's ports: user * ports + p.
std::vector<int> user_td_offsets(int user, int ports);

/// Tone grid of one port over N_sub subbands with L_eff tones each.
std::vector<int> td_subband_pilot_indices(int s, int n_sub, int l_eff, int offset);

/// Y = sqrt(P_r t_p) channel^T Phi + N with N ~ CN(0, noise_std^2).
/// `channel` is ports x M; the result is M x t_p.
CMatrix simulate_uplink_pilot_rx(const CMatrix& channel, const CMatrix& book, double p_r,
                                 RngStream& rng, double noise_std = 1.0);

/// Y pinv(Phi) / scale.
CMatrix ml_depilot(const CMatrix& y, const CMatrix& book, double scale);

/// ml_depilot with the pseudo-inverse computed once.
class MlDepilot {
public:
    MlDepilot(const CMatrix& book, double scale);
    CMatrix operator()(const CMatrix& y) const { return y * pinv_scaled_; }

private:
    CMatrix pinv_scaled_;
};

/// Tone-to-subcarrier interpolator for one index set. The L x L conversion
/// matrix A(l, i) = exp(-j 2 pi l nu_i / S) is inverted numerically.
class TdReconstructor {
public:
    static constexpr double kMaxCondition = 1e8;

    /// Reconstructs the subcarriers [first, first + count). Throws
    /// IllConditionedPilots when cond(A) exceeds kMaxCondition.
    TdReconstructor(int s, std::vector<int> indices, int first = 0, int count = -1);

    /// tones: rows x L de-piloted observations -> rows x count.
    CMatrix reconstruct(const CMatrix& tones) const { return tones * synth_; }
    /// tones -> rows x L taps.
    CMatrix taps(const CMatrix& tones) const { return tones * inv_; }

    const std::vector<int>& indices() const { return indices_; }
    double condition_number() const { return condition_; }
    /// Column nu - first is A^-1 f_nu.
    const CMatrix& synthesis() const { return synth_; }

private:
    std::vector<int> indices_;
    CMatrix inv_;
    CMatrix synth_;
    double condition_ = 1.0;
};

/// Full-band TD reconstruction from de-piloted-by-scale tones. `tones` is
/// rows x L, ordered like `indices`. Returns rows x S.
CMatrix td_estimate(const CMatrix& tones, std::span<const int> indices, int s, double scale);

/// Per-subband reconstruction: columns b*L_eff .. (b+1)*L_eff-1 of `tones`
/// belong to subband b and must sit at td_subband_pilot_indices(...).
CMatrix td_estimate_effective(const CMatrix& tones, std::span<const int> indices, int n_sub,
                              int l_eff, int s, double scale);

/// Cached per-offset reconstructors for repeated estimation.
class TdEstimator {
public:
    TdEstimator(int s, int n_sub, int l_eff, std::span<const int> offsets);

    int num_subcarriers() const { return s_; }
    int tones_per_port() const { return n_sub_ * l_eff_; }
    const std::vector<int>& indices(int port) const { return grids_.at(port).indices; }
    CMatrix reconstruct(int port, const CMatrix& tones) const;

private:
    struct Grid {
        std::vector<int> indices;
        std::vector<TdReconstructor> bands;
    };
    int s_;
    int n_sub_;
    int l_eff_;
    std::vector<Grid> grids_;
};

struct EstimateReport {
    std::vector<CMatrix> estimate; // per subcarrier, same shape as the truth
    double nmse_db = 0.0;
    long long pilot_symbols_spent = 0;
    EstimatorKind method = EstimatorKind::FD;
};

/// FD ML estimate of a ports x M channel on every subcarrier.
EstimateReport estimate_fd(std::span<const CMatrix> channel, const CMatrix& book, double p_r,
                           int t_p, RngStream& rng, double noise_std = 1.0);

/// TD estimate. Each port p transmits on estimator.indices(p) with per-tone
/// energy P_r t_p S / tones_per_port, the same total as FD.
EstimateReport estimate_td(std::span<const CMatrix> channel, const TdEstimator& estimator,
                           double p_r, int t_p, RngStream& rng, double noise_std = 1.0);

inline constexpr double kNmseFloorDb = -300.0;

/// 10 log10(sum ||est - truth||^2 / sum ||truth||^2), floored at -300 dB.
double nmse_db(std::span<const CMatrix> estimate, std::span<const CMatrix> truth);

/// Error and truth energies of one trial.
struct NmseSample {
    double error_energy = 0.0;
    double truth_energy = 0.0;
};

NmseSample nmse_sample(std::span<const CMatrix> estimate, std::span<const CMatrix> truth);

/// Ratio-of-means NMSE over trials with a delta-method standard error.
class NmseAccumulator {
public:
    void add(const NmseSample& s);
    void merge(const NmseAccumulator& other);

    long long count() const { return n_; }
    double nmse_linear() const;
    double nmse_db() const;
    /// Standard error of nmse_db().
    double stderr_db() const;

private:
    long long n_ = 0;
    double se_ = 0.0, st_ = 0.0, see_ = 0.0, stt_ = 0.0, set_ = 0.0;
};

} // namespace mmw
