// SPDX-License-Identifier: Apache-2.0
//
// Geometric cluster channel for a BS/UE pair of uniform linear arrays:
// array responses, UMi street-canyon LOS path loss, per-cluster tap
// quantization, block-fading draws and the tap-to-subcarrier transform.

#pragma once

#include "mmw/rng.hpp"
#include "mmw/types.hpp"

#include <span>

namespace mmw {

struct ArrayGeometry {
    int num_elements = 1;
    double element_spacing = 0.5; // in carrier wavelengths
    Vec2 orientation{0.0, 1.0};   // unit vector along the array axis
};

/// Angle from broadside of `array` toward `direction`, in (-pi, pi].
double angle_from_broadside(const ArrayGeometry& array, Vec2 direction);

/// Element n is exp(j 2 pi spacing n sin(angle)).
CVector array_response(const ArrayGeometry& array, double angle_rad);

/// 3GPP TR 38.901 UMi street canyon LOS, shadow fading off:
/// 32.4 + 21 log10(d) + 20 log10(f_GHz) dB. Throws for d < 1 m.
double umi_path_loss_db(double distance_m, double carrier_ghz);
/// Linear power gain 10^(-PL/10).
double umi_path_loss(double distance_m, double carrier_ghz);

struct PathParams {
    double aoa_rad = 0.0;            // at the UE
    double aod_rad = 0.0;            // at the BS
    int tap_index = 0;
    std::vector<double> tap_powers;  // length L, linear
    bool is_los = false;
};

struct PropagationGeometry {
    std::vector<PathParams> paths;   // paths[0] is the LOS path
    int num_taps = 0;
    int dropped_paths = 0;           // clusters whose delay exceeded the tap budget
};

struct ArrayPair {
    ArrayGeometry bs;
    ArrayGeometry ue;
};

struct GeometryParams {
    double sample_period_s = 5e-9;
    int num_taps = 4;
    double carrier_ghz = 28.0;
    double reflection_loss_db = 10.0;
    double gain_scale = 1.0; // multiplies every tap power
};

PropagationGeometry build_geometry(Vec2 bs_pos, Vec2 ue_pos, std::span<const Vec2> clusters,
                                   const ArrayPair& arrays, const GeometryParams& params);

/// alpha[i][l]: LOS taps are deterministic sqrt(beta_0); cluster taps are
/// CN(0, beta_i[l]) and exactly zero where beta is zero.
using PathCoefficients = std::vector<std::vector<cd>>;
PathCoefficients draw_small_scale(const PropagationGeometry& geom, RngStream& rng);

struct TapChannel {
    std::vector<CMatrix> taps; // L entries, each K x M
    int block_index = 1;
};

struct FreqChannel {
    std::vector<CMatrix> per_subcarrier; // S entries, each K x M
    int block_index = 1;
};

TapChannel build_tap_channel(const PropagationGeometry& geom, const PathCoefficients& alpha,
                             const ArrayPair& arrays, int block_index = 1);

/// H[nu] = sum_l taps[l] exp(-j 2 pi l nu / S). Throws when L > S.
FreqChannel assemble_freq_channel(const TapChannel& taps, int num_subcarriers);

class BlockClock {
public:
    /// Throws InvalidInput unless T_B / T_C is a positive integer (to 1e-9).
    BlockClock(double coherence_time_s, double beam_coherence_time_s);

    double coherence_time() const { return coherence_time_s_; }
    double beam_coherence_time() const { return beam_coherence_time_s_; }
    int blocks_per_beam() const { return blocks_per_beam_; }
    /// First-stage combiner refresh is due at tau = 1, t+1, 2t+1, ...
    bool refresh_due(int tau) const { return (tau - 1) % blocks_per_beam_ == 0; }
    /// Position of tau inside its beam window, 1-based.
    int window_position(int tau) const { return (tau - 1) % blocks_per_beam_ + 1; }
    double block_start_time(int tau) const { return (tau - 1) * coherence_time_s_; }

private:
    double coherence_time_s_;
    double beam_coherence_time_s_;
    int blocks_per_beam_;
};

struct Trajectory {
    Vec2 start_position_m;
    Vec2 velocity_mps;
};

Vec2 ue_position_at(const Trajectory& traj, double t_s);

} // namespace mmw
