// SPDX-License-Identifier: Apache-2.0

#include "mmw/channel.hpp"

#include <sstream>

namespace mmw {

double angle_from_broadside(const ArrayGeometry& array, Vec2 direction) {
    const Vec2 axis = array.orientation;
    const Vec2 normal{axis.y, -axis.x};
    return std::atan2(direction.dot(axis), direction.dot(normal));
}

CVector array_response(const ArrayGeometry& array, double angle_rad) {
    CVector a(array.num_elements);
    const double step = 2.0 * kPi * array.element_spacing * std::sin(angle_rad);
    for (int n = 0; n < array.num_elements; ++n) {
        a(n) = std::polar(1.0, step * n);
    }
    return a;
}

double umi_path_loss_db(double distance_m, double carrier_ghz) {
    if (!(distance_m >= 1.0)) {
        std::ostringstream msg;
        msg << "umi_path_loss: distance " << distance_m << " m is below the 1 m model floor";
        throw InvalidInput(msg.str());
    }
    if (!(carrier_ghz > 0.0)) {
        throw InvalidInput("umi_path_loss: carrier frequency must be positive");
    }
    return 32.4 + 21.0 * std::log10(distance_m) + 20.0 * std::log10(carrier_ghz);
}

double umi_path_loss(double distance_m, double carrier_ghz) {
    return std::pow(10.0, -umi_path_loss_db(distance_m, carrier_ghz) / 10.0);
}

PropagationGeometry build_geometry(Vec2 bs_pos, Vec2 ue_pos, std::span<const Vec2> clusters,
                                   const ArrayPair& arrays, const GeometryParams& params) {
    if (bs_pos == ue_pos) {
        throw InvalidInput("build_geometry: UE and BS positions coincide");
    }
    if (params.num_taps < 1 || !(params.sample_period_s > 0.0)) {
        throw InvalidInput("build_geometry: need num_taps >= 1 and a positive sample period");
    }
    const int taps = params.num_taps;
    const double reflection = std::pow(10.0, -params.reflection_loss_db / 10.0);

    PropagationGeometry geom;
    geom.num_taps = taps;

    const Vec2 bs_to_ue = ue_pos - bs_pos;
    const double direct = bs_to_ue.norm();
    PathParams los;
    los.is_los = true;
    los.aod_rad = angle_from_broadside(arrays.bs, bs_to_ue);
    los.aoa_rad = angle_from_broadside(arrays.ue, bs_pos - ue_pos);
    los.tap_index = 0;
    los.tap_powers.assign(taps, 0.0);
    los.tap_powers[0] =
        params.gain_scale * umi_path_loss(std::max(direct, 1.0), params.carrier_ghz);
    geom.paths.push_back(std::move(los));

    for (const Vec2& c : clusters) {
        const double d1 = (c - bs_pos).norm();
        const double d2 = (ue_pos - c).norm();
        const double excess_s = (d1 + d2 - direct) / kSpeedOfLight;
        int tap = static_cast<int>(std::lround(excess_s / params.sample_period_s));
        tap = std::max(tap, 1);
        if (tap > taps - 1) {
            ++geom.dropped_paths;
            continue;
        }
        PathParams p;
        // Degenerate cluster positions fall back to the LOS direction.
        p.aod_rad = d1 > 0.0 ? angle_from_broadside(arrays.bs, c - bs_pos)
                             : geom.paths[0].aod_rad;
        p.aoa_rad = d2 > 0.0 ? angle_from_broadside(arrays.ue, c - ue_pos)
                             : geom.paths[0].aoa_rad;
        p.tap_index = tap;
        p.tap_powers.assign(taps, 0.0);
        p.tap_powers[tap] = params.gain_scale * reflection *
                            umi_path_loss(std::max(d1 + d2, 1.0), params.carrier_ghz);
        geom.paths.push_back(std::move(p));
    }
    return geom;
}

PathCoefficients draw_small_scale(const PropagationGeometry& geom, RngStream& rng) {
    PathCoefficients alpha;
    alpha.reserve(geom.paths.size());
    for (const PathParams& p : geom.paths) {
        std::vector<cd> a(p.tap_powers.size(), cd{0.0, 0.0});
        for (std::size_t l = 0; l < p.tap_powers.size(); ++l) {
            const double beta = p.tap_powers[l];
            if (beta <= 0.0) {
                continue;
            }
            a[l] = p.is_los ? cd{std::sqrt(beta), 0.0} : rng.complex_normal(beta);
        }
        alpha.push_back(std::move(a));
    }
    return alpha;
}

TapChannel build_tap_channel(const PropagationGeometry& geom, const PathCoefficients& alpha,
                             const ArrayPair& arrays, int block_index) {
    const int k = arrays.ue.num_elements;
    const int m = arrays.bs.num_elements;
    TapChannel out;
    out.block_index = block_index;
    out.taps.assign(geom.num_taps, CMatrix::Zero(k, m));
    for (std::size_t i = 0; i < geom.paths.size(); ++i) {
        const PathParams& p = geom.paths[i];
        const CVector ar = array_response(arrays.ue, p.aoa_rad);
        const CVector at = array_response(arrays.bs, p.aod_rad);
        const CMatrix outer = ar * at.transpose();
        for (int l = 0; l < geom.num_taps; ++l) {
            if (alpha[i][l] != cd{0.0, 0.0}) {
                out.taps[l] += alpha[i][l] * outer;
            }
        }
    }
    return out;
}

FreqChannel assemble_freq_channel(const TapChannel& taps, int num_subcarriers) {
    const int l_taps = static_cast<int>(taps.taps.size());
    if (num_subcarriers < 1 || l_taps > num_subcarriers) {
        throw InvalidInput("assemble_freq_channel: need 1 <= L <= S");
    }
    FreqChannel out;
    out.block_index = taps.block_index;
    if (l_taps == 0) {
        return out;
    }
    const Eigen::Index rows = taps.taps[0].rows();
    const Eigen::Index cols = taps.taps[0].cols();
    out.per_subcarrier.assign(num_subcarriers, CMatrix::Zero(rows, cols));
    std::vector<bool> active(l_taps);
    for (int l = 0; l < l_taps; ++l) {
        active[l] = !taps.taps[l].isZero(0.0);
    }
    for (int nu = 0; nu < num_subcarriers; ++nu) {
        CMatrix& h = out.per_subcarrier[nu];
        for (int l = 0; l < l_taps; ++l) {
            if (!active[l]) {
                continue;
            }
            const long long k = (static_cast<long long>(l) * nu) % num_subcarriers;
            h += std::polar(1.0, -2.0 * kPi * static_cast<double>(k) / num_subcarriers) *
                 taps.taps[l];
        }
    }
    return out;
}

BlockClock::BlockClock(double coherence_time_s, double beam_coherence_time_s)
    : coherence_time_s_(coherence_time_s), beam_coherence_time_s_(beam_coherence_time_s) {
    if (!(coherence_time_s > 0.0) || !(beam_coherence_time_s > 0.0)) {
        throw InvalidInput("BlockClock: coherence times must be positive");
    }
    const double ratio = beam_coherence_time_s / coherence_time_s;
    const double rounded = std::round(ratio);
    if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
        std::ostringstream msg;
        msg << "BlockClock: T_B / T_C = " << ratio << " is not a positive integer";
        throw InvalidInput(msg.str());
    }
    blocks_per_beam_ = static_cast<int>(rounded);
}

Vec2 ue_position_at(const Trajectory& traj, double t_s) {
    return traj.start_position_m + t_s * traj.velocity_mps;
}

} // namespace mmw
