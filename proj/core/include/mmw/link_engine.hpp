// SPDX-License-Identifier: Apache-2.0
//
// Per-trial link simulation along a trajectory. Every scheme sees the same
// cluster placement, fading draws and noise streams; only the processing
// differs.

#pragma once

#include "mmw/beamforming.hpp"
#include "mmw/scenario.hpp"
#include "mmw/spectral_efficiency.hpp"

#include <cstdint>
#include <functional>
#include <memory>
#include <string>

namespace mmw {

enum class QMode { PerSubcarrier, PerSubband };
enum class Refresh { EveryBlock, BeamWindow, Never };

/// How one scheme acquires CSI and when it reselects its combiners.
struct SchemePlan {
    std::string name;
    bool perfect_csi = false;
    EstimatorKind estimator = EstimatorKind::TD;
    QMode q_mode = QMode::PerSubcarrier;
    Refresh refresh = Refresh::EveryBlock;
    bool freeze_second_stage = false;
};

/// Folds the raw bytes of `m` into a running channel-draw checksum.
std::uint64_t checksum_update(std::uint64_t h, const CMatrix& m);

/// `rho_estimator` sets the overhead charged to the perfect-CSI scheme.
SchemePlan plan_for(Scheme s, EstimatorKind rho_estimator);

struct LinkOptions {
    int num_users = 1;
    /// Per-user MMSE precoders and the interference-aware UatF bound.
    bool multi_user = false;
    /// Keep per-subcarrier rates in the results.
    bool per_subcarrier = false;
    /// Called with every (Q, W) pair used for combining. Must be thread safe
    /// when trials run concurrently.
    std::function<void(const CMatrix& q, const CMatrix& w)> on_combiner;
};

struct SchemeBlockResult {
    double rho = 0.0;
    std::vector<double> se;          // per user: coherent for perfect CSI, UatF otherwise
    std::vector<double> uatf_se;     // per user, rho-weighted
    std::vector<double> coherent_se; // per user, rho-weighted draw mean
    // [user][evaluated subcarrier], unweighted; filled with per_subcarrier.
    std::vector<std::vector<double>> uatf_rate;
    std::vector<std::vector<double>> coherent_mean;
    std::vector<std::vector<double>> coherent_stderr;
};

struct BlockResult {
    int tau = 1;
    std::vector<SchemeBlockResult> schemes;
};

struct TrialResult {
    std::uint64_t trial = 0;
    std::vector<BlockResult> blocks;
    /// Hash of every channel realization each scheme consumed.
    std::vector<std::uint64_t> draw_checksums;
    int dropped_paths = 0;
};

class LinkEngine {
public:
    /// Validates the configuration and the pilot capacity for num_users.
    LinkEngine(ScenarioConfig cfg, std::vector<SchemePlan> plans, LinkOptions opts);

    TrialResult run_trial(std::uint64_t trial) const;

    const std::vector<int>& evaluated_subcarriers() const { return eval_; }
    const std::vector<SchemePlan>& plans() const { return plans_; }
    const ScenarioConfig& config() const { return cfg_; }
    const LinkOptions& options() const { return opts_; }

    /// Uniform in the rectangle spanned by the BS and the first UE start.
    std::vector<Vec2> draw_clusters(std::uint64_t trial) const;
    ArrayPair arrays() const;
    GeometryParams geometry_params() const;
    /// Channel of `user` on every subcarrier for one fading draw.
    std::vector<CMatrix> channel(const PropagationGeometry& geom, std::uint64_t trial, int tau,
                                 int draw, int user) const;

    struct Resources;

private:
    ScenarioConfig cfg_;
    std::vector<SchemePlan> plans_;
    LinkOptions opts_;
    std::vector<int> eval_;
    std::shared_ptr<const Resources> res_;
};

} // namespace mmw
