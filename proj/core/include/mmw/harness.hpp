// SPDX-License-Identifier: Apache-2.0
//
// Monte Carlo drivers for the four experiment shapes. Trials are the unit of
// work: each one is computed independently, then folded into the shard's
// accumulators in trial order so results do not depend on the thread count.

#pragma once

#include "mmw/link_engine.hpp"
#include "mmw/scenario.hpp"

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mmw {

enum class CurveKind { NmseVsSnr, SeVsTime, SeVsSnr };

const char* curve_name(CurveKind kind);
CurveKind parse_curve(const std::string& name);

/// Welford running mean and variance; merge() is Chan's pairwise update.
class MeanAccumulator {
public:
    void add(double x);
    void merge(const MeanAccumulator& other);
    long long count() const { return n_; }
    double mean() const { return mean_; }
    /// Unbiased sample variance; 0 for fewer than two samples.
    double variance() const;
    double std_error() const;

private:
    long long n_ = 0;
    double mean_ = 0.0;
    double m2_ = 0.0;
};

struct Series {
    std::string name;
    std::vector<double> mean;
    std::vector<double> std_error;
};

struct RunMetadata {
    std::string config_hash;
    std::uint64_t seed = 0;
    std::string code_version;
    long long trials = 0;
    /// XOR of the per-trial channel-draw checksums.
    std::string draw_ledger;
};

struct RunResult {
    CurveKind kind = CurveKind::SeVsTime;
    std::string x_name;
    std::string x_unit;
    std::vector<double> x;
    std::vector<Series> series;
    RunMetadata metadata;
};

struct RunOptions {
    std::uint64_t first_trial = 0;
    /// Negative: use the config's trial_count.
    long long trial_count = -1;
    /// Zero: use the config's thread count.
    int threads = 0;
    /// Keep per-trial values in the shard.
    bool keep_trials = false;
};

/// One trial's contribution: values[series][point].
struct TrialRecord {
    std::uint64_t trial = 0;
    std::vector<std::vector<double>> values;
    std::uint64_t checksum = 0;
    /// NMSE runs only: energies per [series][point].
    std::vector<std::vector<NmseSample>> nmse;
};

/// Mergeable partial result over a contiguous or arbitrary set of trials.
struct RunShard {
    CurveKind kind = CurveKind::SeVsTime;
    std::string x_name;
    std::string x_unit;
    std::vector<double> x;
    std::vector<std::string> names;
    std::vector<std::vector<MeanAccumulator>> mean;  // [series][point]
    std::vector<std::vector<NmseAccumulator>> nmse;  // [series][point], NMSE runs
    std::uint64_t ledger = 0;
    long long trials = 0;
    std::vector<TrialRecord> records; // with keep_trials

    void add(const TrialRecord& r);
    /// Throws InvalidInput when the shards describe different curves.
    void merge(const RunShard& other);
};

RunResult finalize(const RunShard& shard, const ScenarioConfig& cfg);

/// FD and TD estimation of the full channel at the first block, equal total
/// pilot energy, noise streams shared across SNR points.
RunShard nmse_sweep_shard(const ScenarioConfig& cfg, std::span<const double> snr_db,
                          const RunOptions& opts = {});
RunResult run_nmse_sweep(const ScenarioConfig& cfg, std::span<const double> snr_db,
                         const RunOptions& opts = {});

/// Per-block SE of every configured scheme for a single UE.
RunShard su_trajectory_shard(const ScenarioConfig& cfg, const RunOptions& opts = {});
RunResult run_su_trajectory(const ScenarioConfig& cfg, const RunOptions& opts = {});

/// Per-user MMSE precoding for every trajectory in the config. Series are
/// "<scheme>_sum" then "<scheme>_u<i>" per user.
RunShard mu_trajectory_shard(const ScenarioConfig& cfg, const RunOptions& opts = {});
RunResult run_mu_trajectory(const ScenarioConfig& cfg, const RunOptions& opts = {});

/// One block at a fixed UE position, "dbf-td" and "dbf-fd" series, with
/// P_t = P_r = each SNR point.
RunShard se_vs_snr_shard(const ScenarioConfig& cfg, std::span<const double> snr_db,
                         const RunOptions& opts = {});
RunResult run_se_vs_snr(const ScenarioConfig& cfg, std::span<const double> snr_db,
                        const RunOptions& opts = {});

/// Scheme plans used by the trajectory runs, in config order.
std::vector<SchemePlan> trajectory_plans(const ScenarioConfig& cfg);

std::string code_version();

} // namespace mmw
