// SPDX-License-Identifier: Apache-2.0
//
// Scenario configuration: defaults, named presets, validation and a JSON
// representation whose canonical dump feeds the config hash.

#pragma once

#include "mmw/channel.hpp"
#include "mmw/estimation.hpp"
#include "mmw/types.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace mmw {

enum class Scheme {
    IdealDbf,   // perfect CSI, every block runs the first-block procedure
    Continuous, // estimated CSI, first stage reselected every block
    FixedQTd,   // first stage frozen per beam window, TD estimation
    FixedQFd,   // first stage frozen per beam window, FD estimation
    FixedQW,    // first and second stage frozen for the whole trajectory
};

const char* scheme_name(Scheme s);
/// Throws InvalidInput for unknown names.
Scheme parse_scheme(const std::string& name);
std::vector<Scheme> all_schemes();

enum class PrecoderKind { Svd, Mmse };

const char* precoder_name(PrecoderKind p);
PrecoderKind parse_precoder(const std::string& name);
EstimatorKind parse_estimator(const std::string& name);

struct ScenarioConfig {
    Vec2 bs_position{2.0, 5.0};
    std::vector<Trajectory> ue_trajectories{{{20.0, 10.0}, {0.0, 5.0}}};
    /// UE position for the SE-vs-SNR snapshot; defaults to the first start.
    std::optional<Vec2> snapshot_position;

    int m = 8;
    int k = 4;
    int n_s = 2;
    int n_c = 3;
    int n_cl = 2;
    int s = 64;
    int l = 4;
    int l_eff = 4;
    int n_sub = 1;
    int t_p = 4;
    double t_c = 200.0;
    int n_d = 100; // carried for documentation only

    double p_t_db = 20.0;
    double p_r_db = 20.0;
    double carrier_ghz = 28.0;
    double bs_element_spacing = 0.5;
    double ue_element_spacing = 0.5;
    double coherence_time_s = 0.0102;
    double beam_coherence_time_s = 0.102;
    int num_blocks = 20;

    double sample_period_s = 5e-9;
    double reflection_loss_db = 10.0;
    /// Every tap power is divided by the LOS path gain at this distance.
    double reference_distance_m = 20.0;

    int trial_count = 200;
    std::uint64_t master_seed = 1;
    int fading_draws = 8;
    int se_subcarrier_stride = 4;
    int threads = 1;

    std::vector<Scheme> schemes = all_schemes();
    EstimatorKind estimator = EstimatorKind::TD;
    PrecoderKind su_precoder = PrecoderKind::Svd;
    std::vector<double> snr_points_db{0.0, 5.0, 10.0, 15.0, 20.0};
};

/// "desk" (default small profile) or "full-scale" (full-size layout). With
/// multi_user set, the preset carries three moving UEs instead of one.
ScenarioConfig make_preset(const std::string& name, bool multi_user = false);
std::vector<std::string> preset_names();

/// Every violated constraint, human readable. Empty when valid.
std::vector<std::string> validation_errors(const ScenarioConfig& cfg);
/// Throws ConfigError listing every violation.
void validate(const ScenarioConfig& cfg);

/// Canonical JSON text (sorted keys, fixed number formatting).
std::string to_json_string(const ScenarioConfig& cfg, int indent = -1);
/// Missing keys keep their defaults; unknown keys and type errors throw ConfigError.
ScenarioConfig config_from_json_string(const std::string& text);
ScenarioConfig load_config(const std::string& path);

/// 64-bit FNV-1a of the canonical JSON, as 16 hex digits.
std::string config_hash(const ScenarioConfig& cfg);

double db_to_linear(double db);

} // namespace mmw
