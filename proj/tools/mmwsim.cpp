// SPDX-License-Identifier: Apache-2.0
//
// mmwsim: command-line front end for the Monte Carlo runs.
// Exit status: 0 success, 2 invalid configuration, 1 any other failure.

#include "mmw/harness.hpp"
#include "mmw/results_io.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

struct CommonArgs {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::optional<long long> trials;
    std::optional<int> threads;
    std::string out;
    std::string format = "csv";
    std::vector<double> snr;
};

void add_common(CLI::App* cmd, CommonArgs& a, bool with_snr) {
    auto* cfg = cmd->add_option("--config", a.config_path, "JSON scenario configuration file")
                    ->check(CLI::ExistingFile);
    cmd->add_option("--preset", a.preset, "Named preset")
        ->check(CLI::IsMember({"desk", "full-scale"}))
        ->excludes(cfg);
    cmd->add_option("--seed", a.seed, "Master seed");
    cmd->add_option("--trials", a.trials, "Number of Monte Carlo trials")->check(CLI::NonNegativeNumber);
    cmd->add_option("--threads", a.threads, "Worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--out", a.out, "Output file (stdout when omitted)");
    cmd->add_option("--format", a.format, "Output format")->check(CLI::IsMember({"csv", "json"}));
    if (with_snr) {
        cmd->add_option("--snr", a.snr, "SNR points in dB (defaults to the config's list)");
    }
}

mmw::ScenarioConfig resolve_config(const CommonArgs& a, bool multi_user) {
    mmw::ScenarioConfig cfg;
    if (!a.config_path.empty()) {
        cfg = mmw::load_config(a.config_path);
    } else {
        cfg = mmw::make_preset(a.preset.empty() ? "desk" : a.preset, multi_user);
    }
    if (a.seed) {
        cfg.master_seed = *a.seed;
    }
    if (a.trials) {
        cfg.trial_count = static_cast<int>(*a.trials);
    }
    if (a.threads) {
        cfg.threads = *a.threads;
    }
    mmw::validate(cfg);
    return cfg;
}

void emit(const mmw::RunResult& r, const CommonArgs& a) {
    const mmw::OutputFormat fmt = mmw::parse_format(a.format);
    if (a.out.empty()) {
        std::cout << (fmt == mmw::OutputFormat::Csv ? mmw::to_csv(r) : mmw::to_json(r));
    } else {
        mmw::emit_results(r, fmt, a.out);
    }
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"mmWave digital beamforming link simulator"};
    app.set_version_flag("--version", mmw::code_version());
    app.require_subcommand(1);

    CommonArgs nmse_args, su_args, mu_args, snr_args;
    std::string validate_path;
    std::string validate_preset;

    auto* nmse = app.add_subcommand("nmse-sweep", "Channel estimation NMSE versus SNR");
    add_common(nmse, nmse_args, true);
    auto* su = app.add_subcommand("su-trajectory", "Single-user SE along the trajectory");
    add_common(su, su_args, false);
    auto* mu = app.add_subcommand("mu-trajectory", "Multi-user SE along the trajectories");
    add_common(mu, mu_args, false);
    auto* snr = app.add_subcommand("se-vs-snr", "SE versus SNR at a fixed UE position");
    add_common(snr, snr_args, true);
    auto* check = app.add_subcommand("validate-config", "Check a configuration file");
    auto* check_cfg = check->add_option("--config", validate_path, "JSON scenario configuration file")
                          ->check(CLI::ExistingFile);
    check->add_option("--preset", validate_preset, "Named preset")
        ->check(CLI::IsMember({"desk", "full-scale"}))
        ->excludes(check_cfg);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*check) {
            mmw::ScenarioConfig cfg = validate_path.empty()
                                          ? mmw::make_preset(validate_preset.empty() ? "desk"
                                                                                     : validate_preset)
                                          : mmw::load_config(validate_path);
            const std::vector<std::string> errors = mmw::validation_errors(cfg);
            for (const std::string& e : errors) {
                std::cerr << "invalid: " << e << '\n';
            }
            if (!errors.empty()) {
                return 2;
            }
            std::cout << "valid (config hash " << mmw::config_hash(cfg) << ")\n";
            return 0;
        }
        if (*nmse) {
            const mmw::ScenarioConfig cfg = resolve_config(nmse_args, false);
            const std::vector<double> pts = nmse_args.snr.empty() ? cfg.snr_points_db : nmse_args.snr;
            emit(mmw::run_nmse_sweep(cfg, pts), nmse_args);
        } else if (*su) {
            emit(mmw::run_su_trajectory(resolve_config(su_args, false)), su_args);
        } else if (*mu) {
            emit(mmw::run_mu_trajectory(resolve_config(mu_args, true)), mu_args);
        } else if (*snr) {
            const mmw::ScenarioConfig cfg = resolve_config(snr_args, false);
            const std::vector<double> pts = snr_args.snr.empty() ? cfg.snr_points_db : snr_args.snr;
            emit(mmw::run_se_vs_snr(cfg, pts), snr_args);
        }
    } catch (const mmw::ConfigError& e) {
        for (const std::string& v : e.violations()) {
            std::cerr << "invalid: " << v << '\n';
        }
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "mmwsim: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
