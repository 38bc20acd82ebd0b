// SPDX-License-Identifier: Apache-2.0

#include "mmw/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <sstream>
#include <thread>

#ifndef MMW_VERSION
#define MMW_VERSION "0.0.0"
#endif

namespace mmw {

const char* curve_name(CurveKind kind) {
    switch (kind) {
    case CurveKind::NmseVsSnr:
        return "nmse-vs-snr";
    case CurveKind::SeVsTime:
        return "se-vs-time";
    case CurveKind::SeVsSnr:
        return "se-vs-snr";
    }
    return "unknown";
}

CurveKind parse_curve(const std::string& name) {
    for (CurveKind k : {CurveKind::NmseVsSnr, CurveKind::SeVsTime, CurveKind::SeVsSnr}) {
        if (name == curve_name(k)) {
            return k;
        }
    }
    throw InvalidInput("unknown curve kind '" + name + "'");
}

std::string code_version() { return MMW_VERSION; }

void MeanAccumulator::add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
}

void MeanAccumulator::merge(const MeanAccumulator& o) {
    if (o.n_ == 0) {
        return;
    }
    if (n_ == 0) {
        *this = o;
        return;
    }
    const double na = static_cast<double>(n_);
    const double nb = static_cast<double>(o.n_);
    const double n = na + nb;
    const double delta = o.mean_ - mean_;
    mean_ += delta * nb / n;
    m2_ += o.m2_ + delta * delta * na * nb / n;
    n_ += o.n_;
}

double MeanAccumulator::variance() const {
    return n_ < 2 ? 0.0 : m2_ / static_cast<double>(n_ - 1);
}

double MeanAccumulator::std_error() const {
    return n_ < 2 ? 0.0 : std::sqrt(variance() / static_cast<double>(n_));
}

void RunShard::add(const TrialRecord& r) {
    if (kind == CurveKind::NmseVsSnr) {
        for (std::size_t s = 0; s < nmse.size(); ++s) {
            for (std::size_t p = 0; p < nmse[s].size(); ++p) {
                nmse[s][p].add(r.nmse.at(s).at(p));
            }
        }
    } else {
        for (std::size_t s = 0; s < mean.size(); ++s) {
            for (std::size_t p = 0; p < mean[s].size(); ++p) {
                mean[s][p].add(r.values.at(s).at(p));
            }
        }
    }
    ledger ^= mix64(r.checksum ^ mix64(r.trial + 1));
    ++trials;
}

void RunShard::merge(const RunShard& o) {
    if (kind != o.kind || names != o.names || x != o.x) {
        throw InvalidInput("RunShard::merge: shards describe different curves");
    }
    for (std::size_t s = 0; s < mean.size(); ++s) {
        for (std::size_t p = 0; p < mean[s].size(); ++p) {
            mean[s][p].merge(o.mean[s][p]);
        }
    }
    for (std::size_t s = 0; s < nmse.size(); ++s) {
        for (std::size_t p = 0; p < nmse[s].size(); ++p) {
            nmse[s][p].merge(o.nmse[s][p]);
        }
    }
    ledger ^= o.ledger;
    trials += o.trials;
    records.insert(records.end(), o.records.begin(), o.records.end());
}

RunResult finalize(const RunShard& shard, const ScenarioConfig& cfg) {
    RunResult r;
    r.kind = shard.kind;
    r.x_name = shard.x_name;
    r.x_unit = shard.x_unit;
    r.x = shard.x;
    for (std::size_t s = 0; s < shard.names.size(); ++s) {
        Series ser;
        ser.name = shard.names[s];
        for (std::size_t p = 0; p < shard.x.size(); ++p) {
            if (shard.kind == CurveKind::NmseVsSnr) {
                ser.mean.push_back(shard.nmse[s][p].nmse_db());
                ser.std_error.push_back(shard.nmse[s][p].stderr_db());
            } else {
                ser.mean.push_back(shard.mean[s][p].mean());
                ser.std_error.push_back(shard.mean[s][p].std_error());
            }
        }
        r.series.push_back(std::move(ser));
    }
    r.metadata.config_hash = config_hash(cfg);
    r.metadata.seed = cfg.master_seed;
    r.metadata.code_version = code_version();
    r.metadata.trials = shard.trials;
    std::ostringstream ledger;
    ledger << std::hex;
    ledger.width(16);
    ledger.fill('0');
    ledger << shard.ledger;
    r.metadata.draw_ledger = ledger.str();
    return r;
}

namespace {

struct TrialSpan {
    std::uint64_t first;
    long long count;
    int threads;
};

TrialSpan resolve(const ScenarioConfig& cfg, const RunOptions& opts) {
    TrialSpan t{opts.first_trial, opts.trial_count < 0 ? cfg.trial_count : opts.trial_count,
                opts.threads > 0 ? opts.threads : cfg.threads};
    if (t.count < 0) {
        throw InvalidInput("trial count must be non-negative");
    }
    t.threads = std::max(1, std::min<int>(t.threads, static_cast<int>(std::max(1LL, t.count))));
    return t;
}

RunShard make_shard(CurveKind kind, std::string x_name, std::string x_unit, std::vector<double> x,
                    std::vector<std::string> names) {
    RunShard s;
    s.kind = kind;
    s.x_name = std::move(x_name);
    s.x_unit = std::move(x_unit);
    s.x = std::move(x);
    s.names = std::move(names);
    if (kind == CurveKind::NmseVsSnr) {
        s.nmse.assign(s.names.size(), std::vector<NmseAccumulator>(s.x.size()));
    } else {
        s.mean.assign(s.names.size(), std::vector<MeanAccumulator>(s.x.size()));
    }
    return s;
}

// Computes every trial (possibly in parallel) and folds them in trial order.
template <class Fn>
void fill_shard(RunShard& shard, const TrialSpan& span, bool keep, Fn&& fn) {
    std::vector<TrialRecord> recs(static_cast<std::size_t>(span.count));
    std::atomic<long long> next{0};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto work = [&] {
        for (long long i = next++; i < span.count; i = next++) {
            try {
                recs[static_cast<std::size_t>(i)] = fn(span.first + static_cast<std::uint64_t>(i));
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = span.count;
            }
        }
    };
    if (span.threads <= 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (int t = 0; t < span.threads; ++t) {
            pool.emplace_back(work);
        }
        for (std::thread& t : pool) {
            t.join();
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
    for (TrialRecord& r : recs) {
        shard.add(r);
        if (keep) {
            shard.records.push_back(std::move(r));
        }
    }
}

std::uint64_t agreed_checksum(const TrialResult& tr) {
    for (std::uint64_t c : tr.draw_checksums) {
        if (c != tr.draw_checksums.front()) {
            throw Error("schemes consumed different channel draws in trial " +
                        std::to_string(tr.trial));
        }
    }
    return tr.draw_checksums.empty() ? 0 : tr.draw_checksums.front();
}

std::vector<double> block_times(const ScenarioConfig& cfg) {
    std::vector<double> t;
    for (int tau = 1; tau <= cfg.num_blocks; ++tau) {
        t.push_back((tau - 1) * cfg.coherence_time_s);
    }
    return t;
}

ScenarioConfig snapshot_config(const ScenarioConfig& cfg, double snr_db) {
    ScenarioConfig c = cfg;
    const Vec2 pos = cfg.snapshot_position.value_or(cfg.ue_trajectories.front().start_position_m);
    c.ue_trajectories = {Trajectory{pos, {0.0, 0.0}}};
    c.num_blocks = 1;
    c.p_t_db = snr_db;
    c.p_r_db = snr_db;
    return c;
}

} // namespace

std::vector<SchemePlan> trajectory_plans(const ScenarioConfig& cfg) {
    std::vector<SchemePlan> plans;
    for (Scheme s : cfg.schemes) {
        plans.push_back(plan_for(s, cfg.estimator));
    }
    return plans;
}

RunShard nmse_sweep_shard(const ScenarioConfig& cfg, std::span<const double> snr_db,
                          const RunOptions& opts) {
    if (snr_db.size() < 2) {
        throw InvalidInput("nmse sweep needs at least two SNR points");
    }
    const LinkEngine engine(cfg, {}, LinkOptions{});
    const TrialSpan span = resolve(cfg, opts);
    const PilotBook book = make_pilot_books(cfg.k, cfg.n_c, cfg.n_s, cfg.t_p, cfg.s, cfg.l);
    std::vector<int> offsets(cfg.k);
    for (int k = 0; k < cfg.k; ++k) {
        offsets[k] = k;
    }
    const TdEstimator td(cfg.s, 1, cfg.l, offsets);
    const GeometryParams gp = engine.geometry_params();
    const ArrayPair arrays = engine.arrays();

    RunShard shard = make_shard(CurveKind::NmseVsSnr, "snr", "dB",
                                std::vector<double>(snr_db.begin(), snr_db.end()), {"fd", "td"});
    fill_shard(shard, span, opts.keep_trials, [&](std::uint64_t trial) {
        const std::vector<Vec2> clusters = engine.draw_clusters(trial);
        const PropagationGeometry geom = build_geometry(
            cfg.bs_position, cfg.ue_trajectories.front().start_position_m, clusters, arrays, gp);
        const std::vector<CMatrix> h = engine.channel(geom, trial, 1, 0, 0);
        const StreamKey key{cfg.master_seed, trial, 1, 0, Purpose::UplinkNoise, 0};
        TrialRecord rec;
        rec.trial = trial;
        for (const CMatrix& m : h) {
            rec.checksum = checksum_update(rec.checksum, m);
        }
        rec.nmse.assign(2, {});
        rec.values.assign(2, {});
        for (double snr : snr_db) {
            const double p_r = db_to_linear(snr);
            RngStream fd_rng(key);
            RngStream td_rng(key);
            const EstimateReport fd = estimate_fd(h, book.uplink_full, p_r, cfg.t_p, fd_rng);
            const EstimateReport tdr = estimate_td(h, td, p_r, cfg.t_p, td_rng);
            rec.nmse[0].push_back(nmse_sample(fd.estimate, h));
            rec.nmse[1].push_back(nmse_sample(tdr.estimate, h));
            for (int s = 0; s < 2; ++s) {
                const NmseSample& n = rec.nmse[s].back();
                rec.values[s].push_back(n.error_energy / n.truth_energy);
            }
        }
        return rec;
    });
    return shard;
}

RunResult run_nmse_sweep(const ScenarioConfig& cfg, std::span<const double> snr_db,
                         const RunOptions& opts) {
    return finalize(nmse_sweep_shard(cfg, snr_db, opts), cfg);
}

RunShard su_trajectory_shard(const ScenarioConfig& cfg, const RunOptions& opts) {
    if (cfg.ue_trajectories.size() != 1) {
        throw InvalidInput("su trajectory needs exactly one UE trajectory");
    }
    if (cfg.schemes.empty()) {
        throw InvalidInput("su trajectory needs at least one scheme");
    }
    const LinkEngine engine(cfg, trajectory_plans(cfg), LinkOptions{});
    const TrialSpan span = resolve(cfg, opts);
    std::vector<std::string> names;
    for (const SchemePlan& p : engine.plans()) {
        names.push_back(p.name);
    }
    RunShard shard = make_shard(CurveKind::SeVsTime, "time", "s", block_times(cfg), names);
    fill_shard(shard, span, opts.keep_trials, [&](std::uint64_t trial) {
        const TrialResult tr = engine.run_trial(trial);
        TrialRecord rec;
        rec.trial = trial;
        rec.checksum = agreed_checksum(tr);
        rec.values.assign(names.size(), {});
        for (const BlockResult& b : tr.blocks) {
            for (std::size_t p = 0; p < names.size(); ++p) {
                rec.values[p].push_back(b.schemes[p].se[0]);
            }
        }
        return rec;
    });
    return shard;
}

RunResult run_su_trajectory(const ScenarioConfig& cfg, const RunOptions& opts) {
    return finalize(su_trajectory_shard(cfg, opts), cfg);
}

RunShard mu_trajectory_shard(const ScenarioConfig& cfg, const RunOptions& opts) {
    if (cfg.schemes.empty()) {
        throw InvalidInput("mu trajectory needs at least one scheme");
    }
    const int users = static_cast<int>(cfg.ue_trajectories.size());
    LinkOptions lo;
    lo.num_users = users;
    lo.multi_user = true;
    const LinkEngine engine(cfg, trajectory_plans(cfg), lo);
    const TrialSpan span = resolve(cfg, opts);
    std::vector<std::string> names;
    for (const SchemePlan& p : engine.plans()) {
        names.push_back(p.name + "_sum");
        for (int u = 0; u < users; ++u) {
            names.push_back(p.name + "_u" + std::to_string(u));
        }
    }
    RunShard shard = make_shard(CurveKind::SeVsTime, "time", "s", block_times(cfg), names);
    const std::size_t n_plans = engine.plans().size();
    fill_shard(shard, span, opts.keep_trials, [&](std::uint64_t trial) {
        const TrialResult tr = engine.run_trial(trial);
        TrialRecord rec;
        rec.trial = trial;
        rec.checksum = agreed_checksum(tr);
        rec.values.assign(names.size(), {});
        for (const BlockResult& b : tr.blocks) {
            for (std::size_t p = 0; p < n_plans; ++p) {
                const std::vector<double>& se = b.schemes[p].se;
                const std::size_t base = p * static_cast<std::size_t>(users + 1);
                double sum = 0.0;
                for (int u = 0; u < users; ++u) {
                    sum += se[u];
                    rec.values[base + 1 + u].push_back(se[u]);
                }
                rec.values[base].push_back(sum);
            }
        }
        return rec;
    });
    return shard;
}

RunResult run_mu_trajectory(const ScenarioConfig& cfg, const RunOptions& opts) {
    return finalize(mu_trajectory_shard(cfg, opts), cfg);
}

RunShard se_vs_snr_shard(const ScenarioConfig& cfg, std::span<const double> snr_db,
                         const RunOptions& opts) {
    if (snr_db.empty()) {
        throw InvalidInput("se-vs-snr needs at least one SNR point");
    }
    SchemePlan td = plan_for(Scheme::Continuous, EstimatorKind::TD);
    td.name = "dbf-td";
    SchemePlan fd = td;
    fd.name = "dbf-fd";
    fd.estimator = EstimatorKind::FD;
    std::vector<LinkEngine> engines;
    for (double snr : snr_db) {
        engines.emplace_back(snapshot_config(cfg, snr), std::vector<SchemePlan>{td, fd},
                             LinkOptions{});
    }
    const TrialSpan span = resolve(cfg, opts);
    RunShard shard = make_shard(CurveKind::SeVsSnr, "snr", "dB",
                                std::vector<double>(snr_db.begin(), snr_db.end()),
                                {td.name, fd.name});
    fill_shard(shard, span, opts.keep_trials, [&](std::uint64_t trial) {
        TrialRecord rec;
        rec.trial = trial;
        rec.values.assign(2, {});
        for (std::size_t i = 0; i < engines.size(); ++i) {
            const TrialResult tr = engines[i].run_trial(trial);
            const std::uint64_t c = agreed_checksum(tr);
            if (i > 0 && c != rec.checksum) {
                throw Error("SNR points consumed different channel draws in trial " +
                            std::to_string(trial));
            }
            rec.checksum = c;
            for (std::size_t p = 0; p < 2; ++p) {
                rec.values[p].push_back(tr.blocks.front().schemes[p].se[0]);
            }
        }
        return rec;
    });
    return shard;
}

RunResult run_se_vs_snr(const ScenarioConfig& cfg, std::span<const double> snr_db,
                        const RunOptions& opts) {
    return finalize(se_vs_snr_shard(cfg, snr_db, opts), cfg);
}

} // namespace mmw
