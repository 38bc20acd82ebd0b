// SPDX-License-Identifier: Apache-2.0

#include "mmw/link_engine.hpp"

#include <bit>
#include <sstream>

namespace mmw {

std::uint64_t checksum_update(std::uint64_t h, const CMatrix& m) {
    const double* d = reinterpret_cast<const double*>(m.data());
    for (Eigen::Index i = 0; i < 2 * m.size(); ++i) {
        h = mix64(h ^ std::bit_cast<std::uint64_t>(d[i]));
    }
    return h;
}

SchemePlan plan_for(Scheme s, EstimatorKind rho_estimator) {
    SchemePlan p;
    p.name = scheme_name(s);
    switch (s) {
    case Scheme::IdealDbf:
        p.perfect_csi = true;
        p.estimator = rho_estimator;
        break;
    case Scheme::Continuous:
        p.q_mode = QMode::PerSubband;
        break;
    case Scheme::FixedQTd:
        p.q_mode = QMode::PerSubband;
        p.refresh = Refresh::BeamWindow;
        break;
    case Scheme::FixedQFd:
        p.estimator = EstimatorKind::FD;
        p.refresh = Refresh::BeamWindow;
        break;
    case Scheme::FixedQW:
        p.q_mode = QMode::PerSubband;
        p.refresh = Refresh::Never;
        p.freeze_second_stage = true;
        break;
    }
    return p;
}

struct LinkEngine::Resources {
    Resources(PilotBook b, MlDepilot dl, BlockClock c)
        : book(std::move(b)), downlink(std::move(dl)), clock(c) {}

    PilotBook book;
    std::vector<TdEstimator> td_full; // per user, K ports
    std::vector<TdEstimator> td_eff;  // per user, N_c ports
    MlDepilot downlink;
    BlockClock clock;
    double p_t = 1.0;
    double p_r = 1.0;
    double mu = 1.0;
    double rho_fd = 1.0;
    double rho_td_full = 1.0;
    double rho_td_eff = 1.0;
    int s_sub = 1;
    std::vector<std::vector<int>> band_members; // evaluated-subcarrier slots per subband
};

namespace {

// Draw-level statistics of one scheme within one block.
struct PlanAccumulators {
    std::vector<std::vector<EffectiveAccumulator>> su;   // [user][slot]
    std::vector<std::vector<MuEffectiveAccumulator>> mu; // [slot][user]
    std::vector<std::vector<double>> coh_sum;            // [user][slot]
    std::vector<std::vector<double>> coh_sq;
    bool full_procedure = true;
};

struct UserState {
    std::vector<CMatrix> q;      // per slot
    std::vector<CMatrix> q_band; // per subband, PerSubband only
    std::vector<CMatrix> w;      // per slot, frozen second stage
    bool has_q = false;
    bool has_w = false;
};

class TrialRunner {
public:
    TrialRunner(const LinkEngine& eng, const LinkEngine::Resources& res, std::uint64_t trial)
        : eng_(eng), res_(res), cfg_(eng.config()), opts_(eng.options()),
          eval_(eng.evaluated_subcarriers()), trial_(trial) {}

    TrialResult run();

private:
    StreamKey key(int tau, int draw, Purpose purpose, int user) const {
        return StreamKey{cfg_.master_seed, trial_, static_cast<std::uint64_t>(tau),
                         static_cast<std::uint64_t>(draw), purpose,
                         static_cast<std::uint32_t>(user)};
    }

    CMatrix design(const CMatrix& est) const {
        if (opts_.multi_user || cfg_.su_precoder == PrecoderKind::Mmse) {
            return mu_mmse_precoder(est, res_.mu, cfg_.n_s, res_.p_t).f;
        }
        // A genie channel can have fewer than N_s paths; idle streams get no power.
        for (int n = cfg_.n_s;; --n) {
            try {
                const CMatrix f = svd_precoder(est, n, res_.p_t).f;
                CMatrix out = CMatrix::Zero(est.cols(), cfg_.n_s);
                out.leftCols(n) = f;
                return out;
            } catch (const SingularMatrix&) {
                if (n == 1) {
                    throw;
                }
            }
        }
    }

    CMatrix downlink_estimate(const CMatrix& precoded, const CMatrix* q, RngStream& rng) const {
        CMatrix n(cfg_.k, cfg_.n_s);
        rng.fill_complex_normal(n, 1.0);
        CMatrix y = std::sqrt(static_cast<double>(cfg_.n_s)) * precoded * res_.book.downlink;
        if (q != nullptr) {
            y.noalias() += q->adjoint() * n;
        } else {
            y += n;
        }
        return res_.downlink(y);
    }

    bool full_procedure(const SchemePlan& plan, int tau, const UserState& st) const {
        if (plan.perfect_csi || plan.refresh == Refresh::EveryBlock || !st.has_q) {
            return true;
        }
        if (plan.refresh == Refresh::BeamWindow) {
            return res_.clock.refresh_due(tau);
        }
        return false;
    }

    double block_rho(const SchemePlan& plan, bool full) const {
        if (plan.estimator == EstimatorKind::FD) {
            return res_.rho_fd;
        }
        return full || plan.perfect_csi ? res_.rho_td_full : res_.rho_td_eff;
    }

    void run_draw(const SchemePlan& plan, std::vector<UserState>& states,
                  const std::vector<std::vector<CMatrix>>& h, int tau, int draw,
                  PlanAccumulators& acc, std::uint64_t& checksum) const;

    const LinkEngine& eng_;
    const LinkEngine::Resources& res_;
    const ScenarioConfig& cfg_;
    const LinkOptions& opts_;
    const std::vector<int>& eval_;
    std::uint64_t trial_;
};

void TrialRunner::run_draw(const SchemePlan& plan, std::vector<UserState>& states,
                           const std::vector<std::vector<CMatrix>>& h, int tau, int draw,
                           PlanAccumulators& acc, std::uint64_t& checksum) const {
    const int users = opts_.num_users;
    const int slots = static_cast<int>(eval_.size());
    const int s = cfg_.s;
    for (int u = 0; u < users; ++u) {
        for (int j = 0; j < slots; ++j) {
            checksum = checksum_update(checksum, h[u][eval_[j]]);
        }
    }

    using Slots = std::vector<CMatrix>;
    std::vector<Slots> f(users, Slots(slots)), q(users, Slots(slots)), w(users, Slots(slots));
    const bool full = acc.full_procedure;

    if (full) {
        for (int u = 0; u < users; ++u) {
            Slots est(slots);
            if (plan.perfect_csi) {
                for (int j = 0; j < slots; ++j) {
                    est[j] = h[u][eval_[j]];
                }
            } else {
                RngStream rng(key(tau, draw, Purpose::UplinkNoise, u));
                if (plan.estimator == EstimatorKind::TD) {
                    EstimateReport rep = estimate_td(h[u], res_.td_full[u], res_.p_r, cfg_.t_p, rng);
                    for (int j = 0; j < slots; ++j) {
                        est[j] = std::move(rep.estimate[eval_[j]]);
                    }
                } else {
                    Slots sub(slots);
                    for (int j = 0; j < slots; ++j) {
                        sub[j] = h[u][eval_[j]];
                    }
                    est = estimate_fd(sub, res_.book.uplink_full, res_.p_r, cfg_.t_p, rng).estimate;
                }
            }
            for (int j = 0; j < slots; ++j) {
                f[u][j] = design(est[j]);
            }
        }
        for (int u = 0; u < users; ++u) {
            RngStream rng(key(tau, draw, Purpose::DownlinkNoise, u));
            Slots bhat(slots);
            for (int j = 0; j < slots; ++j) {
                const CMatrix b = h[u][eval_[j]] * f[u][j];
                bhat[j] = plan.perfect_csi ? b : downlink_estimate(b, nullptr, rng);
            }
            UserState& st = states[u];
            if (plan.q_mode == QMode::PerSubcarrier) {
                for (int j = 0; j < slots; ++j) {
                    q[u][j] = select_first_stage(bhat[j], cfg_.n_c);
                    w[u][j] = init_second_stage(cfg_.n_c, cfg_.n_s);
                }
            } else {
                std::vector<CMatrix> bands(res_.band_members.size());
                for (std::size_t b = 0; b < bands.size(); ++b) {
                    Slots members;
                    for (int j : res_.band_members[b]) {
                        members.push_back(bhat[j]);
                    }
                    bands[b] = select_first_stage_stacked(members, cfg_.n_c);
                    for (int j : res_.band_members[b]) {
                        q[u][j] = bands[b];
                        w[u][j] = update_second_stage(bands[b].adjoint() * bhat[j], cfg_.n_s);
                    }
                }
                if (draw == 0) {
                    st.q_band = std::move(bands);
                }
            }
            if (draw == 0) {
                st.q = q[u];
                st.has_q = true;
                if (plan.freeze_second_stage && !st.has_w) {
                    st.w = w[u];
                    st.has_w = true;
                }
            }
        }
    } else {
        for (int u = 0; u < users; ++u) {
            const UserState& st = states[u];
            q[u] = st.q;
            RngStream rng(key(tau, draw, Purpose::EffectiveUplinkNoise, u));
            Slots est(slots);
            if (plan.estimator == EstimatorKind::TD) {
                if (plan.q_mode != QMode::PerSubband) {
                    throw InvalidInput("TD effective-channel estimation needs a per-subband first stage");
                }
                Slots g(s);
                for (int nu = 0; nu < s; ++nu) {
                    g[nu] = st.q_band[nu / res_.s_sub].adjoint() * h[u][nu];
                }
                EstimateReport rep = estimate_td(g, res_.td_eff[u], res_.p_r, cfg_.t_p, rng);
                for (int j = 0; j < slots; ++j) {
                    est[j] = std::move(rep.estimate[eval_[j]]);
                }
            } else {
                Slots g(slots);
                for (int j = 0; j < slots; ++j) {
                    g[j] = q[u][j].adjoint() * h[u][eval_[j]];
                }
                est = estimate_fd(g, res_.book.uplink_effective, res_.p_r, cfg_.t_p, rng).estimate;
            }
            for (int j = 0; j < slots; ++j) {
                f[u][j] = design(est[j]);
            }
        }
        for (int u = 0; u < users; ++u) {
            const UserState& st = states[u];
            if (plan.freeze_second_stage) {
                w[u] = st.w;
                continue;
            }
            RngStream rng(key(tau, draw, Purpose::EffectiveDownlinkNoise, u));
            for (int j = 0; j < slots; ++j) {
                const CMatrix d = q[u][j].adjoint() * (h[u][eval_[j]] * f[u][j]);
                w[u][j] = update_second_stage(downlink_estimate(d, &q[u][j], rng), cfg_.n_s);
            }
        }
    }

    std::vector<CMatrix> interferers;
    std::vector<CMatrix> cross;
    for (int u = 0; u < users; ++u) {
        for (int j = 0; j < slots; ++j) {
            const CMatrix& hu = h[u][eval_[j]];
            if (opts_.on_combiner) {
                opts_.on_combiner(q[u][j], w[u][j]);
            }
            const CMatrix comb = (q[u][j] * w[u][j]).adjoint() * hu;
            const CMatrix e = comb * f[u][j];
            double rate = 0.0;
            if (opts_.multi_user) {
                interferers.clear();
                cross.clear();
                for (int i = 0; i < users; ++i) {
                    if (i != u) {
                        interferers.push_back(f[i][j]);
                        cross.push_back(comb * f[i][j]);
                    }
                }
                acc.mu[j][u].add(e, cross);
                rate = rate_perfect_mu(hu, f[u][j], interferers, q[u][j], w[u][j]);
            } else {
                acc.su[u][j].add(e);
                rate = rate_perfect(hu, f[u][j], q[u][j], w[u][j]);
            }
            acc.coh_sum[u][j] += rate;
            acc.coh_sq[u][j] += rate * rate;
        }
    }
}

TrialResult TrialRunner::run() {
    const int users = opts_.num_users;
    const int slots = static_cast<int>(eval_.size());
    const std::size_t n_plans = eng_.plans().size();
    const std::vector<Vec2> clusters = eng_.draw_clusters(trial_);
    const ArrayPair arrays = eng_.arrays();
    const GeometryParams gp = eng_.geometry_params();

    TrialResult out;
    out.trial = trial_;
    out.draw_checksums.assign(n_plans, 0x6d6d77ULL);
    std::vector<std::vector<UserState>> states(n_plans, std::vector<UserState>(users));

    for (int tau = 1; tau <= cfg_.num_blocks; ++tau) {
        const double t = res_.clock.block_start_time(tau);
        std::vector<PropagationGeometry> geoms;
        for (int u = 0; u < users; ++u) {
            const Vec2 pos = ue_position_at(cfg_.ue_trajectories[u], t);
            geoms.push_back(build_geometry(cfg_.bs_position, pos, clusters, arrays, gp));
            out.dropped_paths += geoms.back().dropped_paths;
        }

        std::vector<PlanAccumulators> accs(n_plans);
        for (std::size_t p = 0; p < n_plans; ++p) {
            PlanAccumulators& a = accs[p];
            a.full_procedure = full_procedure(eng_.plans()[p], tau, states[p][0]);
            if (opts_.multi_user) {
                a.mu.assign(slots, std::vector<MuEffectiveAccumulator>(users));
            } else {
                a.su.assign(users, std::vector<EffectiveAccumulator>(slots));
            }
            a.coh_sum.assign(users, std::vector<double>(slots, 0.0));
            a.coh_sq.assign(users, std::vector<double>(slots, 0.0));
        }

        std::vector<std::vector<CMatrix>> h(users);
        for (int d = 0; d < cfg_.fading_draws; ++d) {
            for (int u = 0; u < users; ++u) {
                h[u] = eng_.channel(geoms[u], trial_, tau, d, u);
            }
            for (std::size_t p = 0; p < n_plans; ++p) {
                run_draw(eng_.plans()[p], states[p], h, tau, d, accs[p], out.draw_checksums[p]);
            }
        }

        BlockResult block;
        block.tau = tau;
        const double draws = static_cast<double>(cfg_.fading_draws);
        for (std::size_t p = 0; p < n_plans; ++p) {
            const SchemePlan& plan = eng_.plans()[p];
            const PlanAccumulators& a = accs[p];
            SchemeBlockResult r;
            r.rho = block_rho(plan, a.full_procedure);
            std::vector<std::vector<double>> uatf(users, std::vector<double>(slots));
            for (int j = 0; j < slots; ++j) {
                if (opts_.multi_user) {
                    const std::vector<double> rates = uatf_mu_rate(a.mu[j]);
                    for (int u = 0; u < users; ++u) {
                        uatf[u][j] = rates[u];
                    }
                } else {
                    for (int u = 0; u < users; ++u) {
                        uatf[u][j] = uatf_su_rate(a.su[u][j].stats());
                    }
                }
            }
            for (int u = 0; u < users; ++u) {
                double us = 0.0;
                double cs = 0.0;
                std::vector<double> cmean(slots), cerr(slots);
                for (int j = 0; j < slots; ++j) {
                    us += uatf[u][j];
                    cmean[j] = a.coh_sum[u][j] / draws;
                    cs += cmean[j];
                    const double var =
                        std::max(a.coh_sq[u][j] / draws - cmean[j] * cmean[j], 0.0) * draws /
                        (draws - 1.0);
                    cerr[j] = std::sqrt(var / draws);
                }
                r.uatf_se.push_back(r.rho * us / slots);
                r.coherent_se.push_back(r.rho * cs / slots);
                r.se.push_back(plan.perfect_csi ? r.coherent_se.back() : r.uatf_se.back());
                if (opts_.per_subcarrier) {
                    r.uatf_rate.push_back(std::move(uatf[u]));
                    r.coherent_mean.push_back(std::move(cmean));
                    r.coherent_stderr.push_back(std::move(cerr));
                }
            }
            block.schemes.push_back(std::move(r));
        }
        out.blocks.push_back(std::move(block));
    }
    return out;
}

} // namespace

LinkEngine::LinkEngine(ScenarioConfig cfg, std::vector<SchemePlan> plans, LinkOptions opts)
    : cfg_(std::move(cfg)), plans_(std::move(plans)), opts_(std::move(opts)) {
    validate(cfg_);
    if (opts_.num_users < 1 ||
        opts_.num_users > static_cast<int>(cfg_.ue_trajectories.size())) {
        throw InvalidInput("LinkEngine: num_users must be in [1, number of trajectories]");
    }
    if (!opts_.multi_user && opts_.num_users != 1) {
        throw InvalidInput("LinkEngine: single-user mode runs exactly one UE");
    }
    const int users = opts_.num_users;
    const int full_cap = td_offset_capacity(cfg_.s, cfg_.l);
    const int eff_cap = td_offset_capacity(cfg_.s / cfg_.n_sub, cfg_.l_eff);
    if (users * cfg_.k > full_cap || users * cfg_.n_c > eff_cap) {
        std::ostringstream msg;
        msg << users << " users need " << users * cfg_.k << " full-band and "
            << users * cfg_.n_c << " effective-channel tone offsets; S=" << cfg_.s
            << ", L=" << cfg_.l << " provide " << full_cap << " and " << eff_cap;
        throw PilotCapacityError(msg.str());
    }

    for (int nu = 0; nu < cfg_.s; nu += cfg_.se_subcarrier_stride) {
        eval_.push_back(nu);
    }

    auto res = std::make_shared<Resources>(
        make_pilot_books(cfg_.k, cfg_.n_c, cfg_.n_s, cfg_.t_p, cfg_.s, cfg_.l),
        MlDepilot(unitary_dft_rows(cfg_.n_s, cfg_.n_s), std::sqrt(static_cast<double>(cfg_.n_s))),
        BlockClock(cfg_.coherence_time_s, cfg_.beam_coherence_time_s));
    for (int u = 0; u < users; ++u) {
        res->td_full.emplace_back(cfg_.s, 1, cfg_.l, user_td_offsets(u, cfg_.k));
        res->td_eff.emplace_back(cfg_.s, cfg_.n_sub, cfg_.l_eff, user_td_offsets(u, cfg_.n_c));
    }
    res->p_t = db_to_linear(cfg_.p_t_db);
    res->p_r = db_to_linear(cfg_.p_r_db);
    res->mu = mmse_regularization(users, res->p_t);
    res->rho_fd = overhead_rho(
        make_overhead_model(EstimatorKind::FD, cfg_.t_p, cfg_.n_s, cfg_.t_c, cfg_.s, cfg_.s));
    res->rho_td_full = overhead_rho(
        make_overhead_model(EstimatorKind::TD, cfg_.t_p, cfg_.n_s, cfg_.t_c, cfg_.s, cfg_.l));
    res->rho_td_eff = overhead_rho(make_overhead_model(EstimatorKind::TD, cfg_.t_p, cfg_.n_s,
                                                       cfg_.t_c, cfg_.s, cfg_.n_sub * cfg_.l_eff));
    res->s_sub = cfg_.s / cfg_.n_sub;
    res->band_members.assign(cfg_.n_sub, {});
    for (std::size_t j = 0; j < eval_.size(); ++j) {
        res->band_members[eval_[j] / res->s_sub].push_back(static_cast<int>(j));
    }
    for (std::size_t b = 0; b < res->band_members.size(); ++b) {
        if (res->band_members[b].empty()) {
            throw InvalidInput("LinkEngine: subband " + std::to_string(b) +
                               " has no evaluated subcarrier; lower se_subcarrier_stride");
        }
    }
    res_ = std::move(res);
}

std::vector<Vec2> LinkEngine::draw_clusters(std::uint64_t trial) const {
    RngStream rng(StreamKey{cfg_.master_seed, trial, 0, 0, Purpose::ClusterPlacement, 0});
    const Vec2 a = cfg_.bs_position;
    const Vec2 b = cfg_.ue_trajectories.front().start_position_m;
    const double x0 = std::min(a.x, b.x), x1 = std::max(a.x, b.x);
    const double y0 = std::min(a.y, b.y), y1 = std::max(a.y, b.y);
    std::vector<Vec2> out(cfg_.n_cl);
    for (Vec2& c : out) {
        c.x = x0 + (x1 - x0) * rng.uniform();
        c.y = y0 + (y1 - y0) * rng.uniform();
    }
    return out;
}

ArrayPair LinkEngine::arrays() const {
    ArrayPair p;
    p.bs = {cfg_.m, cfg_.bs_element_spacing, {0.0, 1.0}};
    p.ue = {cfg_.k, cfg_.ue_element_spacing, {0.0, 1.0}};
    return p;
}

GeometryParams LinkEngine::geometry_params() const {
    GeometryParams g;
    g.sample_period_s = cfg_.sample_period_s;
    g.num_taps = cfg_.l;
    g.carrier_ghz = cfg_.carrier_ghz;
    g.reflection_loss_db = cfg_.reflection_loss_db;
    g.gain_scale = 1.0 / umi_path_loss(cfg_.reference_distance_m, cfg_.carrier_ghz);
    return g;
}

std::vector<CMatrix> LinkEngine::channel(const PropagationGeometry& geom, std::uint64_t trial,
                                         int tau, int draw, int user) const {
    RngStream rng(StreamKey{cfg_.master_seed, trial, static_cast<std::uint64_t>(tau),
                            static_cast<std::uint64_t>(draw), Purpose::Fading,
                            static_cast<std::uint32_t>(user)});
    const PathCoefficients alpha = draw_small_scale(geom, rng);
    TapChannel taps = build_tap_channel(geom, alpha, arrays(), tau);
    return assemble_freq_channel(taps, cfg_.s).per_subcarrier;
}

TrialResult LinkEngine::run_trial(std::uint64_t trial) const {
    return TrialRunner(*this, *res_, trial).run();
}

} // namespace mmw
