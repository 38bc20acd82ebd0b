// SPDX-License-Identifier: Apache-2.0

#include "mmw/spectral_efficiency.hpp"

#include "mmw/numerics.hpp"

#include <sstream>

namespace mmw {

OverheadModel make_overhead_model(EstimatorKind kind, int t_p, int n_s, double t_c, int s,
                                  int tones_per_port) {
    OverheadModel m;
    m.pilot_len = t_p;
    m.streams = n_s;
    m.block_len_symbols = t_c;
    if (kind == EstimatorKind::FD) {
        m.effective_pilot_fraction = static_cast<double>(t_p);
    } else {
        if (s < 1 || tones_per_port < 1 || tones_per_port > s) {
            throw InvalidInput("make_overhead_model: need 1 <= tones per port <= S");
        }
        m.effective_pilot_fraction =
            static_cast<double>(t_p) * static_cast<double>(tones_per_port) / s;
    }
    return m;
}

double overhead_rho(const OverheadModel& m) {
    if (!(m.block_len_symbols > m.pilot_len + m.streams)) {
        std::ostringstream msg;
        msg << "overhead_rho: t_c = " << m.block_len_symbols << " must exceed t_p + N_s = "
            << m.pilot_len + m.streams;
        throw InvalidInput(msg.str());
    }
    const double rho = 1.0 - (m.effective_pilot_fraction + m.streams) / m.block_len_symbols;
    if (!(rho > 0.0 && rho <= 1.0)) {
        throw InvalidInput("overhead_rho: overhead factor outside (0, 1]");
    }
    return rho;
}

double rate_perfect_mu(const CMatrix& h, const CMatrix& f, std::span<const CMatrix> interferers,
                       const CMatrix& q, const CMatrix& w) {
    const CMatrix u = q * w;
    const CMatrix uh_h = u.adjoint() * h;
    const CMatrix a = uh_h * f;
    CMatrix c = u.adjoint() * u;
    for (const CMatrix& fi : interferers) {
        const CMatrix b = uh_h * fi;
        c.noalias() += b * b.adjoint();
    }
    return log2det_whitened(a, c);
}

double rate_perfect(const CMatrix& h, const CMatrix& f, const CMatrix& q, const CMatrix& w) {
    return rate_perfect_mu(h, f, {}, q, w);
}

double se_perfect(std::span<const CMatrix> h, std::span<const CMatrix> f,
                  std::span<const CMatrix> q, std::span<const CMatrix> w, double rho) {
    const std::size_t s = h.size();
    if (s == 0 || f.size() != s || q.size() != s || w.size() != s) {
        throw InvalidInput("se_perfect: per-subcarrier inputs differ in length");
    }
    double acc = 0.0;
    for (std::size_t nu = 0; nu < s; ++nu) {
        acc += rate_perfect(h[nu], f[nu], q[nu], w[nu]);
    }
    return rho * acc / static_cast<double>(s);
}

void EffectiveAccumulator::add(const CMatrix& e) {
    if (n_ == 0) {
        sum_ = CMatrix::Zero(e.rows(), e.cols());
        sum_outer_ = CMatrix::Zero(e.rows(), e.rows());
    } else if (e.rows() != sum_.rows() || e.cols() != sum_.cols()) {
        throw InvalidInput("EffectiveAccumulator: sample shape changed");
    }
    sum_ += e;
    sum_outer_.noalias() += e * e.adjoint();
    ++n_;
}

void EffectiveAccumulator::merge(const EffectiveAccumulator& o) {
    if (o.n_ == 0) {
        return;
    }
    if (n_ == 0) {
        *this = o;
        return;
    }
    sum_ += o.sum_;
    sum_outer_ += o.sum_outer_;
    n_ += o.n_;
}

EffectiveChannelStats EffectiveAccumulator::stats() const {
    if (n_ < 2) {
        throw InvalidInput("effective_stats: at least two samples are required");
    }
    const double n = static_cast<double>(n_);
    EffectiveChannelStats out;
    out.sample_count = n_;
    out.mean_channel = sum_ / n;
    CMatrix cov = (sum_outer_ - n * out.mean_channel * out.mean_channel.adjoint()) / (n - 1.0);
    cov = 0.5 * (cov + cov.adjoint());
    out.noise_covariance = cov + CMatrix::Identity(cov.rows(), cov.cols());
    return out;
}

EffectiveChannelStats effective_stats(std::span<const CMatrix> samples) {
    EffectiveAccumulator acc;
    for (const CMatrix& e : samples) {
        acc.add(e);
    }
    return acc.stats();
}

double uatf_su_rate(const EffectiveChannelStats& stats) {
    return log2det_whitened(stats.mean_channel, stats.noise_covariance);
}

void MuEffectiveAccumulator::add(const CMatrix& desired, std::span<const CMatrix> interference) {
    if (desired_.count() == 0) {
        interference_outer_ = CMatrix::Zero(desired.rows(), desired.rows());
    }
    desired_.add(desired);
    for (const CMatrix& e : interference) {
        interference_outer_.noalias() += e * e.adjoint();
    }
}

void MuEffectiveAccumulator::merge(const MuEffectiveAccumulator& o) {
    if (o.count() == 0) {
        return;
    }
    if (count() == 0) {
        *this = o;
        return;
    }
    desired_.merge(o.desired_);
    interference_outer_ += o.interference_outer_;
}

EffectiveChannelStats MuEffectiveAccumulator::stats() const {
    EffectiveChannelStats out = desired_.stats();
    CMatrix interference = interference_outer_ / static_cast<double>(desired_.count());
    interference = 0.5 * (interference + interference.adjoint());
    out.noise_covariance += interference;
    return out;
}

std::vector<double> uatf_mu_rate(std::span<const MuEffectiveAccumulator> users) {
    std::vector<double> rates;
    rates.reserve(users.size());
    for (const MuEffectiveAccumulator& u : users) {
        if (u.count() != users.front().count()) {
            throw InvalidInput("uatf_mu_rate: users were sampled on different draw counts");
        }
        rates.push_back(uatf_su_rate(u.stats()));
    }
    return rates;
}

} // namespace mmw
