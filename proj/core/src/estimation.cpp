// SPDX-License-Identifier: Apache-2.0

#include "mmw/estimation.hpp"

#include "mmw/numerics.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace mmw {

namespace {

cd twiddle(long long a, long long b, int n) {
    const long long k = (a * b) % n;
    return std::polar(1.0, -2.0 * kPi * static_cast<double>(k) / n);
}

// round(S l / L) with halves rounded up, in exact integer arithmetic.
int grid_point(int s, int l, int ell) {
    const long long num = 2LL * s * ell + l;
    return static_cast<int>(num / (2LL * l));
}

} // namespace

const char* to_string(EstimatorKind kind) {
    return kind == EstimatorKind::FD ? "FD" : "TD";
}

CMatrix unitary_dft_rows(int rows, int n) {
    if (n <= 0 || rows < 0 || rows > n) {
        throw InvalidInput("unitary_dft_rows: need 0 <= rows <= n and n >= 1");
    }
    CMatrix out(rows, n);
    const double norm = 1.0 / std::sqrt(static_cast<double>(n));
    for (int a = 0; a < rows; ++a) {
        for (int b = 0; b < n; ++b) {
            out(a, b) = norm * twiddle(a, b, n);
        }
    }
    return out;
}

int td_offset_capacity(int s, int l) {
    if (s < 1 || l < 1 || l > s) {
        throw InvalidInput("td_offset_capacity: need 1 <= L <= S");
    }
    int gap = s - grid_point(s, l, l - 1);
    for (int ell = 1; ell < l; ++ell) {
        gap = std::min(gap, grid_point(s, l, ell) - grid_point(s, l, ell - 1));
    }
    return gap;
}

std::vector<int> user_td_offsets(int user, int ports) {
    if (user < 0 || ports < 1) {
        throw InvalidInput("user_td_offsets: need user >= 0 and ports >= 1");
    }
    std::vector<int> out(ports);
    for (int p = 0; p < ports; ++p) {
        out[p] = user * ports + p;
    }
    return out;
}

std::vector<int> td_pilot_indices(int s, int l, int offset) {
    const int capacity = td_offset_capacity(s, l);
    if (offset < 0 || offset >= capacity) {
        std::ostringstream msg;
        msg << "td_pilot_indices: offset " << offset << " outside [0, " << capacity
            << ") for S=" << s << ", L=" << l;
        throw PilotCapacityError(msg.str());
    }
    std::vector<int> idx(l);
    for (int ell = 0; ell < l; ++ell) {
        idx[ell] = offset + grid_point(s, l, ell);
    }
    return idx;
}

std::vector<int> td_subband_pilot_indices(int s, int n_sub, int l_eff, int offset) {
    if (n_sub < 1 || s % n_sub != 0) {
        throw InvalidInput("td_subband_pilot_indices: S must be divisible by N_sub");
    }
    const int s_sub = s / n_sub;
    if (l_eff < 1 || l_eff > s_sub) {
        throw InvalidInput("td_subband_pilot_indices: need 1 <= L_eff <= S / N_sub");
    }
    const std::vector<int> local = td_pilot_indices(s_sub, l_eff, offset);
    std::vector<int> out;
    out.reserve(static_cast<std::size_t>(n_sub) * l_eff);
    for (int b = 0; b < n_sub; ++b) {
        for (int v : local) {
            out.push_back(b * s_sub + v);
        }
    }
    return out;
}

PilotBook make_pilot_books(int k, int n_c, int n_s, int t_p, int s, int l) {
    if (k < 1 || n_c < 1 || n_s < 1) {
        throw InvalidInput("make_pilot_books: dimensions must be positive");
    }
    if (t_p < k || t_p < n_c) {
        std::ostringstream msg;
        msg << "make_pilot_books: t_p = " << t_p << " is shorter than max(K, N_c) = "
            << std::max(k, n_c) << "; orthonormal rows are impossible";
        throw InvalidInput(msg.str());
    }
    if (l < 1 || l > s) {
        throw InvalidInput("make_pilot_books: need 1 <= L <= S");
    }
    const int ports = std::max(k, n_c);
    const int capacity = td_offset_capacity(s, l);
    if (ports > capacity) {
        std::ostringstream msg;
        msg << "make_pilot_books: " << ports << " ports need distinct tone offsets but S=" << s
            << ", L=" << l << " only provides " << capacity;
        throw PilotCapacityError(msg.str());
    }
    PilotBook book;
    book.uplink_full = unitary_dft_rows(k, t_p);
    book.uplink_effective = unitary_dft_rows(n_c, t_p);
    book.downlink = unitary_dft_rows(n_s, n_s);
    book.td_offsets.resize(ports);
    for (int p = 0; p < ports; ++p) {
        book.td_offsets[p] = p;
    }
    return book;
}

CMatrix simulate_uplink_pilot_rx(const CMatrix& channel, const CMatrix& book, double p_r,
                                 RngStream& rng, double noise_std) {
    if (channel.rows() != book.rows()) {
        throw InvalidInput("simulate_uplink_pilot_rx: channel rows must match pilot rows");
    }
    const double amp = std::sqrt(p_r * static_cast<double>(book.cols()));
    CMatrix y = amp * channel.transpose() * book;
    if (noise_std > 0.0) {
        CMatrix n(y.rows(), y.cols());
        rng.fill_complex_normal(n, noise_std * noise_std);
        y += n;
    }
    return y;
}

CMatrix ml_depilot(const CMatrix& y, const CMatrix& book, double scale) {
    return MlDepilot(book, scale)(y);
}

MlDepilot::MlDepilot(const CMatrix& book, double scale) {
    if (!(scale > 0.0)) {
        throw InvalidInput("ml_depilot: scale must be positive");
    }
    pinv_scaled_ = pseudo_inverse(book) / scale;
}

TdReconstructor::TdReconstructor(int s, std::vector<int> indices, int first, int count)
    : indices_(std::move(indices)) {
    const int l = static_cast<int>(indices_.size());
    if (count < 0) {
        count = s - first;
    }
    if (l < 1 || l > s || first < 0 || first + count > s) {
        throw InvalidInput("TdReconstructor: need 1 <= L <= S and a range inside [0, S)");
    }
    CMatrix a(l, l);
    for (int ell = 0; ell < l; ++ell) {
        for (int i = 0; i < l; ++i) {
            if (indices_[i] < 0 || indices_[i] >= s) {
                throw InvalidInput("TdReconstructor: pilot index outside [0, S)");
            }
            a(ell, i) = twiddle(ell, indices_[i], s);
        }
    }
    const Eigen::JacobiSVD<CMatrix> dec(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
    const RVector& sv = dec.singularValues();
    condition_ = sv(l - 1) > 0.0 ? sv(0) / sv(l - 1) : std::numeric_limits<double>::infinity();
    if (!(condition_ <= kMaxCondition)) {
        std::ostringstream msg;
        msg << "TdReconstructor: tone set has condition number " << condition_ << " > "
            << kMaxCondition;
        throw IllConditionedPilots(msg.str());
    }
    inv_ = dec.matrixV() * sv.cwiseInverse().asDiagonal() * dec.matrixU().adjoint();
    CMatrix f(l, count);
    for (int ell = 0; ell < l; ++ell) {
        for (int j = 0; j < count; ++j) {
            f(ell, j) = twiddle(ell, first + j, s);
        }
    }
    synth_ = inv_ * f;
}

CMatrix td_estimate(const CMatrix& tones, std::span<const int> indices, int s, double scale) {
    if (tones.cols() != static_cast<Eigen::Index>(indices.size())) {
        throw InvalidInput("td_estimate: need exactly one observation per pilot index");
    }
    if (!(scale > 0.0)) {
        throw InvalidInput("td_estimate: scale must be positive");
    }
    const TdReconstructor rec(s, std::vector<int>(indices.begin(), indices.end()));
    return rec.reconstruct(tones / scale);
}

CMatrix td_estimate_effective(const CMatrix& tones, std::span<const int> indices, int n_sub,
                              int l_eff, int s, double scale) {
    if (n_sub < 1 || s % n_sub != 0) {
        throw InvalidInput("td_estimate_effective: S must be divisible by N_sub");
    }
    const int s_sub = s / n_sub;
    if (l_eff < 1 || l_eff > s_sub) {
        throw InvalidInput("td_estimate_effective: L_eff exceeds the subband width");
    }
    if (tones.cols() != static_cast<Eigen::Index>(n_sub) * l_eff ||
        indices.size() != static_cast<std::size_t>(n_sub) * l_eff) {
        throw InvalidInput("td_estimate_effective: need N_sub * L_eff observations");
    }
    if (!(scale > 0.0)) {
        throw InvalidInput("td_estimate_effective: scale must be positive");
    }
    CMatrix out(tones.rows(), s);
    for (int b = 0; b < n_sub; ++b) {
        std::vector<int> band(indices.begin() + b * l_eff, indices.begin() + (b + 1) * l_eff);
        const TdReconstructor rec(s, std::move(band), b * s_sub, s_sub);
        out.middleCols(b * s_sub, s_sub) = rec.reconstruct(tones.middleCols(b * l_eff, l_eff) / scale);
    }
    return out;
}

TdEstimator::TdEstimator(int s, int n_sub, int l_eff, std::span<const int> offsets)
    : s_(s), n_sub_(n_sub), l_eff_(l_eff) {
    const int s_sub = s / std::max(n_sub, 1);
    for (int offset : offsets) {
        Grid g;
        g.indices = td_subband_pilot_indices(s, n_sub, l_eff, offset);
        for (int b = 0; b < n_sub; ++b) {
            std::vector<int> band(g.indices.begin() + b * l_eff,
                                  g.indices.begin() + (b + 1) * l_eff);
            g.bands.emplace_back(s, std::move(band), b * s_sub, s_sub);
        }
        grids_.push_back(std::move(g));
    }
}

CMatrix TdEstimator::reconstruct(int port, const CMatrix& tones) const {
    const Grid& g = grids_.at(port);
    const int s_sub = s_ / n_sub_;
    CMatrix out(tones.rows(), s_);
    for (int b = 0; b < n_sub_; ++b) {
        out.middleCols(b * s_sub, s_sub) =
            g.bands[b].reconstruct(tones.middleCols(b * l_eff_, l_eff_));
    }
    return out;
}

EstimateReport estimate_fd(std::span<const CMatrix> channel, const CMatrix& book, double p_r,
                           int t_p, RngStream& rng, double noise_std) {
    if (book.cols() != t_p) {
        throw InvalidInput("estimate_fd: pilot book length differs from t_p");
    }
    const MlDepilot depilot(book, std::sqrt(p_r * t_p));
    EstimateReport rep;
    rep.method = EstimatorKind::FD;
    rep.pilot_symbols_spent = static_cast<long long>(t_p) * static_cast<long long>(channel.size());
    rep.estimate.reserve(channel.size());
    for (const CMatrix& h : channel) {
        const CMatrix y = simulate_uplink_pilot_rx(h, book, p_r, rng, noise_std);
        rep.estimate.push_back(depilot(y).transpose());
    }
    rep.nmse_db = nmse_db(rep.estimate, channel);
    return rep;
}

EstimateReport estimate_td(std::span<const CMatrix> channel, const TdEstimator& estimator,
                           double p_r, int t_p, RngStream& rng, double noise_std) {
    const int s = estimator.num_subcarriers();
    if (static_cast<int>(channel.size()) != s) {
        throw InvalidInput("estimate_td: channel must cover every subcarrier");
    }
    const Eigen::Index ports = channel[0].rows();
    const Eigen::Index m = channel[0].cols();
    const int tones = estimator.tones_per_port();
    const double energy = p_r * t_p * static_cast<double>(s) / tones;
    const double amp = std::sqrt(energy);

    EstimateReport rep;
    rep.method = EstimatorKind::TD;
    rep.pilot_symbols_spent = static_cast<long long>(t_p) * tones;
    rep.estimate.assign(s, CMatrix(ports, m));
    CMatrix obs(m, tones);
    for (Eigen::Index p = 0; p < ports; ++p) {
        const std::vector<int>& idx = estimator.indices(static_cast<int>(p));
        for (int i = 0; i < tones; ++i) {
            obs.col(i) = amp * channel[idx[i]].row(p).transpose();
            if (noise_std > 0.0) {
                for (Eigen::Index r = 0; r < m; ++r) {
                    obs(r, i) += rng.complex_normal(noise_std * noise_std);
                }
            }
        }
        const CMatrix full = estimator.reconstruct(static_cast<int>(p), obs / amp);
        for (int nu = 0; nu < s; ++nu) {
            rep.estimate[nu].row(p) = full.col(nu).transpose();
        }
    }
    rep.nmse_db = nmse_db(rep.estimate, channel);
    return rep;
}

NmseSample nmse_sample(std::span<const CMatrix> estimate, std::span<const CMatrix> truth) {
    if (estimate.size() != truth.size()) {
        throw InvalidInput("nmse: estimate and truth cover different subcarrier counts");
    }
    NmseSample out;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        if (estimate[i].rows() != truth[i].rows() || estimate[i].cols() != truth[i].cols()) {
            throw InvalidInput("nmse: shape mismatch");
        }
        out.error_energy += (estimate[i] - truth[i]).squaredNorm();
        out.truth_energy += truth[i].squaredNorm();
    }
    return out;
}

double nmse_db(std::span<const CMatrix> estimate, std::span<const CMatrix> truth) {
    NmseAccumulator acc;
    acc.add(nmse_sample(estimate, truth));
    return acc.nmse_db();
}

void NmseAccumulator::add(const NmseSample& s) {
    ++n_;
    se_ += s.error_energy;
    st_ += s.truth_energy;
    see_ += s.error_energy * s.error_energy;
    stt_ += s.truth_energy * s.truth_energy;
    set_ += s.error_energy * s.truth_energy;
}

void NmseAccumulator::merge(const NmseAccumulator& o) {
    n_ += o.n_;
    se_ += o.se_;
    st_ += o.st_;
    see_ += o.see_;
    stt_ += o.stt_;
    set_ += o.set_;
}

double NmseAccumulator::nmse_linear() const {
    if (!(st_ > 0.0)) {
        throw InvalidInput("nmse: truth has zero energy");
    }
    return se_ / st_;
}

double NmseAccumulator::nmse_db() const {
    const double r = nmse_linear();
    if (r <= 0.0) {
        return kNmseFloorDb;
    }
    return std::max(10.0 * std::log10(r), kNmseFloorDb);
}

double NmseAccumulator::stderr_db() const {
    if (n_ < 2) {
        return 0.0;
    }
    const double r = nmse_linear();
    if (r <= 0.0) {
        return 0.0;
    }
    const double n = static_cast<double>(n_);
    const double me = se_ / n;
    const double mt = st_ / n;
    const double ve = (see_ - n * me * me) / (n - 1.0);
    const double vt = (stt_ - n * mt * mt) / (n - 1.0);
    const double cet = (set_ - n * me * mt) / (n - 1.0);
    const double var_r = std::max(ve - 2.0 * r * cet + r * r * vt, 0.0) / (n * mt * mt);
    return 10.0 / std::log(10.0) * std::sqrt(var_r) / r;
}

} // namespace mmw
