// SPDX-License-Identifier: Apache-2.0

#include "mmw/numerics.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace mmw {

namespace {

void require_finite(const CMatrix& a, const char* what) {
    if (!a.allFinite()) {
        throw InvalidInput(std::string(what) + ": matrix has non-finite entries");
    }
}

// Index of the largest-magnitude entry; near-ties resolve to the lowest index.
Eigen::Index anchor_index(const Eigen::Ref<const CVector>& v) {
    const double peak = v.cwiseAbs().maxCoeff();
    const double cut = peak * (1.0 - 1e-9);
    for (Eigen::Index i = 0; i < v.size(); ++i) {
        if (std::abs(v(i)) >= cut) {
            return i;
        }
    }
    return 0;
}

cd unit_phase(cd z) {
    const double r = std::abs(z);
    return r > 0.0 ? z / r : cd{1.0, 0.0};
}

void fix_phases(CMatrix& u, CMatrix& v, Eigen::Index paired) {
    for (Eigen::Index k = 0; k < u.cols(); ++k) {
        const cd rot = std::conj(unit_phase(u(anchor_index(u.col(k)), k)));
        u.col(k) *= rot;
        if (k < paired) {
            v.col(k) *= rot;
        }
    }
    for (Eigen::Index k = paired; k < v.cols(); ++k) {
        v.col(k) *= std::conj(unit_phase(v(anchor_index(v.col(k)), k)));
    }
}

} // namespace

SvdFactorization svd(const CMatrix& a, SvdMode mode) {
    require_finite(a, "svd");
    const unsigned opts = mode == SvdMode::Full ? (Eigen::ComputeFullU | Eigen::ComputeFullV)
                                                : (Eigen::ComputeThinU | Eigen::ComputeThinV);
    Eigen::JacobiSVD<CMatrix> dec(a, opts);
    SvdFactorization out{dec.matrixU(), dec.singularValues(), dec.matrixV()};
    fix_phases(out.left_vectors, out.right_vectors, out.singular_values.size());
    return out;
}

CMatrix pseudo_inverse(const CMatrix& a) {
    require_finite(a, "pseudo_inverse");
    if (a.rows() == 0 || a.rows() > a.cols()) {
        std::ostringstream msg;
        msg << "pseudo_inverse: " << a.rows() << "x" << a.cols()
            << " matrix cannot have full row rank";
        throw SingularMatrix(msg.str());
    }
    const RVector s = Eigen::JacobiSVD<CMatrix>(a).singularValues();
    const double ratio = s(0) > 0.0 ? s(s.size() - 1) / s(0) : 0.0;
    if (!(ratio > kRankTolerance)) {
        std::ostringstream msg;
        msg << "pseudo_inverse: rank deficient rows, sigma_min/sigma_max = " << ratio
            << " <= " << kRankTolerance;
        throw SingularMatrix(msg.str());
    }
    const CMatrix gram = a * a.adjoint();
    return gram.llt().solve(a).adjoint();
}

CMatrix left_pseudo_inverse(const CMatrix& a) {
    return pseudo_inverse(a.adjoint()).adjoint();
}

CMatrix dft_matrix(int n) {
    if (n <= 0) {
        throw InvalidInput("dft_matrix: size must be positive");
    }
    CMatrix f(n, n);
    for (int a = 0; a < n; ++a) {
        for (int b = 0; b < n; ++b) {
            const long long k = (static_cast<long long>(a) * b) % n;
            f(a, b) = std::polar(1.0, -2.0 * kPi * static_cast<double>(k) / n);
        }
    }
    return f;
}

PowerAllocation water_fill(std::span<const double> gains, double budget) {
    if (!(budget > 0.0) || !std::isfinite(budget)) {
        throw InvalidInput("water_fill: budget must be positive and finite");
    }
    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < gains.size(); ++i) {
        if (gains[i] > 0.0) {
            order.push_back(i);
        }
    }
    if (order.empty()) {
        throw InvalidInput("water_fill: no stream has positive gain");
    }
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return gains[a] > gains[b]; });

    // Drop the weakest active stream until it sits below the water level.
    std::size_t active = order.size();
    double level = 0.0;
    while (true) {
        double inv_sum = 0.0;
        for (std::size_t k = 0; k < active; ++k) {
            inv_sum += 1.0 / gains[order[k]];
        }
        level = (budget + inv_sum) / static_cast<double>(active);
        if (level > 1.0 / gains[order[active - 1]] || active == 1) {
            break;
        }
        --active;
    }

    PowerAllocation out;
    out.water_level = level;
    out.per_stream_power.assign(gains.size(), 0.0);
    for (std::size_t k = 0; k < active; ++k) {
        out.per_stream_power[order[k]] = level - 1.0 / gains[order[k]];
    }
    return out;
}

double log2det_identity_plus(const CMatrix& x) {
    const Eigen::Index n = x.rows();
    CMatrix m = CMatrix::Identity(n, n) + 0.5 * (x + x.adjoint());
    Eigen::LLT<CMatrix> llt(m);
    if (llt.info() != Eigen::Success) {
        throw SingularMatrix("log2det_identity_plus: argument is not positive definite");
    }
    double acc = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        acc += std::log2(llt.matrixLLT()(i, i).real());
    }
    return 2.0 * acc;
}

double log2det_whitened(const CMatrix& a, const CMatrix& c) {
    Eigen::LLT<CMatrix> llt(0.5 * (c + c.adjoint()));
    if (llt.info() != Eigen::Success) {
        throw SingularMatrix("log2det_whitened: covariance is not positive definite");
    }
    const CMatrix y = llt.matrixL().solve(a);
    return log2det_identity_plus(y.adjoint() * y);
}

double frobenius_sq(const CMatrix& a) { return a.squaredNorm(); }

} // namespace mmw
