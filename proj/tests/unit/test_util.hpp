// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mmw/rng.hpp"
#include "mmw/types.hpp"

namespace mmw::test {

inline CMatrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
    RngStream rng(seed);
    CMatrix m(rows, cols);
    rng.fill_complex_normal(m);
    return m;
}

inline double max_abs(const CMatrix& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline double orthonormality_error(const CMatrix& q) {
    return max_abs(q.adjoint() * q - CMatrix::Identity(q.cols(), q.cols()));
}

} // namespace mmw::test
