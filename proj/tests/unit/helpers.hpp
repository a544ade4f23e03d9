#pragma once

#include "sparsegrp/types.hpp"

#include <random>

namespace testutil {

using sparsegrp::Index;
using sparsegrp::Matrix;
using sparsegrp::Vector;

inline Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd;
    Matrix m(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            m(i, j) = nd(rng);
        }
    }
    return m;
}

inline Vector gaussian_vec(Index n, std::mt19937_64& rng) { return gaussian(n, 1, rng).col(0); }

inline Vector uniform_vec(Index n, double lo, double hi, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(lo, hi);
    Vector v(n);
    for (Index i = 0; i < n; ++i) {
        v[i] = u(rng);
    }
    return v;
}

/// n x m matrix with G^T G = n I.
inline Matrix orthogonal_design(Index n, Index m, std::mt19937_64& rng) {
    const Matrix a = gaussian(n, m, rng);
    Eigen::HouseholderQR<Matrix> qr(a);
    const Matrix q = qr.householderQ() * Matrix::Identity(n, m);
    return q * std::sqrt(static_cast<double>(n));
}

inline double rel_err(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

}  // namespace testutil
