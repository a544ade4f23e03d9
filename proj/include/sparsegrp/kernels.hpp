#pragma once

// Dense kernels shared by the solvers. Every kernel has a plain serial
// implementation, kept as the reference in tests, and an OpenMP variant.
// The dispatching entry points pick the OpenMP variant for large inputs
// when not already inside a parallel region.

#include "sparsegrp/types.hpp"

namespace sparsegrp::kernels {

namespace serial {

/// sigma2 * I + sum_i lambda_i G^(i) G^(i)^T, accumulated block by block.
Matrix assemble_sigma_y(const GroupedDesign& design, const Vector& lambda, double sigma2);

/// Per-group sum of squared column norms of x (x has the design's partition on its columns).
Vector block_column_energy(const Matrix& x, const Partition& partition);

/// G^T G.
Matrix gram(const Matrix& g);

}  // namespace serial

namespace parallel {

Matrix assemble_sigma_y(const GroupedDesign& design, const Vector& lambda, double sigma2);
Vector block_column_energy(const Matrix& x, const Partition& partition);
Matrix gram(const Matrix& g);

}  // namespace parallel

Matrix assemble_sigma_y(const GroupedDesign& design, const Vector& lambda, double sigma2);
Vector block_column_energy(const Matrix& x, const Partition& partition);
Matrix gram(const Matrix& g);

/// Number of OpenMP threads available outside a parallel region (1 without OpenMP).
int max_threads();
void set_threads(int threads);

}  // namespace sparsegrp::kernels
