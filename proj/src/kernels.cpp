#include "sparsegrp/kernels.hpp"

#include <omp.h>

#include <algorithm>

namespace sparsegrp::kernels {

namespace {

// Below this many multiply-adds the thread startup dominates.
constexpr double kParallelWork = 2.0e6;

bool use_parallel(double work) {
    return work >= kParallelWork && !omp_in_parallel() && omp_get_max_threads() > 1;
}

void check_lambda(const GroupedDesign& design, const Vector& lambda) {
    if (lambda.size() != design.p()) {
        throw DimensionError("lambda length differs from number of groups");
    }
}

}  // namespace

namespace serial {

Matrix assemble_sigma_y(const GroupedDesign& design, const Vector& lambda, double sigma2) {
    check_lambda(design, lambda);
    const Index n = design.n();
    Matrix sigma = Matrix::Zero(n, n);
    for (Index i = 0; i < design.p(); ++i) {
        if (lambda[i] == 0.0) {
            continue;
        }
        const auto gi = design.block(i);
        sigma.selfadjointView<Eigen::Lower>().rankUpdate(gi, lambda[i]);
    }
    sigma.triangularView<Eigen::StrictlyUpper>() = sigma.transpose();
    sigma.diagonal().array() += sigma2;
    return sigma;
}

Vector block_column_energy(const Matrix& x, const Partition& partition) {
    if (x.cols() != partition.total()) {
        throw DimensionError("column count differs from partition size");
    }
    Vector out(partition.groups());
    for (Index i = 0; i < partition.groups(); ++i) {
        out[i] = x.middleCols(partition.offset(i), partition.size(i)).squaredNorm();
    }
    return out;
}

Matrix gram(const Matrix& g) {
    Matrix out = Matrix::Zero(g.cols(), g.cols());
    out.selfadjointView<Eigen::Lower>().rankUpdate(g.transpose());
    out.triangularView<Eigen::StrictlyUpper>() = out.transpose();
    return out;
}

}  // namespace serial

namespace parallel {

Matrix assemble_sigma_y(const GroupedDesign& design, const Vector& lambda, double sigma2) {
    check_lambda(design, lambda);
    const Index n = design.n();
    // Scaled design G * Lambda^{1/2}; Sigma = Gs Gs^T + sigma2 I.
    const Vector scale = design.partition().expand(lambda).cwiseSqrt();
    const Matrix gs = design.matrix() * scale.asDiagonal();
    Matrix sigma(n, n);
#pragma omp parallel for schedule(dynamic, 8)
    for (Index j = 0; j < n; ++j) {
        sigma.col(j).noalias() = gs * gs.row(j).transpose();
        sigma(j, j) += sigma2;
    }
    return sigma;
}

Vector block_column_energy(const Matrix& x, const Partition& partition) {
    if (x.cols() != partition.total()) {
        throw DimensionError("column count differs from partition size");
    }
    Vector out(partition.groups());
#pragma omp parallel for schedule(dynamic, 1)
    for (Index i = 0; i < partition.groups(); ++i) {
        out[i] = x.middleCols(partition.offset(i), partition.size(i)).squaredNorm();
    }
    return out;
}

Matrix gram(const Matrix& g) {
    const Index m = g.cols();
    Matrix out(m, m);
#pragma omp parallel for schedule(dynamic, 4)
    for (Index j = 0; j < m; ++j) {
        out.col(j).noalias() = g.transpose() * g.col(j);
    }
    return out;
}

}  // namespace parallel

Matrix assemble_sigma_y(const GroupedDesign& design, const Vector& lambda, double sigma2) {
    const double work = static_cast<double>(design.n()) * design.n() * design.m();
    return use_parallel(work) ? parallel::assemble_sigma_y(design, lambda, sigma2)
                              : serial::assemble_sigma_y(design, lambda, sigma2);
}

Vector block_column_energy(const Matrix& x, const Partition& partition) {
    const double work = static_cast<double>(x.rows()) * x.cols();
    return use_parallel(work) ? parallel::block_column_energy(x, partition)
                              : serial::block_column_energy(x, partition);
}

Matrix gram(const Matrix& g) {
    const double work = static_cast<double>(g.rows()) * g.cols() * g.cols();
    return use_parallel(work) ? parallel::gram(g) : serial::gram(g);
}

int max_threads() { return omp_get_max_threads(); }

void set_threads(int threads) { omp_set_num_threads(std::max(1, threads)); }

}  // namespace sparsegrp::kernels
