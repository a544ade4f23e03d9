#include "sparsegrp/core_model.hpp"

#include "sparsegrp/kernels.hpp"

#include <cmath>

namespace sparsegrp {

namespace {

void check_y(const GroupedDesign& design, const Vector& y) {
    if (y.size() != design.n()) {
        throw DimensionError("y has length " + std::to_string(y.size()) + ", design has " +
                             std::to_string(design.n()) + " rows");
    }
}

void check_lambda(const GroupedDesign& design, const Vector& lambda, double sigma2) {
    HyperState hs{lambda, 0.0, sigma2};
    hs.validate_for(design);
}

double log_det_from_llt(const Eigen::LLT<Matrix>& llt) {
    return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

Eigen::LLT<Matrix> factor(const Matrix& a, const char* what) {
    Eigen::LLT<Matrix> llt(a);
    if (llt.info() != Eigen::Success) {
        throw NumericalError(std::string("Cholesky factorization failed for ") + what);
    }
    return llt;
}

Vector group_sums_sq(const Vector& v, const Partition& part) {
    Vector out(part.groups());
    for (Index i = 0; i < part.groups(); ++i) {
        out[i] = v.segment(part.offset(i), part.size(i)).squaredNorm();
    }
    return out;
}

}  // namespace

MarginalModel::MarginalModel(GroupedDesign design, Vector y, Route route)
    : design_(std::move(design)), y_(std::move(y)), route_(route) {
    check_y(design_, y_);
    gty_ = design_.matrix().transpose() * y_;
    yy_ = y_.squaredNorm();
    if (route_ != Route::data_space) {
        gram_ = kernels::gram(design_.matrix());
    }
}

MarginalTerms MarginalModel::terms(const Vector& lambda, double sigma2, bool with_trace) const {
    check_lambda(design_, lambda, sigma2);
    switch (route_) {
        case Route::data_space:
            return data_space_terms(lambda, sigma2, with_trace);
        case Route::coefficient_space:
            return coefficient_space_terms(lambda, sigma2, with_trace);
        case Route::automatic:
            break;
    }
    Index active_cols = 0;
    for (Index i = 0; i < design_.p(); ++i) {
        if (lambda[i] > 0.0) {
            active_cols += design_.partition().size(i);
        }
    }
    return active_cols < design_.n() ? coefficient_space_terms(lambda, sigma2, with_trace)
                                     : data_space_terms(lambda, sigma2, with_trace);
}

MarginalTerms MarginalModel::data_space_terms(const Vector& lambda, double sigma2, bool with_trace) const {
    const Matrix sigma = kernels::assemble_sigma_y(design_, lambda, sigma2);
    const auto llt = factor(sigma, "Sigma_y");
    MarginalTerms t;
    t.log_det = log_det_from_llt(llt);
    const Vector alpha = llt.solve(y_);
    t.quad = y_.dot(alpha);
    t.w_proj = design_.matrix().transpose() * alpha;
    t.fit = group_sums_sq(t.w_proj, design_.partition());
    if (with_trace) {
        const Matrix x = llt.matrixL().solve(design_.matrix());
        t.trace = kernels::block_column_energy(x, design_.partition());
    }
    return t;
}

MarginalTerms MarginalModel::coefficient_space_terms(const Vector& lambda, double sigma2,
                                                     bool with_trace) const {
    const Partition& part = design_.partition();
    const Index n = design_.n();
    std::vector<Index> active;
    std::vector<double> scale;
    for (Index i = 0; i < design_.p(); ++i) {
        if (lambda[i] > 0.0) {
            const double s = std::sqrt(lambda[i]);
            for (Index j = 0; j < part.size(i); ++j) {
                active.push_back(part.offset(i) + j);
                scale.push_back(s);
            }
        }
    }
    MarginalTerms t;
    const double inv_s2 = 1.0 / sigma2;
    if (active.empty()) {
        t.log_det = static_cast<double>(n) * std::log(sigma2);
        t.quad = yy_ * inv_s2;
        t.w_proj = gty_ * inv_s2;
        t.fit = group_sums_sq(t.w_proj, part);
        if (with_trace) {
            t.trace.resize(part.groups());
            for (Index i = 0; i < part.groups(); ++i) {
                t.trace[i] = gram_.diagonal().segment(part.offset(i), part.size(i)).sum() * inv_s2;
            }
        }
        return t;
    }
    const Eigen::Map<const Vector> s(scale.data(), static_cast<Index>(scale.size()));
    const Matrix c_a = gram_(active, Eigen::all);  // |a| x m
    Matrix mmat = s.asDiagonal() * c_a(Eigen::all, active) * s.asDiagonal() * inv_s2;
    mmat.diagonal().array() += 1.0;
    const auto llt = factor(mmat, "I + S G^T G S / sigma2");

    t.log_det = static_cast<double>(n) * std::log(sigma2) + log_det_from_llt(llt);
    const Vector u = s.cwiseProduct(gty_(active));
    const Vector v = llt.solve(u);
    t.quad = (yy_ - u.dot(v) * inv_s2) * inv_s2;
    t.w_proj = (gty_ - c_a.transpose() * s.cwiseProduct(v) * inv_s2) * inv_s2;
    t.fit = group_sums_sq(t.w_proj, part);
    if (with_trace) {
        const Matrix z = llt.matrixL().solve(s.asDiagonal() * c_a);  // |a| x m
        const Vector z_energy = kernels::block_column_energy(z, part);
        t.trace.resize(part.groups());
        for (Index i = 0; i < part.groups(); ++i) {
            const double diag_sum = gram_.diagonal().segment(part.offset(i), part.size(i)).sum();
            t.trace[i] = (diag_sum - z_energy[i] * inv_s2) * inv_s2;
        }
    }
    return t;
}

double MarginalModel::hgl_objective(const Vector& lambda, double sigma2, double gamma, Vector* grad) const {
    const MarginalTerms t = terms(lambda, sigma2, grad != nullptr);
    if (grad != nullptr) {
        *grad = 0.5 * (t.trace - t.fit);
        grad->array() += gamma;
    }
    return 0.5 * t.log_det + 0.5 * t.quad + gamma * lambda.sum();
}

double MarginalModel::mkl_objective(const Vector& lambda, double sigma2, double gamma, Vector* grad) const {
    const MarginalTerms t = terms(lambda, sigma2, false);
    if (grad != nullptr) {
        *grad = -0.5 * t.fit;
        grad->array() += gamma;
    }
    return 0.5 * t.quad + gamma * lambda.sum();
}

Matrix assemble_sigma_y(const GroupedDesign& design, const HyperState& hs) {
    hs.validate_for(design);
    return kernels::assemble_sigma_y(design, hs.lambda, hs.sigma2);
}

BlockVector posterior_mean(const GroupedDesign& design, const HyperState& hs, const Vector& y) {
    hs.validate_for(design);
    check_y(design, y);
    const MarginalModel model(design, y);
    const MarginalTerms t = model.terms(hs.lambda, hs.sigma2, false);
    Vector theta = design.partition().expand(hs.lambda).cwiseProduct(t.w_proj);
    return BlockVector(std::move(theta), design.partition());
}

double neg_log_marginal(const GroupedDesign& design, const HyperState& hs, const Vector& y) {
    hs.validate_for(design);
    return MarginalModel(design, y).hgl_objective(hs.lambda, hs.sigma2, hs.gamma);
}

Vector neg_log_marginal_grad(const GroupedDesign& design, const HyperState& hs, const Vector& y) {
    hs.validate_for(design);
    Vector grad;
    MarginalModel(design, y).hgl_objective(hs.lambda, hs.sigma2, hs.gamma, &grad);
    return grad;
}

double mse_of_lambda(const GroupedDesign& design, const HyperState& hs, const BlockVector& theta_true,
                     MseForm form) {
    hs.validate_for(design);
    if (theta_true.partition() != design.partition()) {
        throw DimensionError("true coefficients do not match the design partition");
    }
    const bool all_positive = (hs.lambda.array() > 0.0).all();
    if (form == MseForm::automatic) {
        form = all_positive ? MseForm::precision : MseForm::covariance;
    }
    const Matrix& g = design.matrix();
    const Vector lam = design.partition().expand(hs.lambda);
    const Vector& th = theta_true.values();
    const double s2 = hs.sigma2;

    if (form == MseForm::precision) {
        if (!all_positive) {
            throw std::invalid_argument("precision form of the MSE needs every lambda_i > 0");
        }
        const Matrix gtg = kernels::gram(g);
        Matrix a = gtg;
        a.diagonal() += s2 * lam.cwiseInverse();
        const auto llt = factor(a, "G^T G + sigma2 Lambda^-1");
        const Matrix a_inv_gtg = llt.solve(gtg);
        const Matrix a_inv2_gtg = llt.solve(a_inv_gtg.transpose());
        const Vector shifted = llt.solve(lam.cwiseInverse().cwiseProduct(th));
        return s2 * (a_inv2_gtg.trace() + s2 * shifted.squaredNorm());
    }

    const Matrix sigma = kernels::assemble_sigma_y(design, hs.lambda, s2);
    const auto llt = factor(sigma, "Sigma_y");
    const Matrix w_g = llt.solve(g);  // Sigma^-1 G
    const Matrix w_g_lam = w_g * lam.asDiagonal();
    const Vector bias = lam.cwiseProduct(g.transpose() * (w_g * th)) - th;
    return bias.squaredNorm() + s2 * w_g_lam.squaredNorm();
}

DiagonalizedBlock diagonalize_block(const GroupedDesign& design, const HyperState& hs, const Vector& y,
                                    Index i, const std::optional<BlockVector>& theta_true) {
    if (i < 0 || i >= design.p()) {
        throw DimensionError("block index out of range");
    }
    check_y(design, y);
    HyperState others = hs;
    others.lambda[i] = 0.0;
    others.validate_for(design);

    const double root_n = std::sqrt(static_cast<double>(design.n()));
    const Matrix sigma_vbar = kernels::assemble_sigma_y(design, others.lambda, hs.sigma2);
    Eigen::SelfAdjointEigenSolver<Matrix> eig(sigma_vbar);
    if (eig.info() != Eigen::Success || eig.eigenvalues().minCoeff() <= 0.0) {
        throw NumericalError("Sigma_vbar is not positive definite");
    }
    const Matrix inv_sqrt =
        eig.eigenvectors() * eig.eigenvalues().cwiseSqrt().cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();

    const Matrix a = inv_sqrt * design.block(i) / root_n;
    Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const Vector& d = svd.singularValues();
    if (d.size() < design.partition().size(i) || !(d.minCoeff() > 1e-14 * std::max(1.0, d.maxCoeff()))) {
        throw NumericalError("block " + std::to_string(i) + " is rank deficient after whitening");
    }

    DiagonalizedBlock out;
    out.block = i;
    out.u = svd.matrixU();
    out.v = svd.matrixV();
    out.d = d;
    out.z = out.u.transpose() * (inv_sqrt * y) / root_n;
    if (theta_true) {
        if (theta_true->partition() != design.partition()) {
            throw DimensionError("true coefficients do not match the design partition");
        }
        out.beta = out.v.transpose() * theta_true->block(i);
        out.epsilon = out.z - d.cwiseProduct(*out.beta);
    }
    return out;
}

}  // namespace sparsegrp
