#pragma once

#include "sparsegrp/types.hpp"

#include <optional>

namespace sparsegrp {

/**
 * Which algebraic route is used to invert Sigma_y.
 *
 * data_space factors the n x n matrix Sigma_y directly. coefficient_space
 * uses the inversion lemma on the active columns (groups with lambda > 0),
 * factoring I + S G^T G S / sigma2 with S = Lambda^{1/2}, which remains
 * well defined when some lambda_i are zero. automatic picks whichever
 * matrix is smaller.
 */
enum class Route { automatic, data_space, coefficient_space };

/// Quantities every marginal-likelihood computation is built from (W = Sigma_y^{-1}).
struct MarginalTerms {
    double log_det = 0.0;  ///< log det Sigma_y
    double quad = 0.0;     ///< y^T W y
    Vector w_proj;         ///< G^T W y, length m
    Vector fit;            ///< ||G^(i)T W y||^2 per group
    Vector trace;          ///< tr(G^(i)T W G^(i)) per group; empty unless requested
};

/**
 * Marginal likelihood of y given lambda for a fixed design, with the
 * design-only products (G^T G, G^T y, y^T y) cached.
 */
class MarginalModel {
public:
    MarginalModel(GroupedDesign design, Vector y, Route route = Route::automatic);

    const GroupedDesign& design() const { return design_; }
    const Vector& y() const { return y_; }

    MarginalTerms terms(const Vector& lambda, double sigma2, bool with_trace) const;

    /// 1/2 log det Sigma_y + 1/2 y^T Sigma_y^{-1} y + gamma sum(lambda); gradient written if grad != nullptr.
    double hgl_objective(const Vector& lambda, double sigma2, double gamma, Vector* grad = nullptr) const;

    /// 1/2 y^T Sigma_y^{-1} y + gamma sum(lambda) (the reduced MKL objective).
    double mkl_objective(const Vector& lambda, double sigma2, double gamma, Vector* grad = nullptr) const;

private:
    MarginalTerms data_space_terms(const Vector& lambda, double sigma2, bool with_trace) const;
    MarginalTerms coefficient_space_terms(const Vector& lambda, double sigma2, bool with_trace) const;

    GroupedDesign design_;
    Vector y_;
    Route route_;
    Matrix gram_;  // empty for Route::data_space
    Vector gty_;
    double yy_ = 0.0;
};

/// sigma2 I + sum_i lambda_i G^(i) G^(i)^T.
Matrix assemble_sigma_y(const GroupedDesign& design, const HyperState& hs);

/// E[theta | y, lambda] = Lambda G^T Sigma_y^{-1} y. Blocks with lambda_i = 0 are exactly zero.
BlockVector posterior_mean(const GroupedDesign& design, const HyperState& hs, const Vector& y);

/// Negative log marginal posterior of lambda (up to constants), including gamma * sum(lambda).
double neg_log_marginal(const GroupedDesign& design, const HyperState& hs, const Vector& y);

/// Gradient of neg_log_marginal with respect to lambda.
Vector neg_log_marginal_grad(const GroupedDesign& design, const HyperState& hs, const Vector& y);

enum class MseForm { automatic, precision, covariance };

/**
 * Mean squared error of the posterior mean at fixed lambda given the true
 * coefficients. The precision form tr[s2 A^-1 (G^T G + s2 L^-1 t t^T L^-1) A^-1]
 * with A = G^T G + s2 L^-1 needs every lambda_i > 0; the covariance form
 * (bias of Lambda G^T W G plus noise term) is its continuous extension to
 * lambda_i = 0, where the block contributes ||theta_true^(i)||^2.
 */
double mse_of_lambda(const GroupedDesign& design, const HyperState& hs, const BlockVector& theta_true,
                     MseForm form = MseForm::automatic);

/**
 * Single-block model after whitening by the other groups and rotating by
 * the SVD of Sigma_vbar^{-1/2} G^(i) / sqrt(n):
 *   z = D beta + eps,  beta = V^T theta^(i).
 */
struct DiagonalizedBlock {
    Index block = 0;
    Vector z;
    Vector d;
    std::optional<Vector> beta;
    std::optional<Vector> epsilon;  ///< z - D beta
    Matrix u;
    Matrix v;
};

DiagonalizedBlock diagonalize_block(const GroupedDesign& design, const HyperState& hs, const Vector& y,
                                    Index i, const std::optional<BlockVector>& theta_true = std::nullopt);

}  // namespace sparsegrp
