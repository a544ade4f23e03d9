#pragma once

// Nonconvex marginal-likelihood estimator of the group scales, closed forms
// for orthogonal designs and related diagnostics.

#include "sparsegrp/core_model.hpp"
#include "sparsegrp/pqn.hpp"

namespace sparsegrp {

struct HglSolution {
    Vector lambda;
    SolverDiagnostics diagnostics;
};

/// Stationary point of the negative log marginal posterior over lambda >= 0, started at lambda0.
HglSolution solve_hgl_pqn(const Vector& y, const GroupedDesign& design, double sigma2, double gamma,
                          const Vector& lambda0, const PqnConfig& config = {});

/// Largest violation of the first-order conditions of the marginal posterior at lambda.
double kkt_residual_hgl(const Vector& lambda, const Vector& y, const GroupedDesign& design, double sigma2,
                        double gamma);

/// Posterior mean at lambda packaged as an estimate.
EstimateResult estimate_from_lambda(const GroupedDesign& design, const Vector& y, const Vector& lambda,
                                    double sigma2);

/// Orthogonal design (G^T G = n I): per-block maximizer of the marginal posterior,
/// max(0, (sqrt(k^2 + 8 gamma t) - k) / (4 gamma) - sigma2 / n) with t = ||theta_ls||^2.
double closed_form_lambda_orth(double theta_ls_norm2, Index k, Index n, double sigma2, double gamma);
double closed_form_lambda_orth(const Vector& theta_ls_block, Index n, double sigma2, double gamma);

/// Orthogonal design MKL solution max(0, ||theta_ls|| / sqrt(2 gamma) - sigma2 / n); gamma must be positive.
double closed_form_lambda_mkl_orth(const Vector& theta_ls_block, Index n, double sigma2, double gamma);

/// Per-block marginal objective under an orthogonal design, up to constants.
double orth_marginal_objective(double lambda, double theta_ls_norm2, Index k, Index n, double sigma2,
                               double gamma);

/// ||theta^(i)||^2 / k_i.
double lambda_opt(const Vector& theta_true_block);

enum class Estimator { hgl, mkl };

struct ZeroProbQuery {
    double theta_block_norm2 = 0.0;
    Index k = 1;
    Index n = 1;
    double sigma2 = 1.0;
    double gamma = 0.0;
    Estimator estimator = Estimator::hgl;
};

/// CDF of the noncentral chi-square with dof degrees of freedom and noncentrality nc at x.
double noncentral_chi2_cdf(double x, double dof, double nc);

/// Probability that the orthogonal-design estimate of lambda_i is exactly zero.
double prob_lambda_zero(const ZeroProbQuery& q);

struct TwoGroupResult {
    double lambda2_hgl = 0.0;
    double lambda2_mkl = 0.0;
    double gamma_min_hgl = 0.0;
    double gamma_min_mkl = 0.0;
    double theta2_hgl = 0.0;
    double theta2_mkl = 0.0;
};

/// Two scalar groups with G^(1) = (1, delta)^T and G^(2) = (0, 1)^T.
/// lambda2 and theta2 are evaluated with lambda1 = 0; gamma_min is the smallest
/// gamma beyond which lambda1 = 0 satisfies the first-order conditions.
TwoGroupResult two_group_thresholds(const Eigen::Vector2d& y, double sigma2, double delta, double gamma);

/// Left-hand sides of the lambda1 = 0 conditions (nonnegative when satisfied).
double two_group_condition_hgl(const Eigen::Vector2d& y, double sigma2, double delta, double gamma);
double two_group_condition_mkl(const Eigen::Vector2d& y, double sigma2, double delta, double gamma);

struct WeightedMseProfile {
    std::vector<double> lambdas;
    std::vector<double> values;
    double minimizer = 0.0;
    double limit = 0.0;  ///< sum d^(alpha-4) beta^2 / sum d^(alpha-4)
};

/// sum_k d_k^alpha (beta_k^2 / n + lambda^2 d_k^2) / (1/n + lambda d_k^2)^2 on a log grid of lambda.
double weighted_mse(const Vector& d, const Vector& beta, int alpha, double n, double lambda);
WeightedMseProfile weighted_mse_profile(const DiagonalizedBlock& block, int alpha, double n,
                                        int grid_points = 401);

}  // namespace sparsegrp
