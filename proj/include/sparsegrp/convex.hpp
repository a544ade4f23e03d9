#pragma once

// Convex group-sparse estimators: Lasso, Group Lasso, the MKL scale-factor
// problem and the Adaptive Lasso.

#include "sparsegrp/pqn.hpp"
#include "sparsegrp/types.hpp"

#include <cmath>

namespace sparsegrp {

struct ConvexFitConfig {
    double reg_param = 0.0;
    int max_iter = 10000;
    double tol = 1e-8;  ///< relative objective change between sweeps
    std::optional<double> eta;

    void validate() const;
};

/// min ||y - G theta||^2 / (2 sigma2) + reg * sum_j w_j |theta_j| by cyclic coordinate descent.
/// weights defaults to all ones.
EstimateResult solve_lasso(const Vector& y, const Matrix& g, double sigma2, const ConvexFitConfig& config,
                           const std::optional<Vector>& weights = std::nullopt);

/// min ||y - G theta||^2 / (2 sigma2) + reg * sum_i ||theta^(i)|| by block coordinate descent.
EstimateResult solve_glasso(const Vector& y, const GroupedDesign& design, double sigma2,
                            const ConvexFitConfig& config);

/// Objective values used by the solvers above (exposed for tests).
double lasso_objective(const Vector& y, const Matrix& g, double sigma2, double reg, const Vector& theta,
                       const std::optional<Vector>& weights = std::nullopt);
double glasso_objective(const Vector& y, const GroupedDesign& design, double sigma2, double reg,
                        const Vector& theta);

struct MklSolution {
    Vector lambda;
    SolverDiagnostics diagnostics;
};

/// Default solver settings for the MKL problem: absolute tolerance scaled by 1 + 2 gamma.
PqnConfig mkl_default_config(double gamma);

/// argmin_{lambda >= 0} y^T (sum lambda_i G^(i) G^(i)^T + sigma2 I)^{-1} y / 2 + gamma sum(lambda).
/// Throws std::invalid_argument("mkl requires positive gamma") when gamma <= 0.
MklSolution solve_mkl_lambda(const Vector& y, const GroupedDesign& design, double sigma2, double gamma,
                             const std::optional<PqnConfig>& config = std::nullopt,
                             const std::optional<Vector>& lambda0 = std::nullopt);

/// theta^(i) = lambda_i G^(i)^T (K(lambda) + sigma2 I)^{-1} y.
EstimateResult mkl_recover_theta(const Vector& lambda, const Vector& y, const GroupedDesign& design,
                                 double sigma2);

/// Largest violation of the MKL optimality conditions at lambda.
double kkt_residual_mkl(const Vector& lambda, const Vector& y, const GroupedDesign& design, double sigma2,
                        double gamma);

/// Group Lasso parameter whose solution coincides with MKL at rate gamma.
inline double glasso_param_from_mkl(double gamma) { return std::sqrt(2.0 * gamma); }

/// Log-spaced grid of count points between lo and hi (inclusive).
std::vector<double> log_grid(double lo, double hi, int count);

struct CvConfig {
    double split_fraction = 0.5;
    int grid_n = 30;
    double grid_lo_ratio = 1e-4;  ///< grid spans [ratio, 1] times the all-zero threshold
};

/// Lasso with reg chosen on a train/validation split, refitted on all rows.
EstimateResult solve_lasso_cv(const Vector& y, const Matrix& g, double sigma2, const CvConfig& cv = {});

/// Group Lasso with reg chosen on a train/validation split, refitted on all rows.
EstimateResult solve_glasso_cv(const Vector& y, const GroupedDesign& design, double sigma2,
                               const CvConfig& cv = {});

/// MKL with gamma chosen from the given grid on a train/validation split, refitted on all rows.
EstimateResult solve_mkl_cv(const Vector& y, const GroupedDesign& design, double sigma2,
                            const std::vector<double>& gamma_grid, double split_fraction = 0.5);

struct AdaLassoGrid {
    std::vector<double> etas{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
    CvConfig cv{};
    double weight_cap = 1e8;
};

/// w_j = min(|theta_ls_j|^-eta, cap).
Vector adaptive_weights(const Vector& theta_ls, double eta, double cap = 1e8);

/// Adaptive Lasso with (reg, eta) chosen on a train/validation split.
EstimateResult solve_adalasso(const Vector& y, const Matrix& g, double sigma2, const AdaLassoGrid& grid = {});

/// Minimum-norm least-squares solution.
Vector least_squares(const Matrix& g, const Vector& y);

/// Number of leading rows used for training under a split fraction; throws if either side is empty.
Index train_rows(Index n, double split_fraction);

}  // namespace sparsegrp
