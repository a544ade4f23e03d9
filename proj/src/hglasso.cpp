#include "sparsegrp/hglasso.hpp"

#include "sparsegrp/convex.hpp"

#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>

namespace sparsegrp {

HglSolution solve_hgl_pqn(const Vector& y, const GroupedDesign& design, double sigma2, double gamma,
                          const Vector& lambda0, const PqnConfig& config) {
    const HyperState hs{lambda0, gamma, sigma2};
    hs.validate_for(design);
    const MarginalModel model(design, y);
    const SmoothObjective f = [&](const Vector& x, Vector* grad) {
        return model.hgl_objective(x, sigma2, gamma, grad);
    };
    const PqnResult pr = minimize_pqn(f, lambda0, config);

    HglSolution sol;
    sol.lambda = pr.x;
    sol.diagnostics.objective = pr.objective;
    sol.diagnostics.iterations = pr.iterations;
    sol.diagnostics.converged = pr.converged;
    sol.diagnostics.status = pr.status;
    sol.diagnostics.objective_trace = pr.objective_trace;
    sol.diagnostics.kkt_residual = kkt_residual_hgl(pr.x, y, design, sigma2, gamma);
    return sol;
}

double kkt_residual_hgl(const Vector& lambda, const Vector& y, const GroupedDesign& design, double sigma2,
                        double gamma) {
    const MarginalModel model(design, y);
    const MarginalTerms t = model.terms(lambda, sigma2, true);
    double worst = 0.0;
    for (Index i = 0; i < design.p(); ++i) {
        const double s = t.trace[i] - t.fit[i] + 2.0 * gamma;
        worst = std::max(worst, lambda[i] > 0.0 ? std::abs(s) : std::max(0.0, -s));
    }
    return worst;
}

EstimateResult estimate_from_lambda(const GroupedDesign& design, const Vector& y, const Vector& lambda,
                                    double sigma2) {
    EstimateResult res;
    res.theta = posterior_mean(design, HyperState{lambda, 0.0, sigma2}, y);
    res.lambda = lambda;
    for (Index i = 0; i < design.p(); ++i) {
        if (lambda[i] > 0.0) {
            res.selected.push_back(i);
        }
    }
    res.sigma2 = sigma2;
    return res;
}

double closed_form_lambda_orth(double theta_ls_norm2, Index k, Index n, double sigma2, double gamma) {
    if (!(gamma >= 0.0)) {
        throw std::invalid_argument("gamma must be nonnegative");
    }
    if (k < 1 || n < 1 || !(sigma2 > 0.0) || !(theta_ls_norm2 >= 0.0)) {
        throw std::invalid_argument("invalid orthogonal-design query");
    }
    const double kd = static_cast<double>(k);
    const double t = theta_ls_norm2;
    // (sqrt(k^2 + 8 gamma t) - k) / (4 gamma) rewritten without cancellation; equals t / k at gamma = 0.
    const double core = 2.0 * t / (std::sqrt(kd * kd + 8.0 * gamma * t) + kd);
    return std::max(0.0, core - sigma2 / static_cast<double>(n));
}

double closed_form_lambda_orth(const Vector& theta_ls_block, Index n, double sigma2, double gamma) {
    return closed_form_lambda_orth(theta_ls_block.squaredNorm(), theta_ls_block.size(), n, sigma2, gamma);
}

double closed_form_lambda_mkl_orth(const Vector& theta_ls_block, Index n, double sigma2, double gamma) {
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("mkl requires positive gamma");
    }
    return std::max(0.0, theta_ls_block.norm() / std::sqrt(2.0 * gamma) - sigma2 / static_cast<double>(n));
}

double orth_marginal_objective(double lambda, double theta_ls_norm2, Index k, Index n, double sigma2,
                               double gamma) {
    const double nd = static_cast<double>(n);
    const double s = sigma2 + nd * lambda;
    return 0.5 * static_cast<double>(k) * std::log(s) + nd * theta_ls_norm2 / (2.0 * s) + gamma * lambda;
}

double lambda_opt(const Vector& theta_true_block) {
    if (theta_true_block.size() < 1) {
        throw DimensionError("empty block");
    }
    return theta_true_block.squaredNorm() / static_cast<double>(theta_true_block.size());
}

double noncentral_chi2_cdf(double x, double dof, double nc) {
    if (!(dof > 0.0) || !(nc >= 0.0)) {
        throw std::invalid_argument("noncentral chi-square needs dof > 0 and nc >= 0");
    }
    if (x <= 0.0) {
        return 0.0;
    }
    const double half = 0.5 * nc;
    auto central = [&](double j) { return boost::math::gamma_p(0.5 * dof + j, 0.5 * x); };
    if (half == 0.0) {
        return central(0.0);
    }
    auto weight = [&](double j) { return std::exp(j * std::log(half) - half - std::lgamma(j + 1.0)); };

    // Poisson mixture summed outward from the mode.
    const double mode = std::floor(half);
    double mass = weight(mode);
    double sum = mass * central(mode);
    double up = mode;
    double down = mode;
    while (1.0 - mass > 1e-12) {
        bool moved = false;
        if (down > 0.0) {
            down -= 1.0;
            const double w = weight(down);
            mass += w;
            sum += w * central(down);
            moved = true;
        }
        up += 1.0;
        const double w = weight(up);
        mass += w;
        sum += w * central(up);
        if (!moved && w < 1e-300) {
            break;
        }
    }
    return std::clamp(sum, 0.0, 1.0);
}

double prob_lambda_zero(const ZeroProbQuery& q) {
    if (q.k < 1 || q.n < 1 || !(q.sigma2 > 0.0) || !(q.gamma >= 0.0) || !(q.theta_block_norm2 >= 0.0)) {
        throw std::invalid_argument("invalid zero-probability query");
    }
    const double nd = static_cast<double>(q.n);
    const double nc = q.theta_block_norm2 * nd / q.sigma2;
    const double shift = 2.0 * q.gamma * q.sigma2 / nd;
    const double threshold = q.estimator == Estimator::hgl ? static_cast<double>(q.k) + shift : shift;
    return noncentral_chi2_cdf(threshold, static_cast<double>(q.k), nc);
}

namespace {

double two_group_lambda2_hgl(double y2, double sigma2, double gamma) {
    return closed_form_lambda_orth(y2 * y2, 1, 1, sigma2, gamma);
}

double two_group_lambda2_mkl(double y2, double sigma2, double gamma) {
    if (gamma == 0.0) {
        return y2 == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    }
    return std::max(0.0, std::abs(y2) / std::sqrt(2.0 * gamma) - sigma2);
}

template <class Cond>
double gamma_threshold(Cond holds) {
    std::vector<double> grid{0.0};
    for (double g : log_grid(1e-8, 1e8, 321)) {
        grid.push_back(g);
    }
    Index last_fail = -1;
    for (size_t i = 0; i < grid.size(); ++i) {
        if (!holds(grid[i])) {
            last_fail = static_cast<Index>(i);
        }
    }
    if (last_fail < 0) {
        return 0.0;
    }
    if (last_fail + 1 == static_cast<Index>(grid.size())) {
        return std::numeric_limits<double>::infinity();
    }
    double lo = grid[static_cast<size_t>(last_fail)];
    double hi = grid[static_cast<size_t>(last_fail) + 1];
    for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (holds(mid)) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    return hi;
}

}  // namespace

double two_group_condition_hgl(const Eigen::Vector2d& y, double sigma2, double delta, double gamma) {
    const double l2 = two_group_lambda2_hgl(y[1], sigma2, gamma);
    const double w2 = 1.0 / (sigma2 + l2);
    const double trace = 1.0 / sigma2 + delta * delta * w2;
    const double proj = y[0] / sigma2 + delta * y[1] * w2;
    return trace - proj * proj + 2.0 * gamma;
}

double two_group_condition_mkl(const Eigen::Vector2d& y, double sigma2, double delta, double gamma) {
    const double l2 = two_group_lambda2_mkl(y[1], sigma2, gamma);
    const double w2 = std::isfinite(l2) ? 1.0 / (sigma2 + l2) : 0.0;
    const double proj = y[0] / sigma2 + delta * y[1] * w2;
    return 2.0 * gamma - proj * proj;
}

TwoGroupResult two_group_thresholds(const Eigen::Vector2d& y, double sigma2, double delta, double gamma) {
    if (!(sigma2 > 0.0) || !(gamma >= 0.0)) {
        throw std::invalid_argument("two-group example needs sigma2 > 0 and gamma >= 0");
    }
    TwoGroupResult r;
    r.lambda2_hgl = two_group_lambda2_hgl(y[1], sigma2, gamma);
    r.lambda2_mkl = two_group_lambda2_mkl(y[1], sigma2, gamma);
    r.theta2_hgl = r.lambda2_hgl * y[1] / (sigma2 + r.lambda2_hgl);
    r.theta2_mkl = std::isfinite(r.lambda2_mkl) ? r.lambda2_mkl * y[1] / (sigma2 + r.lambda2_mkl) : y[1];
    r.gamma_min_hgl =
        gamma_threshold([&](double g) { return two_group_condition_hgl(y, sigma2, delta, g) >= 0.0; });
    r.gamma_min_mkl =
        gamma_threshold([&](double g) { return two_group_condition_mkl(y, sigma2, delta, g) >= 0.0; });
    return r;
}

double weighted_mse(const Vector& d, const Vector& beta, int alpha, double n, double lambda) {
    const double inv_n = 1.0 / n;
    double total = 0.0;
    for (Index k = 0; k < d.size(); ++k) {
        const double d2 = d[k] * d[k];
        const double den = inv_n + lambda * d2;
        total += std::pow(d[k], alpha) * (inv_n * beta[k] * beta[k] + lambda * lambda * d2) / (den * den);
    }
    return total;
}

WeightedMseProfile weighted_mse_profile(const DiagonalizedBlock& block, int alpha, double n, int grid_points) {
    if (!block.beta) {
        throw std::invalid_argument("weighted MSE needs the rotated true coefficients");
    }
    if (!(n > 0.0) || grid_points < 2) {
        throw std::invalid_argument("weighted MSE needs n > 0 and at least two grid points");
    }
    const Vector& d = block.d;
    const Vector& beta = *block.beta;
    double num = 0.0;
    double den = 0.0;
    for (Index k = 0; k < d.size(); ++k) {
        const double w = std::pow(d[k], alpha - 4);
        num += w * beta[k] * beta[k];
        den += w;
    }
    WeightedMseProfile out;
    out.limit = num / den;
    const double center = out.limit > 0.0 ? out.limit : 1e-4;
    out.lambdas = log_grid(center * 1e-3, center * 1e3, grid_points);
    out.values.reserve(out.lambdas.size());
    double best = std::numeric_limits<double>::infinity();
    for (double l : out.lambdas) {
        const double v = weighted_mse(d, beta, alpha, n, l);
        out.values.push_back(v);
        if (v < best) {
            best = v;
            out.minimizer = l;
        }
    }
    return out;
}

}  // namespace sparsegrp
