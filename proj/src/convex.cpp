#include "sparsegrp/convex.hpp"

#include "sparsegrp/core_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sparsegrp {

void ConvexFitConfig::validate() const {
    if (!(reg_param >= 0.0) || !std::isfinite(reg_param)) {
        throw std::invalid_argument("regularization parameter must be finite and nonnegative");
    }
    if (!(tol > 0.0)) {
        throw std::invalid_argument("tol must be positive");
    }
    if (max_iter < 1) {
        throw std::invalid_argument("max_iter must be at least 1");
    }
    if (eta && !(*eta >= 0.0)) {
        throw std::invalid_argument("eta must be nonnegative");
    }
}

namespace {

void check_problem(const Vector& y, const Matrix& g, double sigma2) {
    if (y.size() != g.rows()) {
        throw DimensionError("y has length " + std::to_string(y.size()) + ", design has " +
                             std::to_string(g.rows()) + " rows");
    }
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw std::invalid_argument("noise variance must be positive");
    }
}

double soft_threshold(double v, double t) {
    if (v > t) {
        return v - t;
    }
    if (v < -t) {
        return v + t;
    }
    return 0.0;
}

bool small_change(double prev, double cur, double tol) {
    return std::abs(prev - cur) <= tol * std::max(1.0, std::abs(cur));
}

// Root of sum c_k^2 / (d_k rho + reg)^2 = 1 over rho > 0, given sum c_k^2 > reg^2.
double block_radius(const Vector& c2, const Vector& d, double reg) {
    auto h = [&](double rho, double* dh) {
        double val = 0.0;
        double der = 0.0;
        for (Index k = 0; k < c2.size(); ++k) {
            const double den = d[k] * rho + reg;
            val += c2[k] / (den * den);
            der -= 2.0 * c2[k] * d[k] / (den * den * den);
        }
        if (dh) {
            *dh = der;
        }
        return val;
    };
    const double cnorm = std::sqrt(c2.sum());
    double lo = 0.0;
    double hi = std::numeric_limits<double>::infinity();
    const double dmin = d.minCoeff();
    if (dmin > 0.0) {
        hi = (cnorm - reg) / dmin;
    }
    // q(rho) = h^{-1/2} is close to linear in rho; Newton on q - 1 from the isotropic guess.
    const double dmean = d.mean();
    double rho = dmean > 0.0 ? (cnorm - reg) / dmean : 1.0;
    if (std::isfinite(hi)) {
        rho = std::min(rho, hi);
    }
    for (int it = 0; it < 50; ++it) {
        double dh = 0.0;
        const double hv = h(rho, &dh);
        const double q = 1.0 / std::sqrt(hv);
        const double resid = q - 1.0;
        if (resid < 0.0) {
            lo = rho;
        } else {
            hi = rho;
        }
        if (std::abs(resid) <= 1e-12) {
            break;
        }
        const double dq = -0.5 * dh / (hv * std::sqrt(hv));
        double next = rho - resid / dq;
        if (!(next > lo && next < hi) || !std::isfinite(next)) {
            next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * rho + 1.0;
        }
        if (std::abs(next - rho) <= 1e-15 * std::max(1.0, rho)) {
            rho = next;
            break;
        }
        rho = next;
    }
    return rho;
}

}  // namespace

double lasso_objective(const Vector& y, const Matrix& g, double sigma2, double reg, const Vector& theta,
                       const std::optional<Vector>& weights) {
    const double pen = weights ? weights->cwiseProduct(theta.cwiseAbs()).sum() : theta.lpNorm<1>();
    return (y - g * theta).squaredNorm() / (2.0 * sigma2) + reg * pen;
}

double glasso_objective(const Vector& y, const GroupedDesign& design, double sigma2, double reg,
                        const Vector& theta) {
    const Partition& part = design.partition();
    double pen = 0.0;
    for (Index i = 0; i < part.groups(); ++i) {
        pen += theta.segment(part.offset(i), part.size(i)).norm();
    }
    return (y - design.matrix() * theta).squaredNorm() / (2.0 * sigma2) + reg * pen;
}

EstimateResult solve_lasso(const Vector& y, const Matrix& g, double sigma2, const ConvexFitConfig& config,
                           const std::optional<Vector>& weights) {
    config.validate();
    check_problem(y, g, sigma2);
    const Index m = g.cols();
    Vector w = weights ? *weights : Vector::Ones(m);
    if (w.size() != m) {
        throw DimensionError("weight vector length differs from column count");
    }
    if ((w.array() < 0.0).any()) {
        throw std::invalid_argument("weights must be nonnegative");
    }
    const Vector col2 = g.colwise().squaredNorm().transpose() / sigma2;
    Vector theta = Vector::Zero(m);
    Vector r = y;
    const double reg = config.reg_param;

    SolverDiagnostics diag;
    double obj = lasso_objective(y, g, sigma2, reg, theta, w);
    diag.objective_trace.push_back(obj);
    int sweep = 0;
    const Vector corr = (g.transpose() * y).cwiseAbs() / sigma2;
    const bool all_zero = (corr.array() <= reg * w.array()).all();
    diag.converged = all_zero;
    while (!all_zero && sweep < config.max_iter) {
        ++sweep;
        for (Index j = 0; j < m; ++j) {
            if (col2[j] == 0.0) {
                continue;
            }
            const double rho = g.col(j).dot(r) / sigma2 + col2[j] * theta[j];
            const double updated = soft_threshold(rho, reg * w[j]) / col2[j];
            const double delta = updated - theta[j];
            if (delta != 0.0) {
                r.noalias() -= g.col(j) * delta;
                theta[j] = updated;
            }
        }
        const double next = lasso_objective(y, g, sigma2, reg, theta, w);
        diag.objective_trace.push_back(next);
        const bool done = small_change(obj, next, config.tol);
        obj = next;
        if (done) {
            diag.converged = true;
            break;
        }
    }
    diag.objective = obj;
    diag.iterations = sweep;
    diag.status = diag.converged ? "converged" : "max_iter";

    EstimateResult res;
    res.theta = BlockVector(theta, Partition::uniform(m, 1));
    for (Index j = 0; j < m; ++j) {
        if (theta[j] != 0.0) {
            res.selected.push_back(j);
        }
    }
    res.gamma_hat = reg;
    res.sigma2 = sigma2;
    res.diagnostics = std::move(diag);
    return res;
}

EstimateResult solve_glasso(const Vector& y, const GroupedDesign& design, double sigma2,
                            const ConvexFitConfig& config) {
    config.validate();
    check_problem(y, design.matrix(), sigma2);
    const Partition& part = design.partition();
    const Index p = design.p();
    const double reg = config.reg_param;

    std::vector<Eigen::SelfAdjointEigenSolver<Matrix>> eig(static_cast<size_t>(p));
    for (Index i = 0; i < p; ++i) {
        const Matrix a = design.block(i).transpose() * design.block(i) / sigma2;
        eig[static_cast<size_t>(i)].compute(a);
    }

    Vector theta = Vector::Zero(design.m());
    Vector r = y;
    SolverDiagnostics diag;
    double obj = glasso_objective(y, design, sigma2, reg, theta);
    diag.objective_trace.push_back(obj);
    diag.converged = false;
    int sweep = 0;
    while (sweep < config.max_iter) {
        ++sweep;
        for (Index i = 0; i < p; ++i) {
            const auto& es = eig[static_cast<size_t>(i)];
            const auto gi = design.block(i);
            auto ti = theta.segment(part.offset(i), part.size(i));
            const Vector old = ti;
            const Vector b = gi.transpose() * r / sigma2 + es.eigenvectors() * (es.eigenvalues().asDiagonal() *
                                                                               (es.eigenvectors().transpose() * old));
            Vector fresh;
            if (b.norm() <= reg) {
                fresh = Vector::Zero(part.size(i));
            } else {
                const Vector c = es.eigenvectors().transpose() * b;
                const Vector d = es.eigenvalues().cwiseMax(0.0);
                Vector coef(c.size());
                if (reg == 0.0) {
                    const double floor = 1e-12 * std::max(1.0, d.maxCoeff());
                    for (Index k = 0; k < c.size(); ++k) {
                        coef[k] = d[k] > floor ? c[k] / d[k] : 0.0;
                    }
                } else {
                    const double rho = block_radius(c.cwiseAbs2(), d, reg);
                    coef = c.array() / (d.array() + reg / rho);
                }
                fresh = es.eigenvectors() * coef;
            }
            const Vector delta = fresh - old;
            if (delta.squaredNorm() > 0.0) {
                r.noalias() -= gi * delta;
                ti = fresh;
            }
        }
        const double next = glasso_objective(y, design, sigma2, reg, theta);
        diag.objective_trace.push_back(next);
        const bool done = small_change(obj, next, config.tol);
        obj = next;
        if (done) {
            diag.converged = true;
            break;
        }
    }
    diag.objective = obj;
    diag.iterations = sweep;
    diag.status = diag.converged ? "converged" : "max_iter";

    EstimateResult res;
    res.theta = BlockVector(theta, part);
    for (Index i = 0; i < p; ++i) {
        if (res.theta.block_norm(i) > 0.0) {
            res.selected.push_back(i);
        }
    }
    res.gamma_hat = reg;
    res.sigma2 = sigma2;
    res.diagnostics = std::move(diag);
    return res;
}

PqnConfig mkl_default_config(double gamma) {
    PqnConfig cfg;
    cfg.scale_by_objective = false;
    // The certificate is |fit - 2 gamma| = 2 |gradient|.
    cfg.grad_tol = 2.5e-7;
    cfg.gradient_scale = 1.0 + 2.0 * gamma;
    cfg.max_iter = 2000;
    return cfg;
}

MklSolution solve_mkl_lambda(const Vector& y, const GroupedDesign& design, double sigma2, double gamma,
                             const std::optional<PqnConfig>& config, const std::optional<Vector>& lambda0) {
    if (!(gamma > 0.0)) {
        throw std::invalid_argument("mkl requires positive gamma");
    }
    check_problem(y, design.matrix(), sigma2);
    const Index p = design.p();
    Vector start(p);
    if (lambda0) {
        if (lambda0->size() != p) {
            throw DimensionError("starting lambda has wrong length");
        }
        start = *lambda0;
    } else {
        // Orthogonal-design closed form with n replaced by the mean column energy.
        for (Index i = 0; i < p; ++i) {
            const auto gi = design.block(i);
            const double energy = gi.squaredNorm() / static_cast<double>(gi.cols());
            const double ls_norm = energy > 0.0 ? (gi.transpose() * y).norm() / energy : 0.0;
            start[i] = std::max(0.0, ls_norm / std::sqrt(2.0 * gamma) - (energy > 0.0 ? sigma2 / energy : 0.0));
        }
    }
    const MarginalModel model(design, y);
    const SmoothObjective f = [&](const Vector& x, Vector* grad) { return model.mkl_objective(x, sigma2, gamma, grad); };
    const PqnResult pr = minimize_pqn(f, start, config.value_or(mkl_default_config(gamma)));

    MklSolution sol;
    sol.lambda = pr.x;
    sol.diagnostics.objective = pr.objective;
    sol.diagnostics.iterations = pr.iterations;
    sol.diagnostics.converged = pr.converged;
    sol.diagnostics.status = pr.status;
    sol.diagnostics.objective_trace = pr.objective_trace;
    sol.diagnostics.kkt_residual = kkt_residual_mkl(pr.x, y, design, sigma2, gamma);
    return sol;
}

EstimateResult mkl_recover_theta(const Vector& lambda, const Vector& y, const GroupedDesign& design,
                                 double sigma2) {
    const HyperState hs{lambda, 0.0, sigma2};
    EstimateResult res;
    res.theta = posterior_mean(design, hs, y);
    res.lambda = lambda;
    for (Index i = 0; i < design.p(); ++i) {
        if (lambda[i] > 0.0) {
            res.selected.push_back(i);
        }
    }
    res.sigma2 = sigma2;
    return res;
}

double kkt_residual_mkl(const Vector& lambda, const Vector& y, const GroupedDesign& design, double sigma2,
                        double gamma) {
    const MarginalModel model(design, y);
    const MarginalTerms t = model.terms(lambda, sigma2, false);
    double worst = 0.0;
    for (Index i = 0; i < design.p(); ++i) {
        const double s = 2.0 * gamma - t.fit[i];
        worst = std::max(worst, lambda[i] > 0.0 ? std::abs(s) : std::max(0.0, -s));
    }
    return worst;
}

std::vector<double> log_grid(double lo, double hi, int count) {
    if (!(lo > 0.0) || !(hi >= lo) || count < 1) {
        throw std::invalid_argument("log grid needs 0 < lo <= hi and count >= 1");
    }
    std::vector<double> out(static_cast<size_t>(count));
    if (count == 1) {
        out[0] = lo;
        return out;
    }
    const double a = std::log(lo);
    const double b = std::log(hi);
    for (int i = 0; i < count; ++i) {
        out[static_cast<size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
    }
    return out;
}

Vector least_squares(const Matrix& g, const Vector& y) {
    return g.completeOrthogonalDecomposition().solve(y);
}

Index train_rows(Index n, double split_fraction) {
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
        throw std::invalid_argument("split fraction must lie in (0,1)");
    }
    const auto ntr = static_cast<Index>(std::ceil(split_fraction * static_cast<double>(n)));
    if (ntr < 1 || ntr >= n) {
        throw std::invalid_argument("split leaves an empty training or validation set");
    }
    return ntr;
}

namespace {

template <class Fit>
std::pair<double, double> pick_on_grid(const std::vector<double>& grid, Fit fit) {
    double best_err = std::numeric_limits<double>::infinity();
    double best = grid.front();
    for (double reg : grid) {
        const double err = fit(reg);
        if (err < best_err) {
            best_err = err;
            best = reg;
        }
    }
    return {best, best_err};
}

}  // namespace

EstimateResult solve_lasso_cv(const Vector& y, const Matrix& g, double sigma2, const CvConfig& cv) {
    check_problem(y, g, sigma2);
    const Index ntr = train_rows(y.size(), cv.split_fraction);
    const Index nval = y.size() - ntr;
    const Matrix gtr = g.topRows(ntr);
    const Vector ytr = y.head(ntr);
    const double top = std::max((gtr.transpose() * ytr).lpNorm<Eigen::Infinity>() / sigma2, 1e-300);
    const auto grid = log_grid(cv.grid_lo_ratio * top, top, cv.grid_n);
    const auto [reg, err] = pick_on_grid(grid, [&](double r) {
        ConvexFitConfig c;
        c.reg_param = r;
        const EstimateResult e = solve_lasso(ytr, gtr, sigma2, c);
        return (y.tail(nval) - g.bottomRows(nval) * e.theta.values()).squaredNorm();
    });
    (void)err;
    ConvexFitConfig c;
    c.reg_param = reg;
    return solve_lasso(y, g, sigma2, c);
}

EstimateResult solve_glasso_cv(const Vector& y, const GroupedDesign& design, double sigma2, const CvConfig& cv) {
    check_problem(y, design.matrix(), sigma2);
    const Index ntr = train_rows(y.size(), cv.split_fraction);
    const Index nval = y.size() - ntr;
    const GroupedDesign dtr = design.rows(0, ntr);
    const Vector ytr = y.head(ntr);
    double top = 0.0;
    for (Index i = 0; i < design.p(); ++i) {
        top = std::max(top, (dtr.block(i).transpose() * ytr).norm() / sigma2);
    }
    top = std::max(top, 1e-300);
    const auto grid = log_grid(cv.grid_lo_ratio * top, top, cv.grid_n);
    const auto [reg, err] = pick_on_grid(grid, [&](double r) {
        ConvexFitConfig c;
        c.reg_param = r;
        const EstimateResult e = solve_glasso(ytr, dtr, sigma2, c);
        return (y.tail(nval) - design.matrix().bottomRows(nval) * e.theta.values()).squaredNorm();
    });
    (void)err;
    ConvexFitConfig c;
    c.reg_param = reg;
    return solve_glasso(y, design, sigma2, c);
}

EstimateResult solve_mkl_cv(const Vector& y, const GroupedDesign& design, double sigma2,
                            const std::vector<double>& gamma_grid, double split_fraction) {
    check_problem(y, design.matrix(), sigma2);
    if (gamma_grid.empty()) {
        throw std::invalid_argument("gamma grid is empty");
    }
    const Index ntr = train_rows(y.size(), split_fraction);
    const Index nval = y.size() - ntr;
    const GroupedDesign dtr = design.rows(0, ntr);
    const Vector ytr = y.head(ntr);
    const auto [gamma, err] = pick_on_grid(gamma_grid, [&](double gm) {
        const MklSolution sol = solve_mkl_lambda(ytr, dtr, sigma2, gm);
        const BlockVector theta = posterior_mean(dtr, HyperState{sol.lambda, 0.0, sigma2}, ytr);
        return (y.tail(nval) - design.matrix().bottomRows(nval) * theta.values()).squaredNorm();
    });
    (void)err;
    const MklSolution sol = solve_mkl_lambda(y, design, sigma2, gamma);
    EstimateResult res = mkl_recover_theta(sol.lambda, y, design, sigma2);
    res.gamma_hat = gamma;
    res.diagnostics = sol.diagnostics;
    return res;
}

Vector adaptive_weights(const Vector& theta_ls, double eta, double cap) {
    Vector w(theta_ls.size());
    for (Index j = 0; j < theta_ls.size(); ++j) {
        const double a = std::abs(theta_ls[j]);
        w[j] = a == 0.0 ? cap : std::min(std::pow(a, -eta), cap);
    }
    return w;
}

EstimateResult solve_adalasso(const Vector& y, const Matrix& g, double sigma2, const AdaLassoGrid& grid) {
    check_problem(y, g, sigma2);
    if (grid.etas.empty()) {
        throw std::invalid_argument("eta grid is empty");
    }
    const Index ntr = train_rows(y.size(), grid.cv.split_fraction);
    const Index nval = y.size() - ntr;
    const Matrix gtr = g.topRows(ntr);
    const Vector ytr = y.head(ntr);
    const Vector ls_tr = least_squares(gtr, ytr);
    const Vector gty_tr = gtr.transpose() * ytr;

    double best_err = std::numeric_limits<double>::infinity();
    double best_reg = 0.0;
    double best_eta = grid.etas.front();
    for (double eta : grid.etas) {
        const Vector w = adaptive_weights(ls_tr, eta, grid.weight_cap);
        const double top = std::max(gty_tr.cwiseAbs().cwiseQuotient(w).maxCoeff() / sigma2, 1e-300);
        for (double reg : log_grid(grid.cv.grid_lo_ratio * top, top, grid.cv.grid_n)) {
            ConvexFitConfig c;
            c.reg_param = reg;
            const EstimateResult e = solve_lasso(ytr, gtr, sigma2, c, w);
            const double err = (y.tail(nval) - g.bottomRows(nval) * e.theta.values()).squaredNorm();
            if (err < best_err || (err == best_err && reg < best_reg)) {
                best_err = err;
                best_reg = reg;
                best_eta = eta;
            }
        }
    }
    ConvexFitConfig c;
    c.reg_param = best_reg;
    c.eta = best_eta;
    const Vector w = adaptive_weights(least_squares(g, y), best_eta, grid.weight_cap);
    EstimateResult res = solve_lasso(y, g, sigma2, c, w);
    res.diagnostics.status += " eta=" + std::to_string(best_eta);
    return res;
}

}  // namespace sparsegrp
