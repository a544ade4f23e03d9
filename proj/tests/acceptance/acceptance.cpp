// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero if any criterion fails.

#include "sparsegrp/convex.hpp"
#include "sparsegrp/core_model.hpp"
#include "sparsegrp/experiments.hpp"
#include "sparsegrp/hglasso.hpp"
#include "sparsegrp/selection.hpp"

#include "../unit/helpers.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <functional>
#include <string>

using namespace sparsegrp;
using namespace testutil;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, double a) {
    char buf[96];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const size_t h = v.size() / 2;
    return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

struct OrthInstance {
    GroupedDesign design;
    Vector y;
    double sigma2;
    double gamma;
};

std::vector<OrthInstance> orth_instances(int count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<Index> pd(1, 5);
    std::uniform_int_distribution<Index> kd(1, 6);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<OrthInstance> out;
    for (int r = 0; r < count; ++r) {
        const Index p = pd(rng);
        std::vector<Index> sizes;
        Index m = 0;
        for (Index i = 0; i < p; ++i) {
            sizes.push_back(kd(rng));
            m += sizes.back();
        }
        std::uniform_int_distribution<Index> nd(m + 1, 200);
        const Index n = nd(rng);
        const GroupedDesign d(orthogonal_design(n, m, rng), sizes);
        Vector theta = gaussian_vec(m, rng);
        for (Index i = 0; i < p; ++i) {
            if (u(rng) < 0.4) {
                theta.segment(d.partition().offset(i), sizes[i]).setZero();
            }
        }
        const double s2 = 0.1 + u(rng);
        const Vector y = d.matrix() * theta + std::sqrt(s2) * gaussian_vec(n, rng);
        const double gamma = std::pow(10.0, -2.0 + 3.0 * u(rng));
        out.push_back({d, y, s2, gamma});
    }
    return out;
}

PqnConfig tight(double scale) {
    PqnConfig c;
    c.scale_by_objective = false;
    c.gradient_scale = scale;
    c.grad_tol = 1e-10;
    c.max_iter = 5000;
    return c;
}

Verdict c1_orthogonal() {
    double worst_hgl = 0.0;
    double worst_mkl = 0.0;
    for (const auto& in : orth_instances(100, 101)) {
        const Index n = in.design.n();
        const Vector ls = in.design.matrix().transpose() * in.y / static_cast<double>(n);
        const HglSolution h = solve_hgl_pqn(in.y, in.design, in.sigma2, in.gamma, Vector::Ones(in.design.p()),
                                            tight(1.0 + 2.0 * in.gamma + n));
        const MklSolution k = solve_mkl_lambda(in.y, in.design, in.sigma2, in.gamma, tight(1.0 + 2.0 * in.gamma));
        for (Index i = 0; i < in.design.p(); ++i) {
            const Vector b = ls.segment(in.design.partition().offset(i), in.design.partition().size(i));
            const double ch = closed_form_lambda_orth(b, n, in.sigma2, in.gamma);
            const double cm = closed_form_lambda_mkl_orth(b, n, in.sigma2, in.gamma);
            worst_hgl = std::max(worst_hgl, std::abs(h.lambda[i] - ch) / (1.0 + ch));
            worst_mkl = std::max(worst_mkl, std::abs(k.lambda[i] - cm) / (1.0 + cm));
        }
    }
    return {worst_hgl <= 1e-6 && worst_mkl <= 1e-6,
            fmt("max |dl|/(1+l): hgl %.2e", worst_hgl) + fmt(", mkl %.2e", worst_mkl)};
}

Verdict c2_gradient() {
    std::mt19937_64 rng(102);
    double worst = 0.0;
    for (int r = 0; r < 100; ++r) {
        const Index n = 5 + static_cast<Index>(rng() % 30);
        const Index p = 1 + static_cast<Index>(rng() % 5);
        std::vector<Index> sizes;
        Index m = 0;
        for (Index i = 0; i < p; ++i) {
            sizes.push_back(1 + static_cast<Index>(rng() % 4));
            m += sizes.back();
        }
        const GroupedDesign d(gaussian(n, m, rng), sizes);
        const Vector y = gaussian_vec(n, rng);
        HyperState hs{uniform_vec(p, 0.1, 3.0, rng), uniform_vec(1, 0.0, 2.0, rng)[0],
                      uniform_vec(1, 0.2, 2.0, rng)[0]};
        const Vector g = neg_log_marginal_grad(d, hs, y);
        Vector fd(p);
        for (Index i = 0; i < p; ++i) {
            const double h = 1e-5 * std::max(1.0, hs.lambda[i]);
            HyperState a = hs;
            HyperState b = hs;
            a.lambda[i] += h;
            b.lambda[i] -= h;
            fd[i] = (neg_log_marginal(d, a, y) - neg_log_marginal(d, b, y)) / (2.0 * h);
        }
        worst = std::max(worst, (g - fd).norm() / std::max(1.0, fd.norm()));
    }
    return {worst <= 1e-5, fmt("max relative error %.2e", worst)};
}

Verdict c3_kkt() {
    double worst_hgl = 0.0;
    double worst_mkl = 0.0;
    for (const auto& in : orth_instances(100, 101)) {
        const double n = static_cast<double>(in.design.n());
        const HglSolution h = solve_hgl_pqn(in.y, in.design, in.sigma2, in.gamma, Vector::Ones(in.design.p()));
        const MklSolution k = solve_mkl_lambda(in.y, in.design, in.sigma2, in.gamma);
        worst_hgl = std::max(worst_hgl, kkt_residual_hgl(h.lambda, in.y, in.design, in.sigma2, in.gamma) /
                                            (1.0 + 2.0 * in.gamma + n));
        worst_mkl = std::max(worst_mkl,
                             kkt_residual_mkl(k.lambda, in.y, in.design, in.sigma2, in.gamma) / (1.0 + 2.0 * in.gamma));
    }
    return {worst_hgl <= 1e-5 && worst_mkl <= 1e-6,
            fmt("scaled residual: hgl %.2e", worst_hgl) + fmt(", mkl %.2e", worst_mkl)};
}

Verdict c4_glasso_mkl() {
    std::mt19937_64 rng(104);
    double worst = 0.0;
    for (int r = 0; r < 50; ++r) {
        const Index n = 10 + static_cast<Index>(rng() % 30);
        const Index p = 1 + static_cast<Index>(rng() % 5);
        std::vector<Index> sizes;
        Index m = 0;
        for (Index i = 0; i < p; ++i) {
            sizes.push_back(1 + static_cast<Index>(rng() % 4));
            m += sizes.back();
        }
        const GroupedDesign d(gaussian(n, m, rng), sizes);
        const Vector y = d.matrix() * gaussian_vec(m, rng) + gaussian_vec(n, rng);
        const double s2 = 0.5;
        const double gamma = std::pow(10.0, -1.0 + 2.0 * uniform_vec(1, 0.0, 1.0, rng)[0]);
        PqnConfig pc = mkl_default_config(gamma);
        pc.grad_tol = 1e-11;
        pc.max_iter = 5000;
        const MklSolution k = solve_mkl_lambda(y, d, s2, gamma, pc);
        const Vector tm = mkl_recover_theta(k.lambda, y, d, s2).theta.values();
        ConvexFitConfig gc;
        gc.reg_param = glasso_param_from_mkl(gamma);
        gc.tol = 1e-15;
        gc.max_iter = 200000;
        const Vector tg = solve_glasso(y, d, s2, gc).theta.values();
        worst = std::max(worst, (tm - tg).norm() / std::max(1.0, tg.norm()));
    }
    return {worst <= 1e-4, fmt("max relative discrepancy %.2e", worst)};
}

Verdict c5_two_group() {
    const double s2 = 0.005;
    const double delta = 0.5;
    const TwoGroupResult r = two_group_thresholds(Eigen::Vector2d(0.0, 1.0), s2, delta, 1.0);
    const bool near_hgl = std::abs(r.gamma_min_hgl - 5.0) <= 1.0;
    const bool near_mkl = std::abs(r.gamma_min_mkl - 20.0) <= 4.0;
    const bool thresholds_ordered = r.gamma_min_hgl < r.gamma_min_mkl;
    bool shrinkage_ordered = true;
    for (double g : log_grid(1e-3, 1e3, 61)) {
        const TwoGroupResult m = two_group_thresholds(Eigen::Vector2d(0.0, 1.0), s2, delta, g);
        shrinkage_ordered = shrinkage_ordered && std::abs(m.theta2_hgl) <= std::abs(m.theta2_mkl);
    }
    return {near_hgl && near_mkl && thresholds_ordered && shrinkage_ordered,
            fmt("gamma_min hgl %.4g", r.gamma_min_hgl) + fmt(", mkl %.4g", r.gamma_min_mkl) +
                (thresholds_ordered ? "; thresholds ordered" : "; thresholds not strictly ordered") +
                (shrinkage_ordered ? "; |theta2| ordered at matched gamma" : "; |theta2| ordering violated")};
}

Verdict c6_zero_prob() {
    struct Setting {
        Index k, n;
        double s2, gamma, t;
    };
    const std::vector<Setting> settings{{10, 20, 0.1, 1.0, 0.0},
                                        {10, 20, 0.1, 10.0, 0.0},
                                        {4, 50, 1.0, 5.0, 0.05},
                                        {2, 100, 0.5, 20.0, 0.02},
                                        {6, 30, 0.2, 50.0, 0.01}};
    std::mt19937_64 rng(106);
    std::normal_distribution<double> nd;
    const int draws = 10000;
    double worst = 0.0;
    for (const auto& s : settings) {
        for (Estimator est : {Estimator::hgl, Estimator::mkl}) {
            const double p = prob_lambda_zero({s.t, s.k, s.n, s.s2, s.gamma, est});
            Vector theta = Vector::Zero(s.k);
            theta[0] = std::sqrt(s.t);
            int zeros = 0;
            for (int r = 0; r < draws; ++r) {
                Vector ls = theta;
                for (Index j = 0; j < s.k; ++j) {
                    ls[j] += nd(rng) * std::sqrt(s.s2 / s.n);
                }
                const double lam = est == Estimator::hgl ? closed_form_lambda_orth(ls, s.n, s.s2, s.gamma)
                                                         : closed_form_lambda_mkl_orth(ls, s.n, s.s2, s.gamma);
                zeros += lam == 0.0;
            }
            const double sd = std::sqrt(std::max(p * (1.0 - p), 1e-12) / draws);
            worst = std::max(worst, std::abs(zeros / static_cast<double>(draws) - p) / sd);
        }
    }
    return {worst <= 3.0, fmt("max deviation %.2f binomial sd", worst)};
}

Verdict c7_table1() {
    McConfig c;
    c.runs = 50;
    c.estimators = {"hgla", "hglb", "hglc", "mkl"};
    const McReport r = run_monte_carlo(c);
    const auto& a = r.aggregates.at("hgla");
    const auto& b = r.aggregates.at("hglb");
    const auto& cc = r.aggregates.at("hglc");
    const auto& m = r.aggregates.at("mkl");
    const bool ok = a.sparsity_index >= 90.0 && cc.sparsity_index >= 90.0 && b.sparsity_index >= 60.0 &&
                    m.sparsity_index <= 60.0 && a.mean_error < m.mean_error;
    return {ok, fmt("sparsity hgla %.1f", a.sparsity_index) + fmt(" hglb %.1f", b.sparsity_index) +
                    fmt(" hglc %.1f", cc.sparsity_index) + fmt(" mkl %.1f", m.sparsity_index) +
                    fmt("; mean error hgla %.1f", a.mean_error) + fmt(" mkl %.1f", m.mean_error)};
}

Verdict c8_table5() {
    McConfig c;
    c.experiment = ExperimentKind::ada;
    c.runs = 50;
    c.estimators = {"hgla", "adalasso", "lasso"};
    const McReport r = run_monte_carlo(c);
    const double h = r.aggregates.at("hgla").sparsity_index;
    const double a = r.aggregates.at("adalasso").sparsity_index;
    const double l = r.aggregates.at("lasso").sparsity_index;
    return {h > a && a > l, fmt("sparsity hgla %.1f", h) + fmt(" adalasso %.1f", a) + fmt(" lasso %.1f", l)};
}

Verdict c9_consistency() {
    const Index p = 4;
    const Index k = 3;
    const double s2 = 1.0;
    Vector theta = Vector::Zero(p * k);
    theta.segment(0, k) << 1.0, -0.5, 0.8;
    theta.segment(2 * k, k) << 0.6, 0.6, -0.3;
    const BlockVector tb(theta, Partition::uniform(p, k));
    std::vector<double> med_err;
    std::vector<double> med_null;
    bool null_ok = true;
    std::string detail;
    for (Index n : {100, 400, 1600}) {
        std::vector<double> errs;
        std::vector<double> nulls;
        for (int seed = 0; seed < 20; ++seed) {
            std::mt19937_64 rng(1000 + seed * 7 + static_cast<std::uint64_t>(n));
            const GroupedDesign d(gaussian(n, p * k, rng), Partition::uniform(p, k));
            const Vector y = d.matrix() * theta + std::sqrt(s2) * gaussian_vec(n, rng);
            const HglSolution h = solve_hgl_pqn(y, d, s2, 0.0, Vector::Constant(p, 0.1));
            for (Index i = 0; i < p; ++i) {
                if (tb.block_norm(i) > 0.0) {
                    errs.push_back(std::abs(h.lambda[i] - lambda_opt(tb.block(i))));
                } else {
                    nulls.push_back(h.lambda[i]);
                }
            }
        }
        med_err.push_back(median(errs));
        med_null.push_back(median(nulls));
        null_ok = null_ok && med_null.back() <= 10.0 * s2 / static_cast<double>(n);
        detail += fmt(" n=%.0f:", static_cast<double>(n)) + fmt(" err %.3g", med_err.back()) +
                  fmt(" null %.3g", med_null.back());
    }
    const bool dec = med_err[0] > med_err[1] && med_err[1] > med_err[2];
    return {dec && null_ok, "median" + detail};
}

Verdict c10_mse() {
    std::mt19937_64 rng(110);
    const Index n = 30;
    const GroupedDesign d(gaussian(n, 6, rng), Partition::uniform(3, 2));
    Vector theta(6);
    theta << 1.0, -1.0, 0.0, 0.0, 0.5, 2.0;
    const BlockVector tb(theta, d.partition());
    Vector lam(3);
    lam << 0.7, 0.0, 1.5;
    const double s2 = 0.8;
    const HyperState hs{lam, 0.0, s2};
    const double formula = mse_of_lambda(d, hs, tb);
    const Matrix sigma = assemble_sigma_y(d, hs);
    const Matrix op = d.partition().expand(lam).asDiagonal() * d.matrix().transpose() * sigma.llt().solve(Matrix::Identity(n, n));
    const int draws = 10000;
    std::vector<double> sq(draws);
    for (int r = 0; r < draws; ++r) {
        const Vector y = d.matrix() * theta + std::sqrt(s2) * gaussian_vec(n, rng);
        sq[r] = (op * y - theta).squaredNorm();
    }
    double mean = 0.0;
    for (double v : sq) {
        mean += v;
    }
    mean /= draws;
    double var = 0.0;
    for (double v : sq) {
        var += (v - mean) * (v - mean);
    }
    const double se = std::sqrt(var / (draws - 1) / draws);
    const bool mc_ok = std::abs(mean - formula) <= 3.0 * se;

    // Optimal scale under an orthogonal design against a grid of alternatives.
    const GroupedDesign od(orthogonal_design(40, 6, rng), Partition::uniform(3, 2));
    Vector lopt(3);
    for (Index i = 0; i < 3; ++i) {
        lopt[i] = lambda_opt(tb.block(i));
    }
    const double best = mse_of_lambda(od, {lopt, 0.0, s2}, tb);
    bool grid_ok = true;
    for (double g : log_grid(1e-3, 1e2, 20)) {
        for (Index i = 0; i < 3; ++i) {
            Vector alt = lopt;
            alt[i] = g;
            grid_ok = grid_ok && mse_of_lambda(od, {alt, 0.0, s2}, tb) >= best - 1e-12;
        }
    }
    return {mc_ok && grid_ok, fmt("formula %.5g", formula) + fmt(" vs Monte Carlo %.5g", mean) +
                                  fmt(" (%.2f se)", std::abs(mean - formula) / se) +
                                  (grid_ok ? ", optimal scale beats grid" : ", grid beats optimal scale")};
}

Verdict c11_unbiased() {
    std::mt19937_64 rng(111);
    std::normal_distribution<double> nd;
    const Index k = 5;
    const Index n = 50;
    const double s2 = 0.5;
    Vector theta(k);
    theta << 0.3, -0.2, 0.1, 0.0, 0.4;
    const double target = theta.squaredNorm() / k;
    const double var_formula = 2.0 * s2 * s2 / (k * n * n) + 4.0 * theta.squaredNorm() * s2 / (k * k * n);
    const int draws = 10000;
    std::vector<double> v(draws);
    for (int r = 0; r < draws; ++r) {
        Vector ls = theta;
        for (Index j = 0; j < k; ++j) {
            ls[j] += nd(rng) * std::sqrt(s2 / n);
        }
        v[r] = ls.squaredNorm() / k - s2 / n;
    }
    double mean = 0.0;
    for (double x : v) {
        mean += x;
    }
    mean /= draws;
    double var = 0.0;
    for (double x : v) {
        var += (x - mean) * (x - mean);
    }
    var /= draws - 1;
    const double se = std::sqrt(var / draws);
    const bool ok = std::abs(mean - target) <= 3.0 * se && std::abs(var - var_formula) <= 0.1 * var_formula;
    return {ok, fmt("mean %.5g", mean) + fmt(" vs %.5g", target) + fmt("; variance %.4g", var) +
                    fmt(" vs %.4g", var_formula)};
}

Verdict c12_arx() {
    const ArxSystem sys = default_arx_system();
    const Matrix series = simulate_arx(sys, 1500, 12);
    const Index q = 20;
    const ArxReport h = arx_evaluate(series, q, 500, "hglc", 1);
    const ArxReport m = arx_evaluate(series, q, 500, "mkl", 1);
    Index active = 1;
    for (const auto& b : sys.b) {
        active += b.size() > 0 && b.norm() > 0.0;
    }
    const Index chosen = static_cast<Index>(nonzero_groups(h.estimate.theta).size());
    const bool ok = h.cod[0] >= m.cod[0] - 0.02 && chosen <= active + 1;
    return {ok, fmt("COD1 hglc %.4f", h.cod[0]) + fmt(" mkl %.4f", m.cod[0]) +
                    fmt("; hglc channels %.0f", static_cast<double>(chosen)) +
                    fmt(" of true %.0f", static_cast<double>(active))};
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        double budget_s;
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> criteria{
        {"orthogonal-design closed forms", 30, c1_orthogonal},
        {"marginal likelihood gradient", 10, c2_gradient},
        {"first-order certificates", 30, c3_kkt},
        {"group lasso and MKL coincide", 60, c4_glasso_mkl},
        {"two-group thresholds", 1, c5_two_group},
        {"zero probabilities", 120, c6_zero_prob},
        {"experiment 1 sparsity and error", 900, c7_table1},
        {"adaptive lasso generator ordering", 600, c8_table5},
        {"consistency at gamma = 0", 300, c9_consistency},
        {"MSE formula", 120, c10_mse},
        {"unbiased scale estimate", 60, c11_unbiased},
        {"ARX pipeline", 300, c12_arx},
    };
    int failed = 0;
    int index = 1;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.budget_s) {
            v.pass = false;
            v.detail += fmt("; over time budget (%.0f s)", c.budget_s);
        }
        failed += !v.pass;
        std::printf("%s %2d %s: %s [%.2f s]\n", v.pass ? "PASS" : "FAIL", index++, c.name, v.detail.c_str(), secs);
        std::fflush(stdout);
    }
    return failed == 0 ? 0 : 1;
}
