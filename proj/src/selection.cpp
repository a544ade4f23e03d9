#include "sparsegrp/selection.hpp"

#include "sparsegrp/convex.hpp"
#include "sparsegrp/hglasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace sparsegrp {

double estimate_sigma2_ls(const Vector& y, const Matrix& g) {
    if (y.size() != g.rows()) {
        throw DimensionError("y length differs from design rows");
    }
    if (g.rows() <= g.cols()) {
        throw std::invalid_argument("noise variance estimate needs n > m; supply sigma2 explicitly");
    }
    const Vector theta = least_squares(g, y);
    return (y - g * theta).squaredNorm() / static_cast<double>(g.rows() - g.cols());
}

namespace {

// Marginal likelihood along lambda = kappa * 1 via the SVD of G.
struct KappaProfile {
    Vector s2;    // squared singular values
    Vector proj;  // (u_j^T y)^2
    double rest = 0.0;
    Index n = 0;
    double sigma2 = 1.0;

    double value(double kappa, double* d1 = nullptr, double* d2 = nullptr) const {
        const Index r = s2.size();
        double v = static_cast<double>(n - r) * std::log(sigma2) + rest / sigma2;
        double g1 = 0.0;
        double g2 = 0.0;
        for (Index j = 0; j < r; ++j) {
            const double e = sigma2 + kappa * s2[j];
            v += std::log(e) + proj[j] / e;
            g1 += s2[j] / e - proj[j] * s2[j] / (e * e);
            g2 += -s2[j] * s2[j] / (e * e) + 2.0 * proj[j] * s2[j] * s2[j] / (e * e * e);
        }
        if (d1) {
            *d1 = 0.5 * g1;
        }
        if (d2) {
            *d2 = 0.5 * g2;
        }
        return 0.5 * v;
    }
};

}  // namespace

KappaEstimate estimate_kappa(const Vector& y, const GroupedDesign& design, double sigma2,
                             std::optional<std::pair<double, double>> bracket) {
    if (!(sigma2 > 0.0)) {
        throw std::invalid_argument("noise variance must be positive");
    }
    if (y.size() != design.n()) {
        throw DimensionError("y length differs from design rows");
    }
    Eigen::BDCSVD<Matrix> svd(design.matrix(), Eigen::ComputeThinU);
    const Vector sv = svd.singularValues();
    const double tol = 1e-12 * std::max(1.0, sv.size() ? sv[0] : 0.0);
    Index r = 0;
    while (r < sv.size() && sv[r] > tol) {
        ++r;
    }
    KappaProfile prof;
    prof.n = design.n();
    prof.sigma2 = sigma2;
    prof.s2 = sv.head(r).cwiseAbs2();
    const Vector uy = svd.matrixU().leftCols(r).transpose() * y;
    prof.proj = uy.cwiseAbs2();
    prof.rest = std::max(0.0, y.squaredNorm() - prof.proj.sum());

    KappaEstimate out;
    out.objective = prof.value(0.0);
    const double yscale = y.squaredNorm() / static_cast<double>(y.size());
    if (r == 0 || yscale == 0.0) {
        out.at_boundary = true;
        return out;
    }
    const auto [blo, bhi] = bracket.value_or(std::make_pair(1e-8 * yscale, 1e8 * yscale));
    if (!(blo > 0.0) || !(bhi > blo)) {
        throw std::invalid_argument("kappa bracket must satisfy 0 < lo < hi");
    }

    // Golden section on log kappa.
    const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
    double a = std::log(blo);
    double b = std::log(bhi);
    double c = b - phi * (b - a);
    double d = a + phi * (b - a);
    double fc = prof.value(std::exp(c));
    double fd = prof.value(std::exp(d));
    while (b - a > 1e-10) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - phi * (b - a);
            fc = prof.value(std::exp(c));
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + phi * (b - a);
            fd = prof.value(std::exp(d));
        }
    }
    double kappa = std::exp(0.5 * (a + b));
    const bool hit_edge = (a - std::log(blo) < 1e-6) || (std::log(bhi) - b < 1e-6);

    // Newton polish on kappa itself.
    for (int it = 0; it < 20; ++it) {
        double g1 = 0.0;
        double g2 = 0.0;
        prof.value(kappa, &g1, &g2);
        if (!(g2 > 0.0)) {
            break;
        }
        const double next = kappa - g1 / g2;
        const double fk = prof.value(kappa);
        if (!(next > 0.0) || prof.value(next) > fk + 1e-12 * std::abs(fk)) {
            break;
        }
        const bool done = std::abs(next - kappa) <= 1e-14 * kappa;
        kappa = next;
        if (done) {
            break;
        }
    }
    const double fk = prof.value(kappa);
    if (out.objective <= fk) {
        out.kappa = 0.0;
        out.at_boundary = true;
        return out;
    }
    out.kappa = kappa;
    out.objective = fk;
    out.at_boundary = hit_edge;
    return out;
}

double subset_log_likelihood(const MarginalModel& model, const std::vector<Index>& set, double kappa,
                             double sigma2) {
    Vector lambda = Vector::Zero(model.design().p());
    for (Index i : set) {
        lambda[i] = kappa;
    }
    return -model.hgl_objective(lambda, sigma2, 0.0);
}

namespace {

// One greedy step: best group to add and its likelihood gain; ties go to the smallest index.
std::pair<Index, double> best_addition(const MarginalModel& model, const std::vector<Index>& current,
                                       const std::vector<bool>& in_set, double base, double kappa,
                                       double sigma2) {
    Index best = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    std::vector<Index> trial = current;
    trial.push_back(0);
    for (Index j = 0; j < model.design().p(); ++j) {
        if (in_set[static_cast<size_t>(j)]) {
            continue;
        }
        trial.back() = j;
        const double gain = subset_log_likelihood(model, trial, kappa, sigma2) - base;
        if (gain > best_gain) {
            best_gain = gain;
            best = j;
        }
    }
    return {best, best_gain};
}

}  // namespace

ForwardSelection forward_select(const Vector& y, const GroupedDesign& design, double sigma2, double kappa,
                                double gamma) {
    if (!(kappa >= 0.0) || !(gamma >= 0.0)) {
        throw std::invalid_argument("kappa and gamma must be nonnegative");
    }
    const MarginalModel model(design, y);
    ForwardSelection out;
    std::vector<bool> in_set(static_cast<size_t>(design.p()), false);
    double base = subset_log_likelihood(model, {}, kappa, sigma2);
    while (static_cast<Index>(out.selected.size()) < design.p()) {
        const auto [j, dl] = best_addition(model, out.selected, in_set, base, kappa, sigma2);
        const double gain = dl - gamma * kappa;
        if (!(gain > 0.0)) {
            break;
        }
        out.selected.push_back(j);
        out.gains.push_back(gain);
        in_set[static_cast<size_t>(j)] = true;
        base += dl;
    }
    return out;
}

std::vector<Index> ForwardPath::selection(double gamma, double kappa) const {
    std::vector<Index> out;
    for (size_t s = 0; s < order.size(); ++s) {
        if (!(gains[s] - gamma * kappa > 0.0)) {
            break;
        }
        out.push_back(order[s]);
    }
    return out;
}

ForwardPath forward_path(const Vector& y, const GroupedDesign& design, double sigma2, double kappa) {
    if (!(kappa >= 0.0)) {
        throw std::invalid_argument("kappa must be nonnegative");
    }
    const MarginalModel model(design, y);
    ForwardPath out;
    std::vector<bool> in_set(static_cast<size_t>(design.p()), false);
    double base = subset_log_likelihood(model, {}, kappa, sigma2);
    while (static_cast<Index>(out.order.size()) < design.p()) {
        const auto [j, dl] = best_addition(model, out.order, in_set, base, kappa, sigma2);
        out.order.push_back(j);
        out.gains.push_back(dl);
        in_set[static_cast<size_t>(j)] = true;
        base += dl;
    }
    return out;
}

Variant parse_variant(const std::string& name) {
    if (name == "hgla") {
        return Variant::hgla;
    }
    if (name == "hglb") {
        return Variant::hglb;
    }
    if (name == "hglc") {
        return Variant::hglc;
    }
    throw std::invalid_argument("unknown variant '" + name + "'");
}

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::hgla:
            return "hgla";
        case Variant::hglb:
            return "hglb";
        case Variant::hglc:
            return "hglc";
    }
    return "?";
}

void SelectionConfig::validate() const {
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) {
        throw std::invalid_argument("split fraction must lie in (0,1)");
    }
    if (gamma_grid) {
        if (gamma_grid->empty()) {
            throw std::invalid_argument("gamma grid is empty");
        }
        for (size_t i = 0; i < gamma_grid->size(); ++i) {
            if (!((*gamma_grid)[i] >= 0.0) || (i > 0 && !((*gamma_grid)[i] > (*gamma_grid)[i - 1]))) {
                throw std::invalid_argument("gamma grid must be nonnegative and strictly increasing");
            }
        }
    } else if (grid_n < 1 || !(grid_lo > 0.0) || !(grid_hi >= grid_lo)) {
        throw std::invalid_argument("invalid gamma grid specification");
    }
    if (sigma2 && !(*sigma2 > 0.0)) {
        throw std::invalid_argument("noise variance must be positive");
    }
    pqn.validate();
}

SelectionTrace select_groups_cv(const Vector& y, const GroupedDesign& design, double sigma2,
                                const SelectionConfig& config) {
    config.validate();
    if (y.size() != design.n()) {
        throw DimensionError("y length differs from design rows");
    }
    const Index ntr = train_rows(design.n(), config.split_fraction);
    const Index nval = design.n() - ntr;
    const GroupedDesign dtr = design.rows(0, ntr);
    const Vector ytr = y.head(ntr);
    const Matrix gval = design.matrix().bottomRows(nval);
    const Vector yval = y.tail(nval);

    SelectionTrace tr;
    const KappaEstimate ke = estimate_kappa(ytr, dtr, sigma2, config.kappa_bracket);
    tr.kappa_hat = ke.kappa;
    tr.kappa_at_boundary = ke.at_boundary;
    if (config.gamma_grid) {
        tr.gammas = *config.gamma_grid;
    } else {
        const double base = ke.kappa > 0.0 ? 1.0 / ke.kappa : 1.0;
        tr.gammas = log_grid(config.grid_lo * base, config.grid_hi * base, config.grid_n);
    }
    tr.path = forward_path(ytr, dtr, sigma2, ke.kappa);

    double best = std::numeric_limits<double>::infinity();
    for (double gamma : tr.gammas) {
        std::vector<Index> set = tr.path.selection(gamma, ke.kappa);
        Vector lambda = Vector::Zero(design.p());
        for (Index i : set) {
            lambda[i] = ke.kappa;
        }
        const BlockVector theta = posterior_mean(dtr, HyperState{lambda, 0.0, sigma2}, ytr);
        const double err = (yval - gval * theta.values()).squaredNorm();
        tr.validation_errors.push_back(err);
        if (err < best) {
            best = err;
            tr.gamma_hat = gamma;
            tr.selected_fs = set;
        }
        tr.selected.push_back(std::move(set));
    }
    return tr;
}

EstimateResult finish_variant(const Vector& y, const GroupedDesign& design, double sigma2,
                              const SelectionTrace& tr, Variant variant, const PqnConfig& pqn) {
    Vector lambda_fs = Vector::Zero(design.p());
    for (Index i : tr.selected_fs) {
        lambda_fs[i] = tr.kappa_hat;
    }
    SolverDiagnostics diag;
    Vector lambda = lambda_fs;
    switch (variant) {
        case Variant::hgla:
            diag.status = "converged";
            diag.kkt_residual = kkt_residual_hgl(lambda, y, design, sigma2, tr.gamma_hat);
            diag.objective = neg_log_marginal(design, HyperState{lambda, tr.gamma_hat, sigma2}, y);
            break;
        case Variant::hglb: {
            const HglSolution sol = solve_hgl_pqn(y, design, sigma2, tr.gamma_hat, lambda_fs, pqn);
            lambda = sol.lambda;
            diag = sol.diagnostics;
            break;
        }
        case Variant::hglc: {
            if (tr.selected_fs.empty()) {
                diag.status = "converged";
                break;
            }
            PqnConfig pc = pqn;
            pc.active_set = tr.selected_fs;
            const HglSolution sol = solve_hgl_pqn(y, design, sigma2, 0.0, lambda_fs, pc);
            lambda = sol.lambda;
            diag = sol.diagnostics;
            break;
        }
    }
    EstimateResult res = estimate_from_lambda(design, y, lambda, sigma2);
    res.gamma_hat = tr.gamma_hat;
    res.diagnostics = std::move(diag);
    return res;
}

HglFit fit_hglasso(const Vector& y, const GroupedDesign& design, const SelectionConfig& config) {
    config.validate();
    const double sigma2 = config.sigma2 ? *config.sigma2 : estimate_sigma2_ls(y, design.matrix());
    HglFit fit;
    fit.trace = select_groups_cv(y, design, sigma2, config);
    fit.estimate = finish_variant(y, design, sigma2, fit.trace, config.variant, config.pqn);
    return fit;
}

}  // namespace sparsegrp
