#include "sparsegrp/pqn.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

namespace sparsegrp {

void PqnConfig::validate() const {
    if (memory < 1) {
        throw std::invalid_argument("quasi-Newton memory must be at least 1");
    }
    if (!(armijo_c > 0.0 && armijo_c < 1.0)) {
        throw std::invalid_argument("armijo_c must lie in (0,1)");
    }
    if (!(backtrack > 0.0 && backtrack < 1.0)) {
        throw std::invalid_argument("backtrack must lie in (0,1)");
    }
    if (!(grad_tol > 0.0)) {
        throw std::invalid_argument("grad_tol must be positive");
    }
    if (max_iter < 1) {
        throw std::invalid_argument("max_iter must be at least 1");
    }
}

Vector projected_gradient(const Vector& x, const Vector& g) {
    Vector pg = g;
    for (Index i = 0; i < x.size(); ++i) {
        if (x[i] <= 0.0 && g[i] > 0.0) {
            pg[i] = 0.0;
        }
    }
    return pg;
}

namespace {

struct Pair {
    Vector s;
    Vector y;
};

Matrix bfgs_matrix(const std::deque<Pair>& pairs, Index dim) {
    const Pair& last = pairs.back();
    Matrix b = Matrix::Identity(dim, dim) * (last.y.squaredNorm() / last.s.dot(last.y));
    for (const Pair& pr : pairs) {
        const Vector bs = b * pr.s;
        b -= bs * bs.transpose() / pr.s.dot(bs);
        b += pr.y * pr.y.transpose() / pr.y.dot(pr.s);
    }
    return b;
}

// Two-metric step: coordinates at the bound with positive gradient are sent to
// zero, the rest take the quasi-Newton step on the free subspace.
// Returns an empty vector if the reduced matrix is not positive definite.
Vector two_metric_direction(const Vector& x, const Vector& g, const Matrix& b, double eps) {
    const Index dim = x.size();
    Vector d = Vector::Zero(dim);
    std::vector<Index> free;
    for (Index j = 0; j < dim; ++j) {
        if (x[j] <= eps && g[j] > 0.0) {
            d[j] = -x[j];
        } else {
            free.push_back(j);
        }
    }
    if (!free.empty()) {
        const Eigen::LLT<Matrix> llt(b(free, free));
        if (llt.info() != Eigen::Success) {
            return {};
        }
        d(free) = -llt.solve(g(free));
    }
    return d;
}

}  // namespace

PqnResult minimize_pqn(const SmoothObjective& f, const Vector& x0, const PqnConfig& config) {
    config.validate();
    const Index full = x0.size();
    if ((x0.array() < 0.0).any()) {
        throw std::invalid_argument("starting point must be nonnegative");
    }

    std::vector<Index> free_idx;
    if (config.active_set) {
        free_idx = *config.active_set;
        std::sort(free_idx.begin(), free_idx.end());
        free_idx.erase(std::unique(free_idx.begin(), free_idx.end()), free_idx.end());
        for (Index i : free_idx) {
            if (i < 0 || i >= full) {
                throw DimensionError("active set index out of range");
            }
        }
    } else {
        free_idx.resize(static_cast<size_t>(full));
        for (Index i = 0; i < full; ++i) {
            free_idx[static_cast<size_t>(i)] = i;
        }
    }
    const Index dim = static_cast<Index>(free_idx.size());

    Vector xfull = Vector::Zero(full);
    for (Index i : free_idx) {
        xfull[i] = x0[i];
    }
    auto eval = [&](const Vector& xr, Vector* gr) {
        for (Index j = 0; j < dim; ++j) {
            xfull[free_idx[static_cast<size_t>(j)]] = xr[j];
        }
        Vector gfull;
        const double val = f(xfull, gr ? &gfull : nullptr);
        if (gr) {
            gr->resize(dim);
            for (Index j = 0; j < dim; ++j) {
                (*gr)[j] = gfull[free_idx[static_cast<size_t>(j)]];
            }
        }
        return val;
    };

    PqnResult res;
    Vector x(dim);
    for (Index j = 0; j < dim; ++j) {
        x[j] = x0[free_idx[static_cast<size_t>(j)]];
    }
    Vector g;
    double fx = eval(x, &g);
    if (!std::isfinite(fx)) {
        throw NumericalError("objective is not finite at the starting point");
    }
    res.objective_trace.push_back(fx);

    auto tolerance = [&](double fval) {
        return config.scale_by_objective ? config.grad_tol * (1.0 + std::abs(fval))
                                         : config.grad_tol * config.gradient_scale;
    };

    std::deque<Pair> pairs;
    double pg_norm = dim > 0 ? projected_gradient(x, g).lpNorm<Eigen::Infinity>() : 0.0;
    res.status = "max_iter";
    int it = 0;
    for (; it < config.max_iter; ++it) {
        if (pg_norm <= tolerance(fx)) {
            res.converged = true;
            res.status = "converged";
            break;
        }
        const double xmax = std::max(x.lpNorm<Eigen::Infinity>(), 1.0);
        Vector d;
        if (!pairs.empty()) {
            const double width = (x - (x - g).cwiseMax(0.0)).lpNorm<Eigen::Infinity>();
            d = two_metric_direction(x, g, bfgs_matrix(pairs, dim), std::min(width, 1e-3 * xmax));
        }
        double slope = d.size() ? g.dot((x + d).cwiseMax(0.0) - x) : 0.0;
        if (!(slope < 0.0)) {
            pairs.clear();
            d = (x - (xmax / g.lpNorm<Eigen::Infinity>()) * g).cwiseMax(0.0) - x;
            slope = g.dot(d);
            if (!(slope < 0.0)) {
                res.status = "no_descent";
                break;
            }
        }

        // Decreases below this are lost to rounding in f.
        const double noise = 10.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(fx));
        double t = 1.0;
        Vector xn;
        Vector gn;
        double fn = 0.0;
        bool accepted = false;
        while (t >= 1e-20) {
            xn = (x + t * d).cwiseMax(0.0);
            for (Index j = 0; j < dim; ++j) {
                if (t == 1.0 && d[j] == -x[j]) {
                    xn[j] = 0.0;
                }
            }
            const double decrease = g.dot(xn - x);
            fn = eval(xn, &gn);
            if (std::isfinite(fn) && decrease < 0.0 && fn <= fx + config.armijo_c * decrease) {
                accepted = true;
                break;
            }
            if (t == 1.0 && std::isfinite(fn) && -slope <= noise && fn <= fx + noise) {
                accepted = true;
                break;
            }
            t *= config.backtrack;
        }
        if (!accepted) {
            res.status = "line_search_stall";
            break;
        }

        Pair pr{xn - x, gn - g};
        const double sy = pr.s.dot(pr.y);
        if (sy > 1e-10 * pr.s.norm() * pr.y.norm()) {
            pairs.push_back(std::move(pr));
            if (static_cast<int>(pairs.size()) > config.memory) {
                pairs.pop_front();
            }
        }
        x = std::move(xn);
        g = std::move(gn);
        fx = fn;
        res.objective_trace.push_back(fx);
        pg_norm = projected_gradient(x, g).lpNorm<Eigen::Infinity>();
    }
    if (it == config.max_iter && pg_norm <= tolerance(fx)) {
        res.converged = true;
        res.status = "converged";
    }

    res.x = Vector::Zero(full);
    for (Index j = 0; j < dim; ++j) {
        res.x[free_idx[static_cast<size_t>(j)]] = x[j];
    }
    res.objective = fx;
    res.pg_norm = pg_norm;
    res.iterations = it;
    return res;
}

}  // namespace sparsegrp
