#pragma once

// Limited-memory projected quasi-Newton for min f(x) subject to x >= 0.

#include "sparsegrp/types.hpp"

#include <functional>

namespace sparsegrp {

struct PqnConfig {
    int memory = 10;
    double armijo_c = 1e-4;
    double backtrack = 0.5;
    double grad_tol = 1e-6;
    int max_iter = 500;
    /// Coordinates allowed to move; all others are held at exactly 0.
    std::optional<std::vector<Index>> active_set;
    /// Stop when ||pg||_inf <= grad_tol * (1 + |f|) if true, else <= grad_tol * gradient_scale.
    bool scale_by_objective = true;
    double gradient_scale = 1.0;

    void validate() const;
};

/// Returns f(x) and writes the gradient into *grad when grad is not null.
using SmoothObjective = std::function<double(const Vector& x, Vector* grad)>;

struct PqnResult {
    Vector x;
    double objective = 0.0;
    double pg_norm = 0.0;  ///< infinity norm of the projected gradient at x
    int iterations = 0;
    bool converged = false;
    std::string status;
    std::vector<double> objective_trace;
};

/// Projected gradient for the bound x >= 0: g_i, except 0 where x_i = 0 and g_i > 0.
Vector projected_gradient(const Vector& x, const Vector& g);

PqnResult minimize_pqn(const SmoothObjective& f, const Vector& x0, const PqnConfig& config = {});

}  // namespace sparsegrp
