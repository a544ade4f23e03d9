#pragma once

// Forward selection in hyperparameter space and the three marginal-likelihood
// pipelines built on it (HGLa, HGLb, HGLc).

#include "sparsegrp/core_model.hpp"
#include "sparsegrp/pqn.hpp"

#include <string>

namespace sparsegrp {

/// ||y - G theta_ls||^2 / (n - m); throws when n <= m.
double estimate_sigma2_ls(const Vector& y, const Matrix& g);

struct KappaEstimate {
    double kappa = 0.0;
    double objective = 0.0;
    bool at_boundary = false;
};

/// Common scale kappa = lambda_1 = ... = lambda_p maximizing the marginal likelihood.
/// The default bracket is [1e-8, 1e8] * ||y||^2 / n.
KappaEstimate estimate_kappa(const Vector& y, const GroupedDesign& design, double sigma2,
                             std::optional<std::pair<double, double>> bracket = std::nullopt);

struct ForwardSelection {
    std::vector<Index> selected;  ///< in order of inclusion
    std::vector<double> gains;    ///< accepted gains, each > 0
};

/// Greedy inclusion of groups at scale kappa while the marginal log posterior improves.
ForwardSelection forward_select(const Vector& y, const GroupedDesign& design, double sigma2, double kappa,
                                double gamma);

/// Greedy order over all groups with the gains of the marginal log likelihood alone
/// (no prior term); the selection at gamma is the prefix before the first gain <= gamma * kappa.
struct ForwardPath {
    std::vector<Index> order;
    std::vector<double> gains;

    std::vector<Index> selection(double gamma, double kappa) const;
};

ForwardPath forward_path(const Vector& y, const GroupedDesign& design, double sigma2, double kappa);

/// log p(y | lambda) up to constants, with lambda_i = kappa on the set and 0 elsewhere.
double subset_log_likelihood(const MarginalModel& model, const std::vector<Index>& set, double kappa,
                             double sigma2);

enum class Variant { hgla, hglb, hglc };

Variant parse_variant(const std::string& name);
std::string variant_name(Variant v);

struct SelectionConfig {
    double split_fraction = 0.5;
    std::optional<std::vector<double>> gamma_grid;  ///< default: grid_n log points in [grid_lo, grid_hi] / kappa
    int grid_n = 30;
    double grid_lo = 1e-2;
    double grid_hi = 1e4;
    std::optional<std::pair<double, double>> kappa_bracket;
    Variant variant = Variant::hgla;
    std::optional<double> sigma2;  ///< default: least-squares estimate on all rows
    PqnConfig pqn{};

    void validate() const;
};

struct SelectionTrace {
    std::vector<double> gammas;
    std::vector<std::vector<Index>> selected;  ///< I(gamma) per grid point
    std::vector<double> validation_errors;
    ForwardPath path;
    double gamma_hat = 0.0;
    double kappa_hat = 0.0;
    bool kappa_at_boundary = false;
    std::vector<Index> selected_fs;
};

struct HglFit {
    EstimateResult estimate;
    SelectionTrace trace;
};

/// Forward-selection stage shared by the three variants.
SelectionTrace select_groups_cv(const Vector& y, const GroupedDesign& design, double sigma2,
                                const SelectionConfig& config);

/// Final stage of a variant given the forward-selection outcome.
/// HGLa keeps the selection scales, HGLb refines all scales at gamma_hat,
/// HGLc refines only the selected scales with gamma = 0.
EstimateResult finish_variant(const Vector& y, const GroupedDesign& design, double sigma2,
                              const SelectionTrace& trace, Variant variant, const PqnConfig& pqn = {});

HglFit fit_hglasso(const Vector& y, const GroupedDesign& design, const SelectionConfig& config);

}  // namespace sparsegrp
