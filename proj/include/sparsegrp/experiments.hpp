#pragma once

// Synthetic problem generators, accuracy metrics, ARX regressions and the
// Monte Carlo harness.

#include "sparsegrp/selection.hpp"
#include "sparsegrp/types.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <string>

namespace sparsegrp {

enum class ExperimentKind { exp1, exp2, exp2_noisy, ada };

ExperimentKind parse_experiment(const std::string& name, char* noisy_case = nullptr);
std::string experiment_name(ExperimentKind kind, char noisy_case = 'a');

struct McConfig {
    ExperimentKind experiment = ExperimentKind::exp1;
    char noisy_case = 'a';  ///< exp2_noisy: noise variance = output variance / 5, 2, 1 for a, b, c
    int runs = 50;
    std::uint64_t master_seed = 1;
    std::vector<std::string> estimators{"hgla", "hglb", "hglc", "mkl"};
    Index p = 10;
    Index k = 4;
    Index n = 100;
    double snr_divisor = 25.0;
    double correlation = 0.2;
    Index ada_n = 60;
    double ada_sigma2 = 1.0;
    int threads = 0;  ///< 0: OpenMP default

    void validate() const;
};

/// Per-run seed derived from the master seed.
std::uint64_t run_seed(std::uint64_t master_seed, int run);

struct Problem {
    GroupedDesign design;
    BlockVector theta_true;
    Vector y;
    double sigma2_true = 0.0;
};

Problem gen_problem(const McConfig& config, int run);

/// Rows drawn from N(0, Psi) with Psi_ij = beta^|i-j|.
Matrix gaussian_toeplitz_rows(Index n, Index m, double beta, std::mt19937_64& rng);

/// Column recursion G_{.,j} = G_{.,j-1} + c v_{.,j-1}, first column standard normal.
Matrix correlated_columns(Index n, Index m, double c, std::mt19937_64& rng);

/// 100 ||theta - theta_hat|| / ||theta||.
double percentage_error(const Vector& theta_hat, const Vector& theta_true);

/// Per-group zero flags under the relative threshold used throughout.
std::vector<bool> zero_pattern(const BlockVector& theta);

struct ZeroOutcome {
    int true_zero = 0;
    int correctly_zero = 0;
};

ZeroOutcome score_zeros(const std::vector<bool>& estimated_zero, const std::vector<bool>& true_zero);

/// 100 * pooled correctly-zeroed / pooled true-zero blocks (100 when there are none).
double sparsity_index(const std::vector<ZeroOutcome>& outcomes);

/// Fits named methods on one data set, sharing the noise-variance estimate and
/// the forward-selection stage between the HGL variants.
class MethodRunner {
public:
    MethodRunner(GroupedDesign design, Vector y, std::optional<double> sigma2 = std::nullopt,
                 SelectionConfig selection = {});

    double sigma2();
    const SelectionTrace& selection_trace();
    EstimateResult fit(const std::string& method);

    const GroupedDesign& design() const { return design_; }
    const Vector& y() const { return y_; }

    /// hgla hglb hglc mkl glasso lasso adalasso
    static const std::vector<std::string>& method_names();

private:
    GroupedDesign design_;
    Vector y_;
    std::optional<double> sigma2_;
    SelectionConfig selection_;
    std::optional<SelectionTrace> trace_;
};

using EstimatorFn = std::function<EstimateResult(const Problem&, MethodRunner&)>;

/// Name -> estimator. Holds the built-in methods; further ones (e.g. an oracle) can be added.
class EstimatorRegistry {
public:
    EstimatorRegistry();
    void add(const std::string& name, EstimatorFn fn);
    bool contains(const std::string& name) const;
    const EstimatorFn& get(const std::string& name) const;
    std::vector<std::string> names() const;

    /// Returns the true coefficients.
    static EstimateResult oracle(const Problem& problem, MethodRunner&);

private:
    std::map<std::string, EstimatorFn> fns_;
};

struct RunRecord {
    int run = 0;
    std::uint64_t seed = 0;
    std::string method;
    double pct_error = 0.0;
    std::vector<bool> zero_pattern;  ///< estimated zero flags per group
    std::vector<bool> true_zero;
    std::string status;  ///< "ok" or the failure message
};

struct MethodSummary {
    double mean_error = 0.0;
    double median_error = 0.0;
    double sparsity_index = 0.0;
    int failures = 0;
    int runs = 0;
};

struct McReport {
    McConfig config;
    std::vector<RunRecord> per_run;  ///< ordered by run, then by the configured method order
    std::map<std::string, MethodSummary> aggregates;
};

McReport run_monte_carlo(const McConfig& config, const EstimatorRegistry& registry = {});

std::string report_json(const McReport& report);
std::string report_csv(const McReport& report);

// ARX regressions.

/// Multichannel series: column 0 is the output, columns 1.. are inputs.
struct ChannelScaling {
    Vector mean;
    Vector sd;
};

ChannelScaling channel_scaling(const Matrix& series);
Matrix apply_scaling(const Matrix& series, const ChannelScaling& scaling);

struct ArxProblem {
    GroupedDesign design;
    Vector y;
    Index q = 0;
    Index inputs = 0;
    Index first_row = 0;  ///< time index of the first regression row
};

/// Regression y_t on (y_{t-1..t-q}, u^1_{t-1..t-q}, ...), rows t = q..T-1 (0-based).
/// The series is used as given (scale it first if needed).
ArxProblem build_arx(const Matrix& series, Index q);

/// k-step-ahead predictions by output-feedback iteration; entry j predicts time q + k - 1 + j.
Vector arx_predict(const Vector& theta, const Matrix& series, Index q, Index k);

/// 1 - sum (y - yhat_{t|t-k})^2 / sum (y - ybar)^2 over t = q+k-1..T-1.
double cod_k(const Vector& theta, const Matrix& series, Index q, Index k);

/// Synthetic sparse ARX system: output AR(2), inputs 1 and 2 active, input 3 inactive.
struct ArxSystem {
    Vector a;                 ///< output lag coefficients
    std::vector<Vector> b;    ///< per-input lag coefficients (empty vector = inactive)
    double noise_sd = 0.0;
};

ArxSystem default_arx_system();
Matrix simulate_arx(const ArxSystem& system, Index length, std::uint64_t seed);

struct ArxReport {
    std::vector<double> cod;            ///< COD_k for k = 1..K
    std::vector<double> block_norms;    ///< ||theta^(i)|| per channel
    EstimateResult estimate;
    ChannelScaling scaling;
};

/// Scales with training statistics, fits method on the first train_length samples and scores
/// the rest for k = 1..horizon.
ArxReport arx_evaluate(const Matrix& series, Index q, Index train_length, const std::string& method,
                       Index horizon);

}  // namespace sparsegrp
