#include "sparsegrp/experiments.hpp"

#include "sparsegrp/convex.hpp"
#include "sparsegrp/hglasso.hpp"

#include "json.hpp"
#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace sparsegrp {

ExperimentKind parse_experiment(const std::string& name, char* noisy_case) {
    if (name == "exp1") {
        return ExperimentKind::exp1;
    }
    if (name == "exp2") {
        return ExperimentKind::exp2;
    }
    if (name == "ada") {
        return ExperimentKind::ada;
    }
    if (name.size() == 11 && name.rfind("exp2_noisy", 0) == 0 && name[10] >= 'a' && name[10] <= 'c') {
        if (noisy_case) {
            *noisy_case = name[10];
        }
        return ExperimentKind::exp2_noisy;
    }
    throw std::invalid_argument("unknown experiment '" + name + "' (exp1, exp2, exp2_noisya|b|c, ada)");
}

std::string experiment_name(ExperimentKind kind, char noisy_case) {
    switch (kind) {
        case ExperimentKind::exp1:
            return "exp1";
        case ExperimentKind::exp2:
            return "exp2";
        case ExperimentKind::exp2_noisy:
            return std::string("exp2_noisy") + noisy_case;
        case ExperimentKind::ada:
            return "ada";
    }
    return "?";
}

void McConfig::validate() const {
    if (runs < 1) {
        throw std::invalid_argument("runs must be at least 1");
    }
    if (estimators.empty()) {
        throw std::invalid_argument("no estimators requested");
    }
    if (p < 2 || k < 1 || n < 2 || ada_n < 2) {
        throw std::invalid_argument("experiment dimensions too small");
    }
    if (!(snr_divisor > 0.0) || !(ada_sigma2 > 0.0)) {
        throw std::invalid_argument("noise settings must be positive");
    }
    if (experiment == ExperimentKind::exp2_noisy && (noisy_case < 'a' || noisy_case > 'c')) {
        throw std::invalid_argument("noisy case must be a, b or c");
    }
}

std::uint64_t run_seed(std::uint64_t master_seed, int run) {
    // splitmix64 finalizer over the combined key
    std::uint64_t z = master_seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(run) + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

namespace {

Matrix standard_normal(Index rows, Index cols, std::mt19937_64& rng) {
    std::normal_distribution<double> nd(0.0, 1.0);
    Matrix out(rows, cols);
    for (Index j = 0; j < cols; ++j) {
        for (Index i = 0; i < rows; ++i) {
            out(i, j) = nd(rng);
        }
    }
    return out;
}

double sample_variance(const Vector& v) {
    const double mean = v.mean();
    return (v.array() - mean).square().sum() / static_cast<double>(v.size() - 1);
}

}  // namespace

Matrix gaussian_toeplitz_rows(Index n, Index m, double beta, std::mt19937_64& rng) {
    Matrix psi(m, m);
    for (Index i = 0; i < m; ++i) {
        for (Index j = 0; j < m; ++j) {
            psi(i, j) = std::pow(beta, static_cast<double>(std::abs(i - j)));
        }
    }
    const Eigen::LLT<Matrix> llt(psi);
    if (llt.info() != Eigen::Success) {
        throw NumericalError("row covariance is not positive definite");
    }
    const Matrix z = standard_normal(n, m, rng);
    return z * llt.matrixU();
}

Matrix correlated_columns(Index n, Index m, double c, std::mt19937_64& rng) {
    const Matrix v = standard_normal(n, m, rng);
    Matrix g(n, m);
    g.col(0) = v.col(0);
    for (Index j = 1; j < m; ++j) {
        g.col(j) = g.col(j - 1) + c * v.col(j);
    }
    return g;
}

Problem gen_problem(const McConfig& config, int run) {
    config.validate();
    std::mt19937_64 rng(run_seed(config.master_seed, run));
    std::normal_distribution<double> nd(0.0, 1.0);
    Problem pr;

    if (config.experiment == ExperimentKind::ada) {
        const Index m = 8;
        std::uniform_real_distribution<double> ub(0.5, 1.0);
        double beta = ub(rng);
        while (beta <= 0.5) {
            beta = ub(rng);
        }
        pr.design = GroupedDesign(gaussian_toeplitz_rows(config.ada_n, m, beta, rng), Partition::uniform(m, 1));
        Vector theta(m);
        theta << 3.0, 1.5, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0;
        pr.theta_true = BlockVector(theta, pr.design.partition());
        pr.sigma2_true = config.ada_sigma2;
    } else {
        const Index m = config.p * config.k;
        Matrix g = config.experiment == ExperimentKind::exp1 ? standard_normal(config.n, m, rng)
                                                              : correlated_columns(config.n, m, config.correlation, rng);
        pr.design = GroupedDesign(std::move(g), Partition::uniform(config.p, config.k));

        // First half of the groups always zero, the next one always active, the rest active w.p. 1/2.
        const Index zeros = config.p / 2;
        std::uniform_real_distribution<double> amp(0.0, 100.0);
        std::bernoulli_distribution coin(0.5);
        Vector theta = Vector::Zero(m);
        for (Index i = zeros; i < config.p; ++i) {
            const bool active = i == zeros || coin(rng);
            const double a = amp(rng);
            std::uniform_real_distribution<double> comp(-a, a);
            for (Index j = 0; j < config.k; ++j) {
                const double v = comp(rng);
                if (active) {
                    theta[i * config.k + j] = v;
                }
            }
        }
        pr.theta_true = BlockVector(theta, pr.design.partition());
        double divisor = config.snr_divisor;
        if (config.experiment == ExperimentKind::exp2_noisy) {
            divisor = config.noisy_case == 'a' ? 5.0 : config.noisy_case == 'b' ? 2.0 : 1.0;
        }
        pr.sigma2_true = sample_variance(pr.design.matrix() * theta) / divisor;
    }
    const double sd = std::sqrt(pr.sigma2_true);
    pr.y = pr.design.matrix() * pr.theta_true.values();
    for (Index i = 0; i < pr.y.size(); ++i) {
        pr.y[i] += sd * nd(rng);
    }
    return pr;
}

double percentage_error(const Vector& theta_hat, const Vector& theta_true) {
    if (theta_hat.size() != theta_true.size()) {
        throw DimensionError("coefficient vectors differ in length");
    }
    const double norm = theta_true.norm();
    if (!(norm > 0.0)) {
        throw std::invalid_argument("percentage error needs a nonzero true vector");
    }
    return 100.0 * (theta_true - theta_hat).norm() / norm;
}

std::vector<bool> zero_pattern(const BlockVector& theta) {
    std::vector<bool> zero(static_cast<size_t>(theta.groups()), true);
    for (Index i : nonzero_groups(theta)) {
        zero[static_cast<size_t>(i)] = false;
    }
    return zero;
}

ZeroOutcome score_zeros(const std::vector<bool>& estimated_zero, const std::vector<bool>& true_zero) {
    if (estimated_zero.size() != true_zero.size()) {
        throw DimensionError("zero patterns differ in length");
    }
    ZeroOutcome out;
    for (size_t i = 0; i < true_zero.size(); ++i) {
        if (true_zero[i]) {
            ++out.true_zero;
            if (estimated_zero[i]) {
                ++out.correctly_zero;
            }
        }
    }
    return out;
}

double sparsity_index(const std::vector<ZeroOutcome>& outcomes) {
    long total = 0;
    long hit = 0;
    for (const auto& o : outcomes) {
        total += o.true_zero;
        hit += o.correctly_zero;
    }
    return total == 0 ? 100.0 : 100.0 * static_cast<double>(hit) / static_cast<double>(total);
}

MethodRunner::MethodRunner(GroupedDesign design, Vector y, std::optional<double> sigma2, SelectionConfig selection)
    : design_(std::move(design)), y_(std::move(y)), sigma2_(sigma2), selection_(std::move(selection)) {
    if (y_.size() != design_.n()) {
        throw DimensionError("y has length " + std::to_string(y_.size()) + ", design has " +
                             std::to_string(design_.n()) + " rows");
    }
}

double MethodRunner::sigma2() {
    if (!sigma2_) {
        sigma2_ = selection_.sigma2 ? *selection_.sigma2 : estimate_sigma2_ls(y_, design_.matrix());
    }
    return *sigma2_;
}

const SelectionTrace& MethodRunner::selection_trace() {
    if (!trace_) {
        trace_ = select_groups_cv(y_, design_, sigma2(), selection_);
    }
    return *trace_;
}

const std::vector<std::string>& MethodRunner::method_names() {
    static const std::vector<std::string> names{"hgla", "hglb", "hglc", "mkl", "glasso", "lasso", "adalasso"};
    return names;
}

EstimateResult MethodRunner::fit(const std::string& method) {
    if (method == "hgla" || method == "hglb" || method == "hglc") {
        return finish_variant(y_, design_, sigma2(), selection_trace(), parse_variant(method), selection_.pqn);
    }
    if (method == "mkl") {
        const double g = selection_trace().gamma_hat;
        return solve_mkl_cv(y_, design_, sigma2(), log_grid(selection_.grid_lo * g, selection_.grid_hi * g, selection_.grid_n),
                            selection_.split_fraction);
    }
    CvConfig cv;
    cv.split_fraction = selection_.split_fraction;
    if (method == "glasso") {
        return solve_glasso_cv(y_, design_, sigma2(), cv);
    }
    if (method == "lasso" || method == "adalasso") {
        AdaLassoGrid grid;
        grid.cv = cv;
        EstimateResult e = method == "lasso" ? solve_lasso_cv(y_, design_.matrix(), sigma2(), cv)
                                             : solve_adalasso(y_, design_.matrix(), sigma2(), grid);
        e.theta = BlockVector(e.theta.values(), design_.partition());
        e.selected = nonzero_groups(e.theta, 0.0);
        return e;
    }
    std::string known;
    for (const auto& n : method_names()) {
        known += (known.empty() ? "" : ", ") + n;
    }
    throw std::invalid_argument("unknown method '" + method + "' (known: " + known + ")");
}

EstimatorRegistry::EstimatorRegistry() {
    for (const auto& name : MethodRunner::method_names()) {
        fns_[name] = [name](const Problem&, MethodRunner& runner) { return runner.fit(name); };
    }
}

void EstimatorRegistry::add(const std::string& name, EstimatorFn fn) { fns_[name] = std::move(fn); }

bool EstimatorRegistry::contains(const std::string& name) const { return fns_.count(name) > 0; }

const EstimatorFn& EstimatorRegistry::get(const std::string& name) const {
    auto it = fns_.find(name);
    if (it == fns_.end()) {
        std::string known;
        for (const auto& n : names()) {
            known += (known.empty() ? "" : ", ") + n;
        }
        throw std::invalid_argument("unknown estimator '" + name + "' (registry: " + known + ")");
    }
    return it->second;
}

std::vector<std::string> EstimatorRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& kv : fns_) {
        out.push_back(kv.first);
    }
    return out;
}

EstimateResult EstimatorRegistry::oracle(const Problem& problem, MethodRunner&) {
    EstimateResult e;
    e.theta = problem.theta_true;
    e.selected = nonzero_groups(problem.theta_true);
    return e;
}

McReport run_monte_carlo(const McConfig& config, const EstimatorRegistry& registry) {
    config.validate();
    for (const auto& name : config.estimators) {
        registry.get(name);
    }
    const size_t nm = config.estimators.size();
    McReport rep;
    rep.config = config;
    rep.per_run.resize(static_cast<size_t>(config.runs) * nm);

    const int threads = config.threads > 0 ? config.threads : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
    for (int run = 0; run < config.runs; ++run) {
        const std::uint64_t seed = run_seed(config.master_seed, run);
        const size_t base = static_cast<size_t>(run) * nm;
        std::optional<Problem> problem;
        std::string gen_error;
        try {
            problem = gen_problem(config, run);
        } catch (const std::exception& ex) {
            gen_error = ex.what();
        }
        std::optional<MethodRunner> runner;
        if (problem) {
            runner.emplace(problem->design, problem->y);
        }
        for (size_t mi = 0; mi < nm; ++mi) {
            RunRecord& rec = rep.per_run[base + mi];
            rec.run = run;
            rec.seed = seed;
            rec.method = config.estimators[mi];
            rec.pct_error = std::numeric_limits<double>::quiet_NaN();
            if (!problem) {
                rec.status = "error: " + gen_error;
                continue;
            }
            rec.true_zero = zero_pattern(problem->theta_true);
            try {
                const EstimateResult e = registry.get(rec.method)(*problem, *runner);
                rec.pct_error = percentage_error(e.theta.values(), problem->theta_true.values());
                rec.zero_pattern = zero_pattern(e.theta);
                rec.status = "ok";
            } catch (const std::exception& ex) {
                rec.status = std::string("error: ") + ex.what();
            }
        }
    }

    for (size_t mi = 0; mi < nm; ++mi) {
        const std::string& name = config.estimators[mi];
        std::vector<double> errors;
        std::vector<ZeroOutcome> zeros;
        MethodSummary s;
        for (int run = 0; run < config.runs; ++run) {
            const RunRecord& rec = rep.per_run[static_cast<size_t>(run) * nm + mi];
            ++s.runs;
            if (rec.status != "ok") {
                ++s.failures;
                continue;
            }
            errors.push_back(rec.pct_error);
            zeros.push_back(score_zeros(rec.zero_pattern, rec.true_zero));
        }
        std::sort(errors.begin(), errors.end());
        if (!errors.empty()) {
            s.mean_error = std::accumulate(errors.begin(), errors.end(), 0.0) / static_cast<double>(errors.size());
            const size_t h = errors.size() / 2;
            s.median_error = errors.size() % 2 ? errors[h] : 0.5 * (errors[h - 1] + errors[h]);
        } else {
            s.mean_error = s.median_error = std::numeric_limits<double>::quiet_NaN();
        }
        s.sparsity_index = sparsity_index(zeros);
        rep.aggregates[name] = s;
    }
    return rep;
}

namespace {

nlohmann::json bits(const std::vector<bool>& v) {
    nlohmann::json a = nlohmann::json::array();
    for (bool b : v) {
        a.push_back(b ? 1 : 0);
    }
    return a;
}

nlohmann::json number_or_null(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

std::string bit_string(const std::vector<bool>& v) {
    std::string s;
    for (bool b : v) {
        s += b ? '1' : '0';
    }
    return s;
}

}  // namespace

std::string report_json(const McReport& report) {
    const McConfig& c = report.config;
    nlohmann::json j;
    j["config"] = {{"experiment", experiment_name(c.experiment, c.noisy_case)},
                   {"runs", c.runs},
                   {"master_seed", c.master_seed},
                   {"estimators", c.estimators},
                   {"p", c.p},
                   {"k", c.k},
                   {"n", c.n},
                   {"snr_divisor", c.snr_divisor},
                   {"correlation", c.correlation},
                   {"ada_n", c.ada_n},
                   {"ada_sigma2", c.ada_sigma2}};
    nlohmann::json runs = nlohmann::json::array();
    for (const auto& r : report.per_run) {
        runs.push_back({{"run", r.run},
                        {"seed", r.seed},
                        {"method", r.method},
                        {"pct_error", number_or_null(r.pct_error)},
                        {"zero_pattern", bits(r.zero_pattern)},
                        {"true_zero", bits(r.true_zero)},
                        {"status", r.status}});
    }
    j["per_run"] = std::move(runs);
    nlohmann::json agg = nlohmann::json::object();
    for (const auto& [name, s] : report.aggregates) {
        agg[name] = {{"mean_pct_error", number_or_null(s.mean_error)},
                     {"median_pct_error", number_or_null(s.median_error)},
                     {"sparsity_index", s.sparsity_index},
                     {"failures", s.failures},
                     {"runs", s.runs}};
    }
    j["aggregates"] = std::move(agg);
    return j.dump(2) + "\n";
}

std::string report_csv(const McReport& report) {
    std::ostringstream os;
    os.precision(17);
    os << "run,seed,method,pct_error,zero_pattern,true_zero,status\n";
    for (const auto& r : report.per_run) {
        std::string status = r.status;
        std::replace(status.begin(), status.end(), ',', ';');
        os << r.run << ',' << r.seed << ',' << r.method << ',';
        if (std::isfinite(r.pct_error)) {
            os << r.pct_error;
        }
        os << ',' << bit_string(r.zero_pattern) << ',' << bit_string(r.true_zero) << ',' << status << '\n';
    }
    return os.str();
}

ChannelScaling channel_scaling(const Matrix& series) {
    if (series.rows() < 2) {
        throw DimensionError("series needs at least two samples");
    }
    ChannelScaling s;
    s.mean = series.colwise().mean().transpose();
    s.sd.resize(series.cols());
    for (Index c = 0; c < series.cols(); ++c) {
        const double v = sample_variance(series.col(c));
        s.sd[c] = v > 0.0 ? std::sqrt(v) : 1.0;
    }
    return s;
}

Matrix apply_scaling(const Matrix& series, const ChannelScaling& scaling) {
    if (series.cols() != scaling.mean.size()) {
        throw DimensionError("channel count differs from scaling");
    }
    Matrix out = series.rowwise() - scaling.mean.transpose();
    return out.array().rowwise() / scaling.sd.transpose().array();
}

ArxProblem build_arx(const Matrix& series, Index q) {
    if (q < 1) {
        throw std::invalid_argument("lag order must be at least 1");
    }
    if (series.cols() < 1) {
        throw DimensionError("series has no channels");
    }
    const Index len = series.rows();
    if (len <= q) {
        throw DimensionError("series of length " + std::to_string(len) + " is too short for lag order " +
                             std::to_string(q));
    }
    const Index channels = series.cols();
    const Index rows = len - q;
    Matrix g(rows, channels * q);
    Vector y(rows);
    for (Index r = 0; r < rows; ++r) {
        const Index t = q + r;
        y[r] = series(t, 0);
        for (Index c = 0; c < channels; ++c) {
            for (Index l = 1; l <= q; ++l) {
                g(r, c * q + l - 1) = series(t - l, c);
            }
        }
    }
    ArxProblem out;
    out.design = GroupedDesign(std::move(g), Partition::uniform(channels, q));
    out.y = std::move(y);
    out.q = q;
    out.inputs = channels - 1;
    out.first_row = q;
    return out;
}

Vector arx_predict(const Vector& theta, const Matrix& series, Index q, Index k) {
    const Index channels = series.cols();
    if (theta.size() != channels * q) {
        throw DimensionError("coefficient length differs from (1 + inputs) * q");
    }
    if (k < 1) {
        throw std::invalid_argument("prediction horizon must be at least 1");
    }
    const Index len = series.rows();
    const Index first = q + k - 1;
    if (first >= len) {
        throw DimensionError("series too short for the requested horizon");
    }
    Vector out(len - first);
    std::vector<double> pred(static_cast<size_t>(k));
    for (Index t = first; t < len; ++t) {
        const Index start = t - k + 1;
        for (Index s = start; s <= t; ++s) {
            double v = 0.0;
            for (Index l = 1; l <= q; ++l) {
                const Index src = s - l;
                const double yl = src >= start ? pred[static_cast<size_t>(src - start)] : series(src, 0);
                v += theta[l - 1] * yl;
                for (Index c = 1; c < channels; ++c) {
                    v += theta[c * q + l - 1] * series(src, c);
                }
            }
            pred[static_cast<size_t>(s - start)] = v;
        }
        out[t - first] = pred.back();
    }
    return out;
}

double cod_k(const Vector& theta, const Matrix& series, Index q, Index k) {
    const Vector pred = arx_predict(theta, series, q, k);
    const Vector actual = series.col(0).tail(pred.size());
    const double mean = actual.mean();
    const double den = (actual.array() - mean).square().sum();
    if (!(den > 0.0)) {
        throw std::invalid_argument("test output is constant");
    }
    return 1.0 - (actual - pred).squaredNorm() / den;
}

ArxSystem default_arx_system() {
    ArxSystem s;
    s.a = Vector(2);
    s.a << 0.6, -0.2;
    Vector b1(3);
    b1 << 0.8, 0.4, 0.2;
    Vector b2(3);
    b2 << 0.0, -0.5, 0.3;
    s.b = {b1, b2, Vector()};
    s.noise_sd = 0.3;
    return s;
}

Matrix simulate_arx(const ArxSystem& system, Index length, std::uint64_t seed) {
    const Index burn = 200;
    const Index inputs = static_cast<Index>(system.b.size());
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, 1.0);
    const Index total = length + burn;
    Matrix data = Matrix::Zero(total, 1 + inputs);
    for (Index t = 0; t < total; ++t) {
        for (Index c = 1; c <= inputs; ++c) {
            data(t, c) = nd(rng);
        }
        double v = system.noise_sd * nd(rng);
        for (Index l = 1; l <= system.a.size() && l <= t; ++l) {
            v += system.a[l - 1] * data(t - l, 0);
        }
        for (Index c = 1; c <= inputs; ++c) {
            const Vector& b = system.b[static_cast<size_t>(c - 1)];
            for (Index l = 1; l <= b.size() && l <= t; ++l) {
                v += b[l - 1] * data(t - l, c);
            }
        }
        data(t, 0) = v;
    }
    return data.bottomRows(length);
}

ArxReport arx_evaluate(const Matrix& series, Index q, Index train_length, const std::string& method,
                       Index horizon) {
    if (horizon < 1) {
        throw std::invalid_argument("horizon must be at least 1");
    }
    if (train_length <= q + 1 || train_length >= series.rows()) {
        throw DimensionError("training prefix must be longer than q + 1 and shorter than the series");
    }
    ArxReport rep;
    rep.scaling = channel_scaling(series.topRows(train_length));
    const Matrix scaled = apply_scaling(series, rep.scaling);
    const ArxProblem train = build_arx(scaled.topRows(train_length), q);
    MethodRunner runner(train.design, train.y);
    rep.estimate = runner.fit(method);
    const Matrix test = scaled.bottomRows(series.rows() - train_length + q);
    for (Index k = 1; k <= horizon; ++k) {
        rep.cod.push_back(cod_k(rep.estimate.theta.values(), test, q, k));
    }
    for (Index i = 0; i < rep.estimate.theta.groups(); ++i) {
        rep.block_norms.push_back(rep.estimate.theta.block_norm(i));
    }
    return rep;
}

}  // namespace sparsegrp
