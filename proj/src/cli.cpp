#include "sparsegrp/cli.hpp"

#include "sparsegrp/convex.hpp"
#include "sparsegrp/experiments.hpp"
#include "sparsegrp/hglasso.hpp"
#include "sparsegrp/io.hpp"
#include "sparsegrp/kernels.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace sparsegrp {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Settings {
    std::string method = "hgla";
    std::string data_y;
    std::string data_g;
    std::string data;
    std::string groups;
    double sigma2 = 0.0;
    double gamma = -1.0;
    double grid_lo = 1e-2;
    double grid_hi = 1e4;
    int grid_n = 30;
    double split = 0.5;
    int runs = 50;
    std::uint64_t seed = 1;
    int run = 0;
    int threads = 0;
    std::string out;
    std::string experiment = "exp1";
    std::string estimators = "hgla,hglb,hglc,mkl";
    int q = 20;
    int train = 0;
    int horizon = 10;
    int length = 1400;
    std::string norms_out;
};

// Values from a JSON config file become the defaults that flags override.
void apply_config(Settings& s, const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw UsageError("cannot open config file " + path);
    }
    nlohmann::json j;
    try {
        f >> j;
    } catch (const std::exception& ex) {
        throw UsageError("config file " + path + " is not valid JSON: " + ex.what());
    }
    if (!j.is_object()) {
        throw UsageError("config file must hold a JSON object");
    }
    for (const auto& [key, v] : j.items()) {
        try {
            if (key == "method") s.method = v.get<std::string>();
            else if (key == "data-y") s.data_y = v.get<std::string>();
            else if (key == "data-g") s.data_g = v.get<std::string>();
            else if (key == "data") s.data = v.get<std::string>();
            else if (key == "groups") s.groups = v.is_string() ? v.get<std::string>() : v.dump();
            else if (key == "sigma2") s.sigma2 = v.get<double>();
            else if (key == "gamma") s.gamma = v.get<double>();
            else if (key == "grid-lo") s.grid_lo = v.get<double>();
            else if (key == "grid-hi") s.grid_hi = v.get<double>();
            else if (key == "grid-n") s.grid_n = v.get<int>();
            else if (key == "split") s.split = v.get<double>();
            else if (key == "runs") s.runs = v.get<int>();
            else if (key == "seed") s.seed = v.get<std::uint64_t>();
            else if (key == "run") s.run = v.get<int>();
            else if (key == "threads") s.threads = v.get<int>();
            else if (key == "out") s.out = v.get<std::string>();
            else if (key == "experiment") s.experiment = v.get<std::string>();
            else if (key == "estimators") s.estimators = v.get<std::string>();
            else if (key == "q") s.q = v.get<int>();
            else if (key == "train") s.train = v.get<int>();
            else if (key == "horizon") s.horizon = v.get<int>();
            else if (key == "length") s.length = v.get<int>();
            else throw UsageError("unknown config key '" + key + "'");
        } catch (const nlohmann::json::exception&) {
            throw UsageError("config key '" + key + "' has the wrong type");
        }
    }
    if (s.groups.size() > 1 && s.groups.front() == '[') {
        s.groups = s.groups.substr(1, s.groups.size() - 2);
    }
}

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (!tok.empty()) {
            out.push_back(tok);
        }
    }
    return out;
}

void emit(const std::string& text, const std::string& path, std::ostream& out) {
    if (path.empty()) {
        out << text;
        return;
    }
    std::ofstream f(path);
    if (!f) {
        throw UsageError("cannot write " + path);
    }
    f << text;
}

SelectionConfig selection_config(const Settings& s) {
    SelectionConfig c;
    c.split_fraction = s.split;
    c.grid_lo = s.grid_lo;
    c.grid_hi = s.grid_hi;
    c.grid_n = s.grid_n;
    if (s.sigma2 > 0.0) {
        c.sigma2 = s.sigma2;
    }
    c.validate();
    return c;
}

int cmd_fit(const Settings& s, std::ostream& out) {
    if (s.data_y.empty() || s.data_g.empty()) {
        throw UsageError("fit needs --data-y and --data-g");
    }
    const Matrix ym = read_csv(s.data_y);
    const Matrix g = read_csv(s.data_g);
    if (ym.cols() != 1) {
        throw DataError(s.data_y + ": expected a single column, found " + std::to_string(ym.cols()));
    }
    if (ym.rows() != g.rows()) {
        throw DataError("y has " + std::to_string(ym.rows()) + " rows but G has " + std::to_string(g.rows()));
    }
    const Vector y = ym.col(0);
    const Partition part = parse_groups(s.groups.empty() ? "1" : s.groups, g.cols());
    const GroupedDesign design(g, part);
    MethodRunner runner(design, y, s.sigma2 > 0.0 ? std::optional<double>(s.sigma2) : std::nullopt,
                        selection_config(s));

    EstimateResult e;
    if (s.gamma >= 0.0) {
        const double gamma = s.gamma;
        if (s.method == "mkl") {
            if (!(gamma > 0.0)) {
                throw UsageError("mkl requires positive gamma");
            }
            const MklSolution sol = solve_mkl_lambda(y, design, runner.sigma2(), gamma);
            e = mkl_recover_theta(sol.lambda, y, design, runner.sigma2());
            e.diagnostics = sol.diagnostics;
            e.gamma_hat = gamma;
        } else if (s.method == "hgla" || s.method == "hglb" || s.method == "hglc") {
            const KappaEstimate ke = estimate_kappa(y, design, runner.sigma2());
            const Vector start = Vector::Constant(design.p(), ke.kappa);
            const HglSolution sol = solve_hgl_pqn(y, design, runner.sigma2(), gamma, start);
            e = estimate_from_lambda(design, y, sol.lambda, runner.sigma2());
            e.diagnostics = sol.diagnostics;
            e.gamma_hat = gamma;
        } else if (s.method == "glasso" || s.method == "lasso") {
            ConvexFitConfig c;
            c.reg_param = gamma;
            e = s.method == "glasso" ? solve_glasso(y, design, runner.sigma2(), c)
                                     : solve_lasso(y, design.matrix(), runner.sigma2(), c);
            e.theta = BlockVector(e.theta.values(), part);
            e.selected = nonzero_groups(e.theta, 0.0);
        } else {
            throw UsageError("--gamma is not supported for method '" + s.method + "'");
        }
    } else {
        e = runner.fit(s.method);
    }
    emit(estimate_json(e, s.method), s.out, out);
    return e.diagnostics.converged ? kExitOk : kExitNumerical;
}

McConfig mc_config(const Settings& s) {
    McConfig c;
    c.experiment = parse_experiment(s.experiment, &c.noisy_case);
    c.runs = s.runs;
    c.master_seed = s.seed;
    c.estimators = split_list(s.estimators);
    c.threads = s.threads;
    c.validate();
    return c;
}

int cmd_simulate(const Settings& s, std::ostream& out) {
    if (s.out.empty()) {
        throw UsageError("simulate needs --out DIR");
    }
    std::filesystem::create_directories(s.out);
    const std::filesystem::path dir(s.out);
    if (s.experiment == "arx") {
        const Matrix series = simulate_arx(default_arx_system(), s.length, run_seed(s.seed, s.run));
        write_csv((dir / "series.csv").string(), series);
        out << "wrote " << (dir / "series.csv").string() << " (" << series.rows() << " samples, "
            << series.cols() - 1 << " inputs)\n";
        return kExitOk;
    }
    Settings one = s;
    one.runs = std::max(1, s.run + 1);
    const McConfig c = mc_config(one);
    const Problem pr = gen_problem(c, s.run);
    write_csv((dir / "y.csv").string(), pr.y);
    write_csv((dir / "G.csv").string(), pr.design.matrix());
    write_csv((dir / "theta.csv").string(), pr.theta_true.values());
    nlohmann::json meta = {{"experiment", s.experiment},
                           {"seed", s.seed},
                           {"run", s.run},
                           {"groups", pr.design.partition().sizes()},
                           {"sigma2_true", pr.sigma2_true}};
    std::ofstream((dir / "meta.json").string()) << meta.dump(2) << "\n";
    out << "wrote y.csv, G.csv, theta.csv, meta.json to " << s.out << "\n";
    return kExitOk;
}

int cmd_benchmark(const Settings& s, std::ostream& out) {
    if (s.runs < 1) {
        throw UsageError("--runs must be at least 1");
    }
    const McConfig c = mc_config(s);
    const EstimatorRegistry registry;
    for (const auto& name : c.estimators) {
        if (!registry.contains(name)) {
            std::string known;
            for (const auto& n : registry.names()) {
                known += " " + n;
            }
            throw UsageError("unknown estimator '" + name + "'; registry:" + known);
        }
    }
    const McReport rep = run_monte_carlo(c, registry);
    if (!s.out.empty()) {
        emit(report_json(rep), s.out + ".json", out);
        emit(report_csv(rep), s.out + ".csv", out);
    }
    out << experiment_name(c.experiment, c.noisy_case) << ", " << c.runs << " runs, seed " << c.master_seed << "\n";
    out << std::left << std::setw(10) << "method" << std::right << std::setw(12) << "mean err %" << std::setw(12)
        << "median %" << std::setw(12) << "sparsity %" << std::setw(10) << "failed" << "\n";
    out << std::fixed << std::setprecision(2);
    for (const auto& name : c.estimators) {
        const MethodSummary& m = rep.aggregates.at(name);
        out << std::left << std::setw(10) << name << std::right << std::setw(12) << m.mean_error << std::setw(12)
            << m.median_error << std::setw(12) << m.sparsity_index << std::setw(10) << m.failures << "\n";
    }
    out.unsetf(std::ios::floatfield);
    return kExitOk;
}

int cmd_arx(const Settings& s, std::ostream& out) {
    if (s.data.empty()) {
        throw UsageError("arx needs --data");
    }
    if (s.q < 1 || s.horizon < 1) {
        throw UsageError("--q and --horizon must be at least 1");
    }
    const Matrix series = read_csv(s.data);
    if (series.rows() < s.q + 2) {
        throw DataError("series of length " + std::to_string(series.rows()) + " is shorter than q + 2 = " +
                        std::to_string(s.q + 2));
    }
    const Index train = s.train > 0 ? s.train : series.rows() / 3;
    const ArxReport rep = arx_evaluate(series, s.q, train, s.method, s.horizon);
    Matrix table(s.horizon, 2);
    for (Index k = 0; k < s.horizon; ++k) {
        table(k, 0) = static_cast<double>(k + 1);
        table(k, 1) = rep.cod[static_cast<size_t>(k)];
    }
    if (!s.out.empty()) {
        write_csv(s.out, table);
    }
    if (!s.norms_out.empty()) {
        write_csv(s.norms_out, Eigen::Map<const Vector>(rep.block_norms.data(),
                                                        static_cast<Index>(rep.block_norms.size())));
    }
    out << "method " << s.method << ", q " << s.q << ", training samples " << train << "\n";
    for (Index k = 0; k < s.horizon; ++k) {
        out << "COD_" << (k + 1) << " " << rep.cod[static_cast<size_t>(k)] << "\n";
    }
    out << "block norms (output, inputs...):";
    for (double v : rep.block_norms) {
        out << " " << v;
    }
    out << "\n";
    return rep.estimate.diagnostics.converged ? kExitOk : kExitNumerical;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Settings s;
    std::string config_path;
    for (int i = 1; i + 1 < argc; ++i) {
        if (std::string(argv[i]) == "--config") {
            config_path = argv[i + 1];
        }
    }
    try {
        if (!config_path.empty()) {
            apply_config(s, config_path);
        }
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitUsage;
    }
    if (const char* env = std::getenv("SPARSEGRP_THREADS"); env && s.threads == 0) {
        s.threads = std::atoi(env);
    }

    CLI::App app{"Group-sparse regression with marginal-likelihood and convex estimators", "sparsegrp"};
    app.require_subcommand(1);
    std::string ignored_config;
    app.add_option("--config", ignored_config, "JSON file with option defaults");

    auto common = [&](CLI::App* sub) {
        sub->add_option("--method", s.method, "Estimator: hgla hglb hglc mkl glasso lasso adalasso");
        sub->add_option("--seed", s.seed, "Master seed");
        sub->add_option("--threads", s.threads, "Worker threads (default: SPARSEGRP_THREADS or all cores)");
        sub->add_option("--out", s.out, "Output path");
        sub->add_option("--config", ignored_config, "JSON file with option defaults");
        sub->add_option("--split", s.split, "Training share of the rows");
        sub->add_option("--grid-lo", s.grid_lo, "Lowest gamma grid multiplier");
        sub->add_option("--grid-hi", s.grid_hi, "Highest gamma grid multiplier");
        sub->add_option("--grid-n", s.grid_n, "Number of gamma grid points");
    };

    CLI::App* fit = app.add_subcommand("fit", "Fit an estimator to y.csv and G.csv");
    common(fit);
    fit->add_option("--data-y", s.data_y, "Output vector, one column");
    fit->add_option("--data-g", s.data_g, "Regression matrix");
    fit->add_option("--groups", s.groups, "Group sizes: uniform size or comma list");
    fit->add_option("--sigma2", s.sigma2, "Noise variance (default: least-squares estimate)");
    fit->add_option("--gamma", s.gamma, "Fixed regularization instead of cross validation");

    CLI::App* sim = app.add_subcommand("simulate", "Write a synthetic problem");
    common(sim);
    sim->add_option("--experiment", s.experiment, "exp1 exp2 exp2_noisya|b|c ada arx");
    sim->add_option("--run", s.run, "Run index");
    sim->add_option("--length", s.length, "Series length for arx");

    CLI::App* bench = app.add_subcommand("benchmark", "Monte Carlo comparison of estimators");
    common(bench);
    bench->add_option("--experiment", s.experiment, "exp1 exp2 exp2_noisya|b|c ada");
    bench->add_option("--runs", s.runs, "Monte Carlo runs");
    bench->add_option("--estimators", s.estimators, "Comma-separated estimator names");

    CLI::App* arx = app.add_subcommand("arx", "Fit and score an ARX model");
    common(arx);
    arx->add_option("--data", s.data, "Series CSV: output column then inputs");
    arx->add_option("--q", s.q, "Lag order");
    arx->add_option("--train", s.train, "Training prefix length (default: a third of the series)");
    arx->add_option("--horizon", s.horizon, "Largest prediction horizon K");
    arx->add_option("--norms-out", s.norms_out, "CSV for per-channel coefficient norms");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (s.threads > 0) {
            kernels::set_threads(s.threads);
        }
        if (fit->parsed()) {
            return cmd_fit(s, out);
        }
        if (sim->parsed()) {
            return cmd_simulate(s, out);
        }
        if (bench->parsed()) {
            return cmd_benchmark(s, out);
        }
        return cmd_arx(s, out);
    } catch (const UsageError& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const DataError& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << "\n";
        return kExitNumerical;
    }
}

}  // namespace sparsegrp
