#include "sparsegrp/io.hpp"

#include "json.hpp"

#include <cerrno>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace sparsegrp {

DataError::DataError(const std::string& what, int line)
    : std::runtime_error(line > 0 ? what + " (line " + std::to_string(line) + ")" : what), line_(line) {}

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) {
        return "";
    }
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

Matrix parse_csv(const std::string& text, const std::string& source) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    int lineno = 0;
    size_t width = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) {
            continue;
        }
        std::vector<double> row;
        std::stringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) {
            const std::string t = trim(cell);
            if (t.empty()) {
                throw DataError(source + ": empty field", lineno);
            }
            char* end = nullptr;
            errno = 0;
            const double v = std::strtod(t.c_str(), &end);
            if (end != t.c_str() + t.size() || errno == ERANGE || !std::isfinite(v)) {
                throw DataError(source + ": cannot parse '" + t + "' as a number", lineno);
            }
            row.push_back(v);
        }
        if (line.back() == ',') {
            throw DataError(source + ": trailing comma", lineno);
        }
        if (rows.empty()) {
            width = row.size();
        } else if (row.size() != width) {
            throw DataError(source + ": expected " + std::to_string(width) + " fields, found " +
                                std::to_string(row.size()),
                            lineno);
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) {
        throw DataError(source + ": no data");
    }
    Matrix m(static_cast<Index>(rows.size()), static_cast<Index>(width));
    for (size_t i = 0; i < rows.size(); ++i) {
        for (size_t j = 0; j < width; ++j) {
            m(static_cast<Index>(i), static_cast<Index>(j)) = rows[i][j];
        }
    }
    return m;
}

Matrix read_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) {
        throw DataError("cannot open " + path);
    }
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_csv(ss.str(), path);
}

std::string format_csv(const Matrix& m) {
    std::ostringstream os;
    os.precision(17);
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) {
            if (j) {
                os << ',';
            }
            os << m(i, j);
        }
        os << '\n';
    }
    return os.str();
}

void write_csv(const std::string& path, const Matrix& m) {
    std::ofstream f(path);
    if (!f) {
        throw DataError("cannot write " + path);
    }
    f << format_csv(m);
}

Partition parse_groups(const std::string& spec, Index total) {
    std::vector<Index> sizes;
    std::stringstream ss(spec);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const std::string t = trim(tok);
        char* end = nullptr;
        const long v = std::strtol(t.c_str(), &end, 10);
        if (t.empty() || end != t.c_str() + t.size() || v < 1) {
            throw DataError("group sizes must be positive integers, got '" + t + "'");
        }
        sizes.push_back(static_cast<Index>(v));
    }
    if (sizes.empty()) {
        throw DataError("empty group specification");
    }
    if (sizes.size() == 1 && sizes[0] != total) {
        if (total % sizes[0] != 0) {
            throw DataError("uniform group size " + std::to_string(sizes[0]) + " does not divide " +
                            std::to_string(total) + " columns");
        }
        return Partition::uniform(total / sizes[0], sizes[0]);
    }
    Partition p(sizes);
    if (p.total() != total) {
        throw DataError("group sizes sum to " + std::to_string(p.total()) + " but design has " +
                        std::to_string(total) + " columns");
    }
    return p;
}

std::string estimate_json(const EstimateResult& e, const std::string& method) {
    nlohmann::json j;
    j["method"] = method;
    j["theta"] = std::vector<double>(e.theta.values().data(), e.theta.values().data() + e.theta.values().size());
    std::vector<double> norms;
    for (Index i = 0; i < e.theta.groups(); ++i) {
        norms.push_back(e.theta.block_norm(i));
    }
    j["block_norms"] = norms;
    if (e.lambda) {
        j["lambda"] = std::vector<double>(e.lambda->data(), e.lambda->data() + e.lambda->size());
    } else {
        j["lambda"] = nullptr;
    }
    j["selected"] = e.selected;
    j["gamma_hat"] = e.gamma_hat ? nlohmann::json(*e.gamma_hat) : nlohmann::json(nullptr);
    j["sigma2"] = e.sigma2 ? nlohmann::json(*e.sigma2) : nlohmann::json(nullptr);
    const SolverDiagnostics& d = e.diagnostics;
    j["diagnostics"] = {{"objective", d.objective},
                        {"iterations", d.iterations},
                        {"converged", d.converged},
                        {"kkt_residual", d.kkt_residual},
                        {"status", d.status}};
    return j.dump(2) + "\n";
}

}  // namespace sparsegrp
