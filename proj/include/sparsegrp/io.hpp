#pragma once

// Headerless comma-separated matrices and JSON encoding of estimates.

#include "sparsegrp/types.hpp"

#include <string>

namespace sparsegrp {

/// Malformed input; line is 1-based (0 when not tied to a line).
class DataError : public std::runtime_error {
public:
    DataError(const std::string& what, int line = 0);
    int line() const { return line_; }

private:
    int line_;
};

Matrix parse_csv(const std::string& text, const std::string& source = "input");
Matrix read_csv(const std::string& path);
void write_csv(const std::string& path, const Matrix& m);
std::string format_csv(const Matrix& m);

/// "4" (uniform groups of 4 summing to total) or "4,4,2" (explicit sizes).
Partition parse_groups(const std::string& spec, Index total);

/// theta, lambda, selected, gamma_hat, sigma2 and diagnostics as a JSON document.
std::string estimate_json(const EstimateResult& e, const std::string& method);

}  // namespace sparsegrp
