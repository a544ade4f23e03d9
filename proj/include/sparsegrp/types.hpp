#pragma once

#include <Eigen/Dense>

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sparsegrp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index = Eigen::Index;

/// Raised when the inputs of an operation have inconsistent shapes.
class DimensionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Raised when a factorization or decomposition breaks down.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/**
 * Split of m coefficients into p consecutive groups of sizes k_1..k_p.
 */
class Partition {
public:
    Partition() = default;
    explicit Partition(std::vector<Index> sizes);

    /// p groups of equal size k.
    static Partition uniform(Index groups, Index k);

    Index groups() const { return static_cast<Index>(sizes_.size()); }
    Index total() const { return offsets_.empty() ? 0 : offsets_.back(); }
    Index size(Index i) const { return sizes_[static_cast<size_t>(i)]; }
    Index offset(Index i) const { return offsets_[static_cast<size_t>(i)]; }
    const std::vector<Index>& sizes() const { return sizes_; }

    /// Expands a per-group vector to a per-coefficient vector.
    Vector expand(const Vector& per_group) const;

    bool operator==(const Partition&) const = default;

private:
    std::vector<Index> sizes_;
    std::vector<Index> offsets_;  // length p+1
};

/**
 * Regression matrix G (n x m) together with the column partition into
 * blocks G^(i).
 */
class GroupedDesign {
public:
    GroupedDesign() = default;
    GroupedDesign(Matrix g, Partition partition);
    GroupedDesign(Matrix g, std::vector<Index> group_sizes);

    Index n() const { return g_.rows(); }
    Index m() const { return g_.cols(); }
    Index p() const { return partition_.groups(); }

    const Matrix& matrix() const { return g_; }
    const Partition& partition() const { return partition_; }

    auto block(Index i) const { return g_.middleCols(partition_.offset(i), partition_.size(i)); }

    /// Contiguous row range [begin, begin+count), same partition.
    GroupedDesign rows(Index begin, Index count) const;

    /// Keeps only the listed groups, in the given order.
    GroupedDesign select_groups(const std::vector<Index>& groups) const;

private:
    Matrix g_;
    Partition partition_;
};

/// Per-group prior scales, exponential hyperprior rate and noise variance.
struct HyperState {
    Vector lambda;
    double gamma = 0.0;
    double sigma2 = 1.0;

    /// Throws std::invalid_argument unless lambda >= 0, gamma >= 0, sigma2 > 0.
    void validate() const;
    void validate_for(const GroupedDesign& design) const;
};

/// Coefficient vector with the block structure of its design.
class BlockVector {
public:
    BlockVector() = default;
    BlockVector(Vector values, Partition partition);

    const Vector& values() const { return values_; }
    Vector& values() { return values_; }
    const Partition& partition() const { return partition_; }

    Index groups() const { return partition_.groups(); }
    auto block(Index i) const { return values_.segment(partition_.offset(i), partition_.size(i)); }
    auto block(Index i) { return values_.segment(partition_.offset(i), partition_.size(i)); }
    double block_norm(Index i) const { return block(i).norm(); }
    double block_norm2(Index i) const { return block(i).squaredNorm(); }

private:
    Vector values_;
    Partition partition_;
};

struct SolverDiagnostics {
    double objective = 0.0;
    int iterations = 0;
    bool converged = true;
    double kkt_residual = 0.0;
    std::string status;
    std::vector<double> objective_trace;
};

/// Output of every estimator.
struct EstimateResult {
    BlockVector theta;
    std::optional<Vector> lambda;
    std::vector<Index> selected;
    std::optional<double> gamma_hat;
    std::optional<double> sigma2;
    SolverDiagnostics diagnostics;
};

/// Groups whose coefficient block is not (numerically) zero.
std::vector<Index> nonzero_groups(const BlockVector& theta, double rel_threshold = 1e-10);

}  // namespace sparsegrp
