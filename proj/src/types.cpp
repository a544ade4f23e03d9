#include "sparsegrp/types.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace sparsegrp {

Partition::Partition(std::vector<Index> sizes) : sizes_(std::move(sizes)) {
    if (sizes_.empty()) {
        throw std::invalid_argument("partition needs at least one group");
    }
    offsets_.resize(sizes_.size() + 1);
    offsets_[0] = 0;
    for (size_t i = 0; i < sizes_.size(); ++i) {
        if (sizes_[i] < 1) {
            throw std::invalid_argument("group sizes must be positive");
        }
        offsets_[i + 1] = offsets_[i] + sizes_[i];
    }
}

Partition Partition::uniform(Index groups, Index k) {
    return Partition(std::vector<Index>(static_cast<size_t>(groups), k));
}

Vector Partition::expand(const Vector& per_group) const {
    if (per_group.size() != groups()) {
        throw DimensionError("per-group vector length differs from number of groups");
    }
    Vector out(total());
    for (Index i = 0; i < groups(); ++i) {
        out.segment(offset(i), size(i)).setConstant(per_group[i]);
    }
    return out;
}

GroupedDesign::GroupedDesign(Matrix g, Partition partition)
    : g_(std::move(g)), partition_(std::move(partition)) {
    if (g_.rows() < 1) {
        throw DimensionError("design needs at least one row");
    }
    if (partition_.total() != g_.cols()) {
        throw DimensionError("group sizes sum to " + std::to_string(partition_.total()) +
                             " but design has " + std::to_string(g_.cols()) + " columns");
    }
}

GroupedDesign::GroupedDesign(Matrix g, std::vector<Index> group_sizes)
    : GroupedDesign(std::move(g), Partition(std::move(group_sizes))) {}

GroupedDesign GroupedDesign::rows(Index begin, Index count) const {
    if (begin < 0 || count < 1 || begin + count > n()) {
        throw DimensionError("row range outside design");
    }
    return GroupedDesign(g_.middleRows(begin, count), partition_);
}

GroupedDesign GroupedDesign::select_groups(const std::vector<Index>& groups) const {
    if (groups.empty()) {
        throw DimensionError("cannot select an empty set of groups");
    }
    std::vector<Index> sizes;
    Index cols = 0;
    for (Index gi : groups) {
        if (gi < 0 || gi >= p()) {
            throw DimensionError("group index out of range");
        }
        sizes.push_back(partition_.size(gi));
        cols += partition_.size(gi);
    }
    Matrix sub(n(), cols);
    Index c = 0;
    for (Index gi : groups) {
        sub.middleCols(c, partition_.size(gi)) = block(gi);
        c += partition_.size(gi);
    }
    return GroupedDesign(std::move(sub), Partition(std::move(sizes)));
}

void HyperState::validate() const {
    if (!(sigma2 > 0.0) || !std::isfinite(sigma2)) {
        throw std::invalid_argument("noise variance must be positive");
    }
    if (!(gamma >= 0.0)) {
        throw std::invalid_argument("gamma must be nonnegative");
    }
    for (Index i = 0; i < lambda.size(); ++i) {
        if (!(lambda[i] >= 0.0) || !std::isfinite(lambda[i])) {
            throw std::invalid_argument("lambda must be finite and nonnegative");
        }
    }
}

void HyperState::validate_for(const GroupedDesign& design) const {
    if (lambda.size() != design.p()) {
        throw DimensionError("lambda has length " + std::to_string(lambda.size()) + ", design has " +
                             std::to_string(design.p()) + " groups");
    }
    validate();
}

BlockVector::BlockVector(Vector values, Partition partition)
    : values_(std::move(values)), partition_(std::move(partition)) {
    if (values_.size() != partition_.total()) {
        throw DimensionError("block vector length differs from partition size");
    }
}

std::vector<Index> nonzero_groups(const BlockVector& theta, double rel_threshold) {
    double scale = 1.0;
    for (Index i = 0; i < theta.groups(); ++i) {
        scale = std::max(scale, theta.block_norm(i));
    }
    std::vector<Index> out;
    for (Index i = 0; i < theta.groups(); ++i) {
        if (theta.block_norm(i) > rel_threshold * scale) {
            out.push_back(i);
        }
    }
    return out;
}

}  // namespace sparsegrp
