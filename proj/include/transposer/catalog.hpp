#pragma once

#include "transposer/multi_index.hpp"

#include <memory>
#include <unordered_map>
#include <vector>

namespace transposer {

// Configurable construction caps. The defaults are deliberately small; the
// convergence harness raises max_slots for its fine-partition sweeps.
struct CatalogLimits {
    int max_slots = 64;
    int max_degree = 8;
    std::uint64_t max_dim = 20'000'000;
};

// Enumerates the Hermite multi-index basis over N increment slots up to a
// total degree M, with fast ordinal lookup and per-slot measurable subsets.
// Immutable after construction and safe to share across threads.
class ChaosCatalog {
public:
    ChaosCatalog(int slots, int max_degree, const CatalogLimits& limits = {});

    int slots() const { return slots_; }
    int max_degree() const { return max_degree_; }
    int dim() const { return static_cast<int>(indices_.size()); }

    const MultiIndex& index(int ordinal) const { return indices_[ordinal]; }
    int degree(int ordinal) const { return degrees_[ordinal]; }
    double normalization(int ordinal) const { return norms_[ordinal]; }  // sqrt(alpha!)

    // Ordinal of `idx`, or -1 when it is not in the basis.
    int find(const MultiIndex& idx) const;
    // Like find but throws a descriptive error when absent.
    int ordinal(const MultiIndex& idx) const;

    // Ordinals measurable w.r.t. the first k increments (support_end <= k),
    // i.e. the basis of the order-M chaos at grid time t_k. k in [0, slots].
    const std::vector<int>& slot_ordinals(int k) const;
    int slot_dim(int k) const { return static_cast<int>(slot_ordinals(k).size()); }

    // Ordinal of index raised/lowered at `slot`; -1 when the result leaves
    // the basis (degree overflow for raise, zero entry for lower).
    int raised(int ordinal, int slot) const;
    int lowered(int ordinal, int slot) const;

private:
    struct IndexHash {
        std::size_t operator()(const MultiIndex& m) const { return m.hash(); }
    };

    int slots_ = 0;
    int max_degree_ = 0;
    std::vector<MultiIndex> indices_;
    std::vector<int> degrees_;
    std::vector<double> norms_;
    std::vector<std::vector<int>> slot_ordinals_;
    std::unordered_map<MultiIndex, int, IndexHash> lookup_;
};

using CatalogPtr = std::shared_ptr<const ChaosCatalog>;

CatalogPtr make_catalog(int slots, int max_degree, const CatalogLimits& limits = {});

}  // namespace transposer
