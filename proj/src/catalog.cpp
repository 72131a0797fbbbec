#include "transposer/catalog.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace transposer {

ChaosCatalog::ChaosCatalog(int slots, int max_degree, const CatalogLimits& limits)
    : slots_(slots), max_degree_(max_degree) {
    if (slots < 0 || max_degree < 0) {
        throw std::invalid_argument("catalog requires slots >= 0 and degree >= 0");
    }
    if (slots > limits.max_slots) {
        throw std::invalid_argument("catalog slot count " + std::to_string(slots) +
                                    " exceeds configured cap " + std::to_string(limits.max_slots));
    }
    if (max_degree > limits.max_degree) {
        throw std::invalid_argument("catalog degree " + std::to_string(max_degree) +
                                    " exceeds configured cap " + std::to_string(limits.max_degree));
    }
    const std::uint64_t count = basis_count(slots, max_degree);
    if (count > limits.max_dim) {
        throw std::invalid_argument("catalog dimension " + std::to_string(count) +
                                    " exceeds configured cap " + std::to_string(limits.max_dim));
    }

    indices_ = enumerate_indices(slots, max_degree);
    const int dim = static_cast<int>(indices_.size());
    degrees_.resize(dim);
    norms_.resize(dim);
    lookup_.reserve(dim);
    for (int i = 0; i < dim; ++i) {
        degrees_[i] = indices_[i].degree();
        norms_[i] = std::sqrt(indices_[i].factorial());
        lookup_.emplace(indices_[i], i);
    }

    slot_ordinals_.resize(slots + 1);
    for (int i = 0; i < dim; ++i) {
        for (int k = indices_[i].support_end(); k <= slots; ++k) {
            slot_ordinals_[k].push_back(i);
        }
    }
}

int ChaosCatalog::find(const MultiIndex& idx) const {
    const auto it = lookup_.find(idx);
    return it == lookup_.end() ? -1 : it->second;
}

int ChaosCatalog::ordinal(const MultiIndex& idx) const {
    const int i = find(idx);
    if (i < 0) {
        throw std::out_of_range("multi-index " + idx.to_string() + " is not in the order-" +
                                std::to_string(max_degree_) + " basis over " +
                                std::to_string(slots_) + " slots");
    }
    return i;
}

const std::vector<int>& ChaosCatalog::slot_ordinals(int k) const {
    if (k < 0 || k > slots_) throw std::out_of_range("slot index out of range");
    return slot_ordinals_[k];
}

int ChaosCatalog::raised(int ordinal, int slot) const {
    if (degrees_[ordinal] >= max_degree_) return -1;
    return find(indices_[ordinal].raised(slot));
}

int ChaosCatalog::lowered(int ordinal, int slot) const {
    if (indices_[ordinal].order(slot) < 1) return -1;
    return find(indices_[ordinal].lowered(slot));
}

CatalogPtr make_catalog(int slots, int max_degree, const CatalogLimits& limits) {
    return std::make_shared<const ChaosCatalog>(slots, max_degree, limits);
}

}  // namespace transposer
