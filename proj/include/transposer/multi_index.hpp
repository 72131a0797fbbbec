#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace transposer {

// A Hermite multi-index: entry j is the polynomial degree attached to the
// j-th normalized Brownian increment (0-based). Stored trimmed, i.e. without
// trailing zeros, so equal indices have equal representations regardless of
// how many slots the ambient space carries.
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> entries);

    int degree() const;

    // Degree at increment slot j (0 beyond the stored support).
    int order(int slot) const;

    // Smallest k such that the index is measurable w.r.t. the first k
    // increments; equivalently one past the last nonzero entry.
    int support_end() const { return static_cast<int>(entries_.size()); }

    const std::vector<int>& entries() const { return entries_; }

    MultiIndex raised(int slot) const;
    MultiIndex lowered(int slot) const;  // requires order(slot) >= 1

    // prod(alpha_j!) as a double; exact for the degrees this library allows.
    double factorial() const;

    bool operator==(const MultiIndex& other) const { return entries_ == other.entries_; }

    // Degree first, then lexicographic on the entries.
    static bool graded_lex_less(const MultiIndex& a, const MultiIndex& b);

    // Dash-joined entries; the empty index prints as "0".
    std::string to_string() const;
    static MultiIndex parse(const std::string& text);

    std::size_t hash() const;

private:
    std::vector<int> entries_;
};

// All indices over `slots` increments with degree <= max_degree, in graded
// lexicographic order. Size is C(slots + max_degree, max_degree).
std::vector<MultiIndex> enumerate_indices(int slots, int max_degree);

// C(k + M, M) as a checked 64-bit count.
std::uint64_t basis_count(int slots, int max_degree);

}  // namespace transposer
