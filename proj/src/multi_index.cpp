#include "transposer/multi_index.hpp"

#include <numeric>
#include <sstream>
#include <stdexcept>

namespace transposer {

MultiIndex::MultiIndex(std::vector<int> entries) : entries_(std::move(entries)) {
    for (int e : entries_) {
        if (e < 0) throw std::invalid_argument("multi-index entries must be nonnegative");
    }
    while (!entries_.empty() && entries_.back() == 0) entries_.pop_back();
}

int MultiIndex::degree() const {
    return std::accumulate(entries_.begin(), entries_.end(), 0);
}

int MultiIndex::order(int slot) const {
    if (slot < 0) throw std::invalid_argument("multi-index slot must be nonnegative");
    return slot < support_end() ? entries_[slot] : 0;
}

MultiIndex MultiIndex::raised(int slot) const {
    std::vector<int> e = entries_;
    if (slot >= static_cast<int>(e.size())) e.resize(slot + 1, 0);
    e[slot] += 1;
    return MultiIndex(std::move(e));
}

MultiIndex MultiIndex::lowered(int slot) const {
    if (order(slot) < 1) throw std::invalid_argument("cannot lower a zero entry");
    std::vector<int> e = entries_;
    e[slot] -= 1;
    return MultiIndex(std::move(e));
}

double MultiIndex::factorial() const {
    double f = 1.0;
    for (int e : entries_) {
        for (int j = 2; j <= e; ++j) f *= j;
    }
    return f;
}

bool MultiIndex::graded_lex_less(const MultiIndex& a, const MultiIndex& b) {
    const int da = a.degree(), db = b.degree();
    if (da != db) return da < db;
    const int n = std::max(a.support_end(), b.support_end());
    for (int j = 0; j < n; ++j) {
        if (a.order(j) != b.order(j)) return a.order(j) < b.order(j);
    }
    return false;
}

std::string MultiIndex::to_string() const {
    if (entries_.empty()) return "0";
    std::ostringstream out;
    for (std::size_t j = 0; j < entries_.size(); ++j) {
        if (j) out << '-';
        out << entries_[j];
    }
    return out.str();
}

MultiIndex MultiIndex::parse(const std::string& text) {
    if (text.empty()) throw std::invalid_argument("empty multi-index field");
    std::vector<int> entries;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        const std::size_t dash = text.find('-', pos);
        const std::string token = text.substr(pos, dash == std::string::npos ? std::string::npos : dash - pos);
        std::size_t used = 0;
        int value = 0;
        try {
            value = std::stoi(token, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("bad multi-index token '" + token + "'");
        }
        if (used != token.size() || value < 0) {
            throw std::invalid_argument("bad multi-index token '" + token + "'");
        }
        entries.push_back(value);
        if (dash == std::string::npos) break;
        pos = dash + 1;
    }
    return MultiIndex(std::move(entries));
}

std::size_t MultiIndex::hash() const {
    std::size_t h = 1469598103934665603ULL;
    for (int e : entries_) {
        h ^= static_cast<std::size_t>(e) + 0x9E3779B9;
        h *= 1099511628211ULL;
    }
    return h;
}

namespace {

void enumerate_rec(int slots, int remaining, std::vector<int>& current,
                   std::vector<MultiIndex>& out) {
    if (static_cast<int>(current.size()) == slots) {
        out.emplace_back(current);
        return;
    }
    for (int d = 0; d <= remaining; ++d) {
        current.push_back(d);
        enumerate_rec(slots, remaining - d, current, out);
        current.pop_back();
    }
}

}  // namespace

std::vector<MultiIndex> enumerate_indices(int slots, int max_degree) {
    if (slots < 0 || max_degree < 0) {
        throw std::invalid_argument("enumerate_indices requires slots >= 0 and degree >= 0");
    }
    std::vector<MultiIndex> out;
    out.reserve(static_cast<std::size_t>(basis_count(slots, max_degree)));
    for (int total = 0; total <= max_degree; ++total) {
        // Within a fixed degree the recursion emits entries in lex order.
        std::vector<MultiIndex> level;
        std::vector<int> current;
        enumerate_rec(slots, total, current, level);
        for (auto& idx : level) {
            if (idx.degree() == total) out.push_back(std::move(idx));
        }
    }
    return out;
}

std::uint64_t basis_count(int slots, int max_degree) {
    if (slots < 0 || max_degree < 0) {
        throw std::invalid_argument("basis_count requires slots >= 0 and degree >= 0");
    }
    // C(slots + max_degree, max_degree) with overflow detection.
    std::uint64_t result = 1;
    for (int j = 1; j <= max_degree; ++j) {
        const std::uint64_t num = static_cast<std::uint64_t>(slots) + j;
        if (result > UINT64_MAX / num) throw std::overflow_error("basis count overflows 64 bits");
        result = result * num / j;
    }
    return result;
}

}  // namespace transposer
