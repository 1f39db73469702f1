#include "cubsde/multi_index.hpp"

#include "cubsde/errors.hpp"

#include <algorithm>

namespace cubsde {

MultiIndex::MultiIndex(std::vector<int> letters) : letters_(std::move(letters)) {
    for (int e : letters_) {
        if (e < 0) throw InvalidArgument("MultiIndex: negative letter");
    }
}

MultiIndex::MultiIndex(std::initializer_list<int> letters)
    : MultiIndex(std::vector<int>(letters)) {}

int MultiIndex::zero_count() const {
    return static_cast<int>(std::count(letters_.begin(), letters_.end(), 0));
}

int MultiIndex::degree() const { return static_cast<int>(letters_.size()) + zero_count(); }

int MultiIndex::max_letter() const {
    return letters_.empty() ? 0 : *std::max_element(letters_.begin(), letters_.end());
}

MultiIndex MultiIndex::drop_first() const {
    if (letters_.empty()) throw InvalidArgument("MultiIndex::drop_first on empty word");
    return MultiIndex(std::vector<int>(letters_.begin() + 1, letters_.end()));
}

std::string MultiIndex::to_string() const {
    if (letters_.empty()) return "()";
    std::string s = "(";
    for (std::size_t i = 0; i < letters_.size(); ++i) {
        if (i) s += ',';
        s += std::to_string(letters_[i]);
    }
    return s + ")";
}

std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b) {
    if (auto c = a.letters_.size() <=> b.letters_.size(); c != 0) return c;
    return std::lexicographical_compare_three_way(a.letters_.begin(), a.letters_.end(),
                                                  b.letters_.begin(), b.letters_.end());
}

int degree(const MultiIndex& beta) { return beta.degree(); }

MultiIndex concat(const MultiIndex& a, const MultiIndex& b) {
    std::vector<int> out(a.letters().begin(), a.letters().end());
    out.insert(out.end(), b.letters().begin(), b.letters().end());
    return MultiIndex(std::move(out));
}

namespace {

void extend(std::vector<int>& prefix, int budget, int r, std::vector<MultiIndex>& out) {
    out.emplace_back(prefix);
    for (int e = 0; e <= r; ++e) {
        const int cost = (e == 0) ? 2 : 1;
        if (cost > budget) continue;
        prefix.push_back(e);
        extend(prefix, budget - cost, r, out);
        prefix.pop_back();
    }
}

}  // namespace

std::vector<MultiIndex> enumerate_degree_set(int m, int r) {
    if (m < 0) throw InvalidArgument("enumerate_degree_set: m must be >= 0");
    if (r < 1) throw InvalidArgument("enumerate_degree_set: r must be >= 1");
    std::vector<MultiIndex> out;
    std::vector<int> prefix;
    extend(prefix, m, r, out);
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<MultiIndex> enumerate_degree_level(int m, int r) {
    auto all = enumerate_degree_set(m, r);
    std::erase_if(all, [m](const MultiIndex& b) { return b.degree() != m; });
    return all;
}

std::vector<MultiIndex> degree_frontier(int m, int r) {
    std::vector<MultiIndex> out;
    for (const auto& tail : enumerate_degree_set(m, r)) {
        for (int e = 0; e <= r; ++e) {
            auto beta = concat(MultiIndex{e}, tail);
            if (beta.degree() > m) out.push_back(std::move(beta));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace cubsde
