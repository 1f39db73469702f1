#pragma once

#include <compare>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace cubsde {

/// A word over {0,...,r}. Letter 0 stands for dt, letter k >= 1 for the k-th
/// Brownian component. The empty word is the identity for concatenation.
class MultiIndex {
public:
    MultiIndex() = default;
    explicit MultiIndex(std::vector<int> letters);
    MultiIndex(std::initializer_list<int> letters);

    std::span<const int> letters() const { return letters_; }
    std::size_t length() const { return letters_.size(); }
    bool empty() const { return letters_.empty(); }
    int operator[](std::size_t i) const { return letters_[i]; }

    int zero_count() const;
    /// Length plus number of zero letters: time integrals weigh twice.
    int degree() const;
    int max_letter() const;

    /// Word with its first letter removed. Requires a non-empty word.
    MultiIndex drop_first() const;

    std::string to_string() const;

    /// Ordered by (length, letters).
    friend std::strong_ordering operator<=>(const MultiIndex& a, const MultiIndex& b);
    friend bool operator==(const MultiIndex& a, const MultiIndex& b) = default;

private:
    std::vector<int> letters_;
};

int degree(const MultiIndex& beta);

MultiIndex concat(const MultiIndex& a, const MultiIndex& b);

/// All words over {0,...,r} with degree <= m, ordered by (length, letters).
std::vector<MultiIndex> enumerate_degree_set(int m, int r);

/// Words of degree exactly m.
std::vector<MultiIndex> enumerate_degree_level(int m, int r);

/// Frontier of the degree set: words outside A_m whose tail (first letter
/// dropped) lies in A_m.
std::vector<MultiIndex> degree_frontier(int m, int r);

}  // namespace cubsde
