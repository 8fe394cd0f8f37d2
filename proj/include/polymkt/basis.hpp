#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace polymkt {

/// Exponent vector of a monomial in the d-1 reduced simplex coordinates.
struct MultiIndex {
    std::vector<int> exponents;

    int degree() const {
        int s = 0;
        for (int e : exponents) s += e;
        return s;
    }
    bool operator==(const MultiIndex&) const = default;
};

/// Monomial basis of polynomials of degree <= k in d-1 variables,
/// enumerated in graded lexicographic order: ascending total degree,
/// ties broken by descending lexicographic comparison of exponents
/// (so for d=3, k=1 the order is (0,0), (1,0), (0,1)).
class Basis {
public:
    Basis(int dim, int max_degree);

    int dim() const { return d_; }
    int vars() const { return d_ - 1; }
    int max_degree() const { return k_; }
    int size() const { return static_cast<int>(list_.size()); }

    const MultiIndex& at(int idx) const { return list_[static_cast<std::size_t>(idx)]; }

    /// Combinatorial rank of an exponent vector within this enumeration. O(d).
    int index_of(std::span<const int> exponents) const;
    int index_of(const MultiIndex& mi) const { return index_of(std::span<const int>(mi.exponents)); }

    /// Number of basis elements of degree <= max_degree in dim-1 variables,
    /// i.e. binomial(dim-1+max_degree, max_degree). Saturates instead of
    /// overflowing so callers can compare against a cap.
    static std::int64_t basis_size(int dim, int max_degree);

    /// Index of the first basis element of the given degree.
    int degree_offset(int degree) const;

private:
    int d_;
    int k_;
    std::vector<MultiIndex> list_;
};

/// binomial(n, r) with saturation at ~4.6e18.
std::int64_t binomial(int n, int r);

}  // namespace polymkt
