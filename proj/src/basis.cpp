#include "polymkt/basis.hpp"

#include <limits>
#include <stdexcept>

namespace polymkt {

namespace {

constexpr std::int64_t kSaturate = std::numeric_limits<std::int64_t>::max() / 4;

// Appends, in lexicographically descending order, all exponent vectors of the
// given exact degree over vars coordinates starting at position pos.
void enumerate_degree(int vars, int pos, int degree, std::vector<int>& scratch,
                      std::vector<MultiIndex>& out) {
    if (pos == vars - 1) {
        scratch[static_cast<std::size_t>(pos)] = degree;
        out.push_back(MultiIndex{scratch});
        return;
    }
    for (int e = degree; e >= 0; --e) {
        scratch[static_cast<std::size_t>(pos)] = e;
        enumerate_degree(vars, pos + 1, degree - e, scratch, out);
    }
}

}  // namespace

std::int64_t binomial(int n, int r) {
    if (r < 0 || r > n) return 0;
    r = std::min(r, n - r);
    std::int64_t acc = 1;
    for (int i = 1; i <= r; ++i) {
        acc = acc * (n - r + i) / i;  // exact: product of i consecutive integers is divisible by i!
        if (acc > kSaturate) return kSaturate;
    }
    return acc;
}

std::int64_t Basis::basis_size(int dim, int max_degree) {
    return binomial(dim - 1 + max_degree, max_degree);
}

Basis::Basis(int dim, int max_degree) : d_(dim), k_(max_degree) {
    if (dim < 2) throw std::invalid_argument("Basis: dimension must be >= 2");
    if (max_degree < 0) throw std::invalid_argument("Basis: max_degree must be >= 0");
    const std::int64_t n = basis_size(dim, max_degree);
    if (n >= kSaturate) throw std::invalid_argument("Basis: size overflow");
    list_.reserve(static_cast<std::size_t>(n));
    std::vector<int> scratch(static_cast<std::size_t>(dim - 1), 0);
    for (int m = 0; m <= max_degree; ++m) enumerate_degree(dim - 1, 0, m, scratch, list_);
}

int Basis::degree_offset(int degree) const {
    // Count of multi-indices of degree < `degree` in d-1 variables.
    return static_cast<int>(binomial(vars() + degree - 1, vars()));
}

int Basis::index_of(std::span<const int> exponents) const {
    if (static_cast<int>(exponents.size()) != vars())
        throw std::invalid_argument("Basis::index_of: wrong number of exponents");
    int m = 0;
    for (int e : exponents) {
        if (e < 0) throw std::invalid_argument("Basis::index_of: negative exponent");
        m += e;
    }
    if (m > k_) throw std::invalid_argument("Basis::index_of: degree exceeds basis truncation");
    // Rank within the block of degree m, lexicographically descending.
    std::int64_t rank = 0;
    int rem = m;
    int n = vars();
    for (int pos = 0; pos < n - 1; ++pos) {
        const int e = exponents[static_cast<std::size_t>(pos)];
        // Tuples whose coordinate at pos exceeds e (they precede ours).
        rank += binomial(rem - e + n - pos - 2, n - pos - 1);
        rem -= e;
    }
    return degree_offset(m) + static_cast<int>(rank);
}

}  // namespace polymkt
