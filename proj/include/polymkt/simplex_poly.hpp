#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "polymkt/basis.hpp"

namespace polymkt {

/// One monomial of a polynomial written in the full d simplex coordinates.
struct FullTerm {
    std::vector<int> exps;  // length d
    double coef = 0.0;
};

/// Polynomial on the unit simplex in canonical reduced representation.
///
/// Restrictions of polynomials to the simplex are not unique; eliminating the
/// last coordinate via mu_d = 1 - sum_{i<d} mu_i fixes a unique representation
/// with coefficients indexed by the graded-lex monomial basis in d-1 variables.
class SimplexPolynomial {
public:
    SimplexPolynomial(int dim, int max_degree);
    SimplexPolynomial(int dim, int max_degree, Eigen::VectorXd coeffs);

    static SimplexPolynomial constant(int dim, double value);
    /// The coordinate function mu_i (0-based). For i = d-1 this is 1 - sum x_j.
    static SimplexPolynomial coordinate(int dim, int i);
    /// Basis monomial with the given reduced exponents.
    static SimplexPolynomial monomial(int dim, std::span<const int> exponents, double coef = 1.0);

    int dim() const { return basis_->dim(); }
    int max_degree() const { return basis_->max_degree(); }
    const Eigen::VectorXd& coeffs() const { return coeffs_; }
    const Basis& basis() const { return *basis_; }

    /// Actual degree of the stored coefficients (ignoring trailing zero blocks).
    int degree() const;

    /// Value at a point of the simplex (full d coordinates; validated).
    double evaluate(const Eigen::VectorXd& mu) const;
    /// Value at reduced coordinates x = (mu_1, ..., mu_{d-1}); no validation.
    double evaluate_reduced(const Eigen::VectorXd& x) const;

    /// Gradient of the reduced representative, padded with 0 in the last slot.
    /// Wealth integrals against d(mu) are invariant under adding a constant to
    /// every component, so the representative choice carries no information.
    Eigen::VectorXd gradient_full(const Eigen::VectorXd& mu) const;

    /// Copy re-truncated to the given max degree. Growing pads with zeros;
    /// shrinking requires the dropped blocks to be exactly zero.
    SimplexPolynomial with_max_degree(int max_degree) const;
    /// Copy truncated to the actual degree (trailing zero blocks removed).
    SimplexPolynomial trimmed() const { return with_max_degree(degree()); }

    SimplexPolynomial operator*(double s) const;
    SimplexPolynomial operator-() const { return *this * -1.0; }

private:
    std::shared_ptr<const Basis> basis_;
    Eigen::VectorXd coeffs_;
};

/// Shared basis objects keyed by (dim, max_degree).
std::shared_ptr<const Basis> shared_basis(int dim, int max_degree);

/// Checks mu: length d, nonnegative entries, sum within 1e-12 of 1.
void require_simplex_point(const Eigen::VectorXd& mu, int dim);

SimplexPolynomial add(const SimplexPolynomial& p, const SimplexPolynomial& q);
SimplexPolynomial subtract(const SimplexPolynomial& p, const SimplexPolynomial& q);
SimplexPolynomial multiply(const SimplexPolynomial& p, const SimplexPolynomial& q);
SimplexPolynomial pow(const SimplexPolynomial& p, int n);

/// Canonical reduction of a polynomial given in full d-coordinates: substitutes
/// x_d = 1 - sum_{i<d} x_i. The result agrees with the input everywhere on the
/// simplex and has total degree <= k (substitution preserves the degree bound).
SimplexPolynomial reduce(const std::vector<FullTerm>& terms, int dim, int max_degree);

/// Graded-lex enumeration of all multi-indices of degree <= k in d-1 variables.
std::vector<MultiIndex> basis_enumerate(int dim, int max_degree);

}  // namespace polymkt
