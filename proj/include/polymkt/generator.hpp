#pragma once

#include <Eigen/Dense>
#include <map>
#include <memory>

#include "polymkt/model_params.hpp"
#include "polymkt/simplex_poly.hpp"

namespace polymkt {

/// Action of the diffusion generator
///   Gf = sum_i b_i D_i f + 1/2 sum_ij c_ij D_ij f
/// on the degree-truncated monomial basis in reduced simplex coordinates.
/// Column j holds the reduced coefficients of G applied to basis monomial j,
/// so coefficient vectors evolve as v(t) = exp(tA) v(0). The constant column
/// is zero and every column of a degree-m monomial stays within degree m.
class GeneratorMatrix {
public:
    GeneratorMatrix(int dim, int max_degree, Eigen::MatrixXd A);

    int dim() const { return d_; }
    int max_degree() const { return k_; }
    int size() const { return static_cast<int>(A_.rows()); }
    const Eigen::MatrixXd& matrix() const { return A_; }
    const Basis& basis() const { return *basis_; }

private:
    int d_;
    int k_;
    std::shared_ptr<const Basis> basis_;
    Eigen::MatrixXd A_;
};

/// Builds the generator of the simplex diffusion with the given parameters,
/// truncated at max_degree. Drift and covariance are rewritten in the d-1
/// reduced coordinates (mu_d = 1 - sum mu_i) and applied symbolically, so the
/// matrix entries are exact up to rounding. Basis size is capped at 20000.
GeneratorMatrix build_generator(const AdmissibleSimplexParameterSet& params, int max_degree);

/// exp(t A) applied to a coefficient vector, t >= 0.
Eigen::VectorXd expm_apply(const GeneratorMatrix& A, double t, const Eigen::VectorXd& coeffs);

/// E[p(mu_t) | mu_0], computed as evaluate(exp(tA) coeffs(p), mu_0).
/// The polynomial degree must not exceed the generator truncation.
double conditional_moment(const GeneratorMatrix& A, const SimplexPolynomial& p, double t,
                          const Eigen::VectorXd& mu0);

/// Convenience overload building the generator at degree(p).
double conditional_moment(const AdmissibleSimplexParameterSet& params, const SimplexPolynomial& p,
                          double t, const Eigen::VectorXd& mu0);

/// Time-indexed family p(t, .) = exp((tau - t) A0) p under the driftless
/// generator A0 built from (beta = 0, B = 0, gamma). p(tau, .) = p, and the
/// family is the martingale conditional expectation of p at the horizon.
/// Coefficient vectors are cached per distinct time.
class DriftlessPolynomialPrice {
public:
    DriftlessPolynomialPrice(const AdmissibleSimplexParameterSet& params, SimplexPolynomial payoff,
                             double horizon);

    double horizon() const { return horizon_; }
    const GeneratorMatrix& generator() const { return *gen_; }

    /// Coefficient vector of p(t, .), 0 <= t <= horizon.
    const Eigen::VectorXd& coefficients_at(double t) const;
    double value(double t, const Eigen::VectorXd& mu) const;
    Eigen::VectorXd gradient_full(double t, const Eigen::VectorXd& mu) const;

private:
    std::shared_ptr<GeneratorMatrix> gen_;
    SimplexPolynomial payoff_;
    double horizon_;
    mutable std::map<double, Eigen::VectorXd> cache_;
};

}  // namespace polymkt
