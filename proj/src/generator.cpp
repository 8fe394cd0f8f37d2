#include "polymkt/generator.hpp"

#include <cmath>
#include <mutex>
#include <stdexcept>

#include "polymkt/expm.hpp"

namespace polymkt {

namespace {

constexpr std::int64_t kMaxGeneratorSize = 20000;  // desk-scale guardrail

struct Term {
    std::vector<int> exps;  // exponent offsets in reduced coordinates
    double coef;
};

}  // namespace

GeneratorMatrix::GeneratorMatrix(int dim, int max_degree, Eigen::MatrixXd A)
    : d_(dim), k_(max_degree), basis_(shared_basis(dim, max_degree)), A_(std::move(A)) {
    if (A_.rows() != basis_->size() || A_.cols() != basis_->size())
        throw std::invalid_argument("GeneratorMatrix: matrix size does not match basis");
}

GeneratorMatrix build_generator(const AdmissibleSimplexParameterSet& params, int max_degree) {
    if (max_degree < 0) throw std::invalid_argument("build_generator: max_degree must be >= 0");
    const int d = params.dim();
    const int n = d - 1;
    if (Basis::basis_size(d, max_degree) > kMaxGeneratorSize)
        throw std::invalid_argument("build_generator: basis size exceeds the 20000 cap");
    const auto basis = shared_basis(d, max_degree);
    const int N = basis->size();

    // Reduced drift: b_i(x) = (beta_i + B_id) + sum_j (B_ij - B_id) x_j.
    std::vector<std::vector<Term>> b_terms(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        auto& terms = b_terms[static_cast<std::size_t>(i)];
        const double c0 = params.beta()[i] + params.B()(i, n);
        if (c0 != 0.0) terms.push_back({std::vector<int>(static_cast<std::size_t>(n), 0), c0});
        for (int j = 0; j < n; ++j) {
            const double cj = params.B()(i, j) - params.B()(i, n);
            if (cj == 0.0) continue;
            std::vector<int> e(static_cast<std::size_t>(n), 0);
            e[static_cast<std::size_t>(j)] = 1;
            terms.push_back({std::move(e), cj});
        }
    }

    // Reduced covariance entries as polynomials in x:
    //   c_ij = -gamma_ij x_i x_j                        (i != j)
    //   c_ii = gamma_id x_i - gamma_id x_i^2 + sum_{j != i} (gamma_ij - gamma_id) x_i x_j.
    auto c_terms = [&](int i, int j) {
        std::vector<Term> terms;
        if (i != j) {
            if (params.gamma()(i, j) != 0.0) {
                std::vector<int> e(static_cast<std::size_t>(n), 0);
                e[static_cast<std::size_t>(i)] += 1;
                e[static_cast<std::size_t>(j)] += 1;
                terms.push_back({std::move(e), -params.gamma()(i, j)});
            }
            return terms;
        }
        const double gid = params.gamma()(i, n);
        if (gid != 0.0) {
            std::vector<int> e1(static_cast<std::size_t>(n), 0);
            e1[static_cast<std::size_t>(i)] = 1;
            terms.push_back({std::move(e1), gid});
            std::vector<int> e2(static_cast<std::size_t>(n), 0);
            e2[static_cast<std::size_t>(i)] = 2;
            terms.push_back({std::move(e2), -gid});
        }
        for (int l = 0; l < n; ++l) {
            if (l == i) continue;
            const double c = params.gamma()(i, l) - gid;
            if (c == 0.0) continue;
            std::vector<int> e(static_cast<std::size_t>(n), 0);
            e[static_cast<std::size_t>(i)] += 1;
            e[static_cast<std::size_t>(l)] += 1;
            terms.push_back({std::move(e), c});
        }
        return terms;
    };
    std::vector<std::vector<std::vector<Term>>> cov(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
        cov[static_cast<std::size_t>(i)].resize(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = c_terms(i, j);
    }

    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(N, N);
    std::vector<int> work(static_cast<std::size_t>(n));
    auto deposit = [&](int col, const std::vector<int>& base, const std::vector<Term>& terms,
                       double scale) {
        for (const Term& t : terms) {
            for (int l = 0; l < n; ++l)
                work[static_cast<std::size_t>(l)] =
                    base[static_cast<std::size_t>(l)] + t.exps[static_cast<std::size_t>(l)];
            A(basis->index_of(work), col) += scale * t.coef;
        }
    };

    std::vector<int> base(static_cast<std::size_t>(n));
    for (int col = 0; col < N; ++col) {
        const auto& alpha = basis->at(col).exponents;
        // First-order part: sum_i b_i D_i.
        for (int i = 0; i < n; ++i) {
            const int ai = alpha[static_cast<std::size_t>(i)];
            if (ai == 0) continue;
            base.assign(alpha.begin(), alpha.end());
            base[static_cast<std::size_t>(i)] -= 1;
            deposit(col, base, b_terms[static_cast<std::size_t>(i)], ai);
        }
        // Second-order part: 1/2 sum_ij c_ij D_ij.
        for (int i = 0; i < n; ++i) {
            const int ai = alpha[static_cast<std::size_t>(i)];
            if (ai >= 2) {
                base.assign(alpha.begin(), alpha.end());
                base[static_cast<std::size_t>(i)] -= 2;
                deposit(col, base, cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(i)],
                        0.5 * ai * (ai - 1));
            }
            for (int j = i + 1; j < n; ++j) {
                const int aj = alpha[static_cast<std::size_t>(j)];
                if (ai == 0 || aj == 0) continue;
                base.assign(alpha.begin(), alpha.end());
                base[static_cast<std::size_t>(i)] -= 1;
                base[static_cast<std::size_t>(j)] -= 1;
                deposit(col, base, cov[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)],
                        static_cast<double>(ai) * aj);
            }
        }
    }

    return GeneratorMatrix(d, max_degree, std::move(A));
}

Eigen::VectorXd expm_apply(const GeneratorMatrix& A, double t, const Eigen::VectorXd& coeffs) {
    if (!(t >= 0.0)) throw std::invalid_argument("expm_apply: t must be >= 0");
    if (coeffs.size() != A.size()) throw std::invalid_argument("expm_apply: coefficient length mismatch");
    if (t == 0.0) return coeffs;
    Eigen::VectorXd out = expm(t * A.matrix()) * coeffs;
    if (!out.allFinite()) throw std::runtime_error("expm_apply: non-finite result");
    return out;
}

namespace {

Eigen::VectorXd padded_coeffs(const GeneratorMatrix& A, const SimplexPolynomial& p) {
    if (p.dim() != A.dim()) throw std::invalid_argument("conditional_moment: dimension mismatch");
    if (p.degree() > A.max_degree())
        throw std::invalid_argument("conditional_moment: polynomial degree exceeds generator truncation");
    Eigen::VectorXd c = Eigen::VectorXd::Zero(A.size());
    const int m = std::min<int>(static_cast<int>(p.coeffs().size()), A.size());
    c.head(m) = p.coeffs().head(m);
    return c;
}

}  // namespace

double conditional_moment(const GeneratorMatrix& A, const SimplexPolynomial& p, double t,
                          const Eigen::VectorXd& mu0) {
    require_simplex_point(mu0, A.dim());
    const Eigen::VectorXd v = expm_apply(A, t, padded_coeffs(A, p));
    return SimplexPolynomial(A.dim(), A.max_degree(), v).evaluate_reduced(mu0.head(A.dim() - 1));
}

double conditional_moment(const AdmissibleSimplexParameterSet& params, const SimplexPolynomial& p,
                          double t, const Eigen::VectorXd& mu0) {
    return conditional_moment(build_generator(params, p.degree()), p, t, mu0);
}

DriftlessPolynomialPrice::DriftlessPolynomialPrice(const AdmissibleSimplexParameterSet& params,
                                                   SimplexPolynomial payoff, double horizon)
    : payoff_(std::move(payoff)), horizon_(horizon) {
    if (!(horizon > 0.0)) throw std::invalid_argument("DriftlessPolynomialPrice: horizon must be > 0");
    const int d = params.dim();
    if (payoff_.dim() != d)
        throw std::invalid_argument("DriftlessPolynomialPrice: payoff dimension mismatch");
    AdmissibleSimplexParameterSet driftless = AdmissibleSimplexParameterSet::validated(
        Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d), params.gamma());
    gen_ = std::make_shared<GeneratorMatrix>(build_generator(driftless, payoff_.degree()));
}

const Eigen::VectorXd& DriftlessPolynomialPrice::coefficients_at(double t) const {
    if (t < 0.0 || t > horizon_ * (1.0 + 1e-12))
        throw std::invalid_argument("DriftlessPolynomialPrice: time outside [0, horizon]");
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache_.find(t);
    if (it == cache_.end()) {
        Eigen::VectorXd c = Eigen::VectorXd::Zero(gen_->size());
        c.head(payoff_.coeffs().size()) = payoff_.coeffs();
        it = cache_.emplace(t, expm_apply(*gen_, std::max(0.0, horizon_ - t), c)).first;
    }
    return it->second;
}

double DriftlessPolynomialPrice::value(double t, const Eigen::VectorXd& mu) const {
    require_simplex_point(mu, gen_->dim());
    return SimplexPolynomial(gen_->dim(), gen_->max_degree(), coefficients_at(t))
        .evaluate_reduced(mu.head(gen_->dim() - 1));
}

Eigen::VectorXd DriftlessPolynomialPrice::gradient_full(double t, const Eigen::VectorXd& mu) const {
    return SimplexPolynomial(gen_->dim(), gen_->max_degree(), coefficients_at(t)).gradient_full(mu);
}

}  // namespace polymkt
