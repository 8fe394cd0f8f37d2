#include "polymkt/simplex_poly.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace polymkt {

namespace {

// Hard guardrail on coefficient-vector length shared with the generator module.
constexpr std::int64_t kMaxBasisSize = 20000;

void require_same_dim(const SimplexPolynomial& p, const SimplexPolynomial& q) {
    if (p.dim() != q.dim())
        throw std::invalid_argument("simplex_poly: dimension mismatch");
}

}  // namespace

std::shared_ptr<const Basis> shared_basis(int dim, int max_degree) {
    static std::mutex mu;
    static std::map<std::pair<int, int>, std::shared_ptr<const Basis>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto& slot = cache[{dim, max_degree}];
    if (!slot) slot = std::make_shared<Basis>(dim, max_degree);
    return slot;
}

void require_simplex_point(const Eigen::VectorXd& mu, int dim) {
    if (mu.size() != dim)
        throw std::invalid_argument("simplex point: dimension mismatch");
    double sum = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        if (!(mu[i] >= 0.0))
            throw std::invalid_argument("simplex point: negative or non-finite entry");
        sum += mu[i];
    }
    if (std::abs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("simplex point: entries do not sum to 1");
}

SimplexPolynomial::SimplexPolynomial(int dim, int max_degree)
    : basis_(shared_basis(dim, max_degree)),
      coeffs_(Eigen::VectorXd::Zero(basis_->size())) {}

SimplexPolynomial::SimplexPolynomial(int dim, int max_degree, Eigen::VectorXd coeffs)
    : basis_(shared_basis(dim, max_degree)), coeffs_(std::move(coeffs)) {
    if (coeffs_.size() != basis_->size())
        throw std::invalid_argument("SimplexPolynomial: coefficient vector has wrong length");
}

SimplexPolynomial SimplexPolynomial::constant(int dim, double value) {
    SimplexPolynomial p(dim, 0);
    p.coeffs_[0] = value;
    return p;
}

SimplexPolynomial SimplexPolynomial::coordinate(int dim, int i) {
    if (i < 0 || i >= dim) throw std::invalid_argument("coordinate: index out of range");
    SimplexPolynomial p(dim, 1);
    if (i < dim - 1) {
        p.coeffs_[1 + i] = 1.0;  // degree-1 block starts at index 1
    } else {
        p.coeffs_[0] = 1.0;
        for (int j = 0; j < dim - 1; ++j) p.coeffs_[1 + j] = -1.0;
    }
    return p;
}

SimplexPolynomial SimplexPolynomial::monomial(int dim, std::span<const int> exponents, double coef) {
    int deg = 0;
    for (int e : exponents) deg += e;
    SimplexPolynomial p(dim, deg);
    p.coeffs_[p.basis_->index_of(exponents)] = coef;
    return p;
}

int SimplexPolynomial::degree() const {
    for (int m = max_degree(); m > 0; --m) {
        const int lo = basis_->degree_offset(m);
        const int hi = basis_->degree_offset(m + 1);
        for (int i = lo; i < hi; ++i)
            if (coeffs_[i] != 0.0) return m;
    }
    return 0;
}

double SimplexPolynomial::evaluate(const Eigen::VectorXd& mu) const {
    require_simplex_point(mu, dim());
    return evaluate_reduced(mu.head(dim() - 1));
}

double SimplexPolynomial::evaluate_reduced(const Eigen::VectorXd& x) const {
    if (x.size() != dim() - 1)
        throw std::invalid_argument("evaluate_reduced: dimension mismatch");
    double acc = 0.0;
    for (int idx = 0; idx < basis_->size(); ++idx) {
        const double c = coeffs_[idx];
        if (c == 0.0) continue;
        double term = c;
        const auto& exps = basis_->at(idx).exponents;
        for (std::size_t j = 0; j < exps.size(); ++j) {
            for (int e = 0; e < exps[j]; ++e) term *= x[static_cast<Eigen::Index>(j)];
        }
        acc += term;
    }
    return acc;
}

Eigen::VectorXd SimplexPolynomial::gradient_full(const Eigen::VectorXd& mu) const {
    require_simplex_point(mu, dim());
    const int n = dim() - 1;
    Eigen::VectorXd g = Eigen::VectorXd::Zero(dim());
    std::vector<int> shifted(static_cast<std::size_t>(n));
    for (int idx = 0; idx < basis_->size(); ++idx) {
        const double c = coeffs_[idx];
        if (c == 0.0) continue;
        const auto& exps = basis_->at(idx).exponents;
        for (int j = 0; j < n; ++j) {
            if (exps[static_cast<std::size_t>(j)] == 0) continue;
            double term = c * exps[static_cast<std::size_t>(j)];
            for (int l = 0; l < n; ++l) {
                int e = exps[static_cast<std::size_t>(l)] - (l == j ? 1 : 0);
                for (int r = 0; r < e; ++r) term *= mu[l];
            }
            g[j] += term;
        }
    }
    return g;
}

SimplexPolynomial SimplexPolynomial::with_max_degree(int max_degree) const {
    if (max_degree < 0) throw std::invalid_argument("with_max_degree: negative degree");
    SimplexPolynomial out(dim(), max_degree);
    const int copy = std::min(static_cast<int>(coeffs_.size()), static_cast<int>(out.coeffs_.size()));
    out.coeffs_.head(copy) = coeffs_.head(copy);
    if (max_degree < this->max_degree()) {
        for (int i = copy; i < coeffs_.size(); ++i)
            if (coeffs_[i] != 0.0)
                throw std::invalid_argument("with_max_degree: nonzero coefficients above requested degree");
    }
    return out;
}

SimplexPolynomial SimplexPolynomial::operator*(double s) const {
    SimplexPolynomial out = *this;
    out.coeffs_ *= s;
    return out;
}

SimplexPolynomial add(const SimplexPolynomial& p, const SimplexPolynomial& q) {
    require_same_dim(p, q);
    const int k = std::max(p.max_degree(), q.max_degree());
    Eigen::VectorXd c = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(Basis::basis_size(p.dim(), k)));
    c.head(p.coeffs().size()) += p.coeffs();
    c.head(q.coeffs().size()) += q.coeffs();
    return SimplexPolynomial(p.dim(), k, std::move(c));
}

SimplexPolynomial subtract(const SimplexPolynomial& p, const SimplexPolynomial& q) {
    return add(p, q * -1.0);
}

SimplexPolynomial multiply(const SimplexPolynomial& p, const SimplexPolynomial& q) {
    require_same_dim(p, q);
    const int kp = p.degree();
    const int kq = q.degree();
    const int k = kp + kq;
    if (Basis::basis_size(p.dim(), k) > kMaxBasisSize)
        throw std::invalid_argument("multiply: product degree exceeds the supported basis cap");
    SimplexPolynomial out(p.dim(), k);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(out.basis().size());
    const int n = p.dim() - 1;
    std::vector<int> sum_exp(static_cast<std::size_t>(n));
    const Basis& bp = p.basis();
    const Basis& bq = q.basis();
    const Basis& bo = out.basis();
    const int np = bp.degree_offset(kp + 1);
    const int nq = bq.degree_offset(kq + 1);
    for (int i = 0; i < np; ++i) {
        const double ci = p.coeffs()[i];
        if (ci == 0.0) continue;
        const auto& ei = bp.at(i).exponents;
        for (int j = 0; j < nq; ++j) {
            const double cj = q.coeffs()[j];
            if (cj == 0.0) continue;
            const auto& ej = bq.at(j).exponents;
            for (int l = 0; l < n; ++l)
                sum_exp[static_cast<std::size_t>(l)] = ei[static_cast<std::size_t>(l)] + ej[static_cast<std::size_t>(l)];
            c[bo.index_of(sum_exp)] += ci * cj;
        }
    }
    return SimplexPolynomial(p.dim(), k, std::move(c));
}

SimplexPolynomial pow(const SimplexPolynomial& p, int n) {
    if (n < 0) throw std::invalid_argument("pow: negative exponent");
    SimplexPolynomial acc = SimplexPolynomial::constant(p.dim(), 1.0);
    for (int i = 0; i < n; ++i) acc = multiply(acc, p);
    return acc;
}

SimplexPolynomial reduce(const std::vector<FullTerm>& terms, int dim, int max_degree) {
    if (dim < 2) throw std::invalid_argument("reduce: dimension must be >= 2");
    SimplexPolynomial acc(dim, max_degree);
    // 1 - sum of reduced coordinates, i.e. the eliminated coordinate mu_d.
    const SimplexPolynomial last = SimplexPolynomial::coordinate(dim, dim - 1);
    for (const auto& term : terms) {
        if (static_cast<int>(term.exps.size()) != dim)
            throw std::invalid_argument("reduce: term has wrong number of exponents");
        int total = 0;
        for (int e : term.exps) {
            if (e < 0) throw std::invalid_argument("reduce: negative exponent");
            total += e;
        }
        if (total > max_degree)
            throw std::invalid_argument("reduce: term degree exceeds max_degree");
        SimplexPolynomial mono =
            SimplexPolynomial::monomial(dim, std::span<const int>(term.exps.data(), static_cast<std::size_t>(dim - 1)), term.coef);
        SimplexPolynomial reduced = multiply(mono, pow(last, term.exps[static_cast<std::size_t>(dim - 1)]));
        acc = add(acc, reduced);
    }
    // Substitution preserves the total degree bound.
    if (acc.degree() > max_degree)
        throw std::logic_error("reduce: degree overflow after substitution");
    return acc.with_max_degree(max_degree);
}

std::vector<MultiIndex> basis_enumerate(int dim, int max_degree) {
    const Basis b(dim, max_degree);
    std::vector<MultiIndex> out;
    out.reserve(static_cast<std::size_t>(b.size()));
    for (int i = 0; i < b.size(); ++i) out.push_back(b.at(i));
    return out;
}

}  // namespace polymkt
