#include "polymkt/model_params.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace polymkt {

namespace {

constexpr double kLinearTol = 1e-12;  // exact linear identities in double precision
constexpr double kPsdFloor = -1e-10;  // eigenvalue floor for PSD checks

void push(ValidationReport& r, std::string code, std::string message, int i = -1, int j = -1) {
    r.violations.push_back(Violation{std::move(code), std::move(message), i, j});
}

std::string idx2(const char* name, int i, int j) {
    std::ostringstream os;
    os << name << "[" << i << "," << j << "]";
    return os.str();
}

}  // namespace

std::string ValidationReport::to_string() const {
    if (ok()) return "valid";
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
        if (i) os << "; ";
        os << violations[i].code << ": " << violations[i].message;
    }
    return os.str();
}

ValidationReport AdmissibleSimplexParameterSet::validate(const Eigen::VectorXd& beta,
                                                         const Eigen::MatrixXd& B,
                                                         const Eigen::MatrixXd& gamma) {
    ValidationReport r;
    const int d = static_cast<int>(beta.size());
    if (d < 2) {
        push(r, "dimension", "d must be >= 2");
        return r;
    }
    if (B.rows() != d || B.cols() != d || gamma.rows() != d || gamma.cols() != d) {
        push(r, "shape", "B and gamma must be d x d with d = len(beta)");
        return r;
    }
    for (int i = 0; i < d; ++i) {
        if (gamma(i, i) != 0.0)
            push(r, "gamma_diagonal", idx2("gamma", i, i) + " must be 0", i, i);
        for (int j = i + 1; j < d; ++j) {
            if (gamma(i, j) != gamma(j, i))
                push(r, "gamma_symmetry", idx2("gamma", i, j) + " != " + idx2("gamma", j, i), i, j);
            if (gamma(i, j) < 0.0)
                push(r, "gamma_sign", idx2("gamma", i, j) + " is negative", i, j);
        }
    }
    const double beta_sum = beta.sum();
    const Eigen::VectorXd column_sums = B.transpose() * Eigen::VectorXd::Ones(d);
    for (int j = 0; j < d; ++j) {
        const double resid = column_sums[j] + beta_sum;
        if (std::abs(resid) > kLinearTol) {
            std::ostringstream os;
            os << "column " << j << " of B^T 1 + (beta^T 1) 1 is " << resid;
            push(r, "drift_column_sum", os.str(), -1, j);
        }
    }
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            if (beta[i] + B(i, j) < 0.0) {
                std::ostringstream os;
                os << "beta[" << i << "] + B[" << i << "," << j << "] = " << beta[i] + B(i, j) << " < 0";
                push(r, "face_drift_sign", os.str(), i, j);
            }
        }
    return r;
}

AdmissibleSimplexParameterSet AdmissibleSimplexParameterSet::validated(Eigen::VectorXd beta,
                                                                       Eigen::MatrixXd B,
                                                                       Eigen::MatrixXd gamma) {
    ValidationReport r = validate(beta, B, gamma);
    if (!r.ok())
        throw std::invalid_argument("invalid simplex parameter set: " + r.to_string());
    return AdmissibleSimplexParameterSet(std::move(beta), std::move(B), std::move(gamma));
}

Eigen::VectorXd AdmissibleSimplexParameterSet::drift(const Eigen::VectorXd& mu) const {
    return beta_ + B_ * mu;
}

Eigen::MatrixXd AdmissibleSimplexParameterSet::covariance(const Eigen::VectorXd& mu) const {
    const int d = dim();
    Eigen::MatrixXd c(d, d);
    for (int i = 0; i < d; ++i) {
        double diag = 0.0;
        for (int j = 0; j < d; ++j) {
            if (i == j) continue;
            const double v = gamma_(i, j) * mu[i] * mu[j];
            c(i, j) = -v;
            diag += v;
        }
        c(i, i) = diag;
    }
    return c;
}

Eigen::MatrixXd AdmissibleSimplexParameterSet::covariance_reduced(const Eigen::VectorXd& mu) const {
    return covariance(mu).topLeftCorner(dim() - 1, dim() - 1);
}

Eigen::VectorXd AdmissibleSimplexParameterSet::drift_reduced(const Eigen::VectorXd& mu) const {
    return drift(mu).head(dim() - 1);
}

ValidationReport TotalCapParams::validate(double kappa, double phi, double lambda, double sigma) {
    ValidationReport r;
    if (!(std::isfinite(kappa) && std::isfinite(phi) && std::isfinite(lambda) && std::isfinite(sigma)))
        push(r, "finite", "all total-cap parameters must be finite");
    if (kappa < 0.0) push(r, "kappa_sign", "kappa must be >= 0");
    if (phi < 0.0) push(r, "phi_sign", "phi must be >= 0");
    return r;
}

TotalCapParams TotalCapParams::validated(double kappa, double phi, double lambda, double sigma) {
    ValidationReport r = validate(kappa, phi, lambda, sigma);
    if (!r.ok()) throw std::invalid_argument("invalid total-cap parameters: " + r.to_string());
    return TotalCapParams{kappa, phi, lambda, sigma};
}

VSMSpec VSMSpec::validated(double alpha, int d) {
    if (!(alpha >= 0.0)) throw std::invalid_argument("VSMSpec: alpha must be >= 0");
    if (d < 2) throw std::invalid_argument("VSMSpec: d must be >= 2");
    return VSMSpec{alpha, d};
}

ValidationReport PropMainSpec::validate(const AdmissibleSimplexParameterSet& simplex, double zeta,
                                        const Eigen::VectorXd& lambda_vec) {
    ValidationReport r;
    const int d = simplex.dim();
    if (lambda_vec.size() != d) {
        push(r, "shape", "lambda_vec must have length d");
        return r;
    }
    for (int i = 0; i < d; ++i)
        if (zeta + 2.0 * lambda_vec[i] < 0.0) {
            std::ostringstream os;
            os << "zeta + 2 lambda[" << i << "] = " << zeta + 2.0 * lambda_vec[i] << " < 0";
            push(r, "diag_variance_sign", os.str(), i, -1);
        }
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(d, d, zeta) - simplex.gamma();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) m(i, j) += lambda_vec[i] + lambda_vec[j];
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    const double min_eig = es.eigenvalues().minCoeff();
    if (min_eig < kPsdFloor) {
        std::ostringstream os;
        os << "zeta 11^T + Lambda - gamma has eigenvalue " << min_eig;
        push(r, "quadratic_psd", os.str());
    }
    return r;
}

PropMainSpec PropMainSpec::validated(AdmissibleSimplexParameterSet simplex, double zeta,
                                     Eigen::VectorXd lambda_vec) {
    ValidationReport r = validate(simplex, zeta, lambda_vec);
    if (!r.ok()) throw std::invalid_argument("invalid asset-price spec: " + r.to_string());
    return PropMainSpec(std::move(simplex), zeta, std::move(lambda_vec));
}

JointModelSpec vsm_to_params(const VSMSpec& spec) {
    const VSMSpec s = VSMSpec::validated(spec.alpha, spec.d);
    const int d = s.d;
    const double rate = 0.5 * (1.0 + s.alpha);
    Eigen::VectorXd beta = Eigen::VectorXd::Constant(d, rate);
    Eigen::MatrixXd B = -static_cast<double>(d) * rate * Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Ones(d, d) - Eigen::MatrixXd::Identity(d, d);
    TotalCapParams tc{0.0, 0.0, static_cast<double>(d) * rate, 1.0};
    return JointModelSpec{
        AdmissibleSimplexParameterSet::validated(std::move(beta), std::move(B), std::move(gamma)), tc};
}

namespace {

double non_attainment_margin(const AdmissibleSimplexParameterSet& params, int i) {
    const int d = params.dim();
    double min_term = std::numeric_limits<double>::infinity();
    for (int j = 0; j < d; ++j) {
        if (j == i) continue;
        min_term = std::min(min_term, 2.0 * params.B()(i, j) - params.gamma()(i, j));
    }
    return 2.0 * params.beta()[i] + min_term;
}

}  // namespace

bool boundary_attained(const AdmissibleSimplexParameterSet& params, int i) {
    if (i < 0 || i >= params.dim()) throw std::invalid_argument("boundary_attained: index out of range");
    return !(non_attainment_margin(params, i) >= 0.0);
}

bool classify_nupbr_arbitrage(const AdmissibleSimplexParameterSet& params) {
    const int d = params.dim();
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j)
            if (!(params.gamma()(i, j) > 0.0))
                throw std::domain_error(
                    "classify_nupbr_arbitrage requires gamma_ij > 0 for all i != j");
    // On the face {mu_i = 0} the drift b_i is a convex combination of
    // beta_i + B_ij over j != i, each nonnegative by admissibility, so it is
    // positive somewhere on the face iff some beta_i + B_ij > 0 (strictly).
    bool any_positive_face_drift = false;
    for (int i = 0; i < d; ++i) {
        bool positive = false;
        for (int j = 0; j < d; ++j)
            if (j != i && params.beta()[i] + params.B()(i, j) > 0.0) positive = true;
        if (!positive) continue;
        any_positive_face_drift = true;
        if (boundary_attained(params, i)) return false;
    }
    return any_positive_face_drift;
}

double excess_growth_lower_bound(const AdmissibleSimplexParameterSet& params) {
    const int d = params.dim();
    double g = std::numeric_limits<double>::infinity();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (i != j) g = std::min(g, params.gamma()(i, j));
    return g * (d - 1) / 2.0;
}

bool sigma_strictly_positive(const TotalCapParams& tc) {
    return 2.0 * tc.kappa - tc.phi >= 0.0;
}

JointCharacteristics joint_characteristics(const JointModelSpec& spec, const Eigen::VectorXd& mu,
                                           double sigma) {
    const auto& p = spec.simplex;
    const auto& tc = spec.totalcap;
    const int d = p.dim();
    if (mu.size() != d) throw std::invalid_argument("joint_characteristics: mu has wrong length");
    if (!(sigma > 0.0)) throw std::invalid_argument("joint_characteristics: Sigma must be > 0");
    const Eigen::VectorXd S = mu * sigma;

    JointCharacteristics out;
    out.b_mu = p.drift(mu);
    out.c_mu = p.covariance(mu);

    out.b_S = p.beta() * sigma + p.B() * S + tc.kappa * mu + tc.lambda * S;

    out.c_S.resize(d, d);
    out.c_mu_S.resize(d, d);
    const double sig2 = tc.sigma * tc.sigma;
    for (int i = 0; i < d; ++i) {
        double diag_S = tc.phi * S[i] * mu[i] + sig2 * S[i] * S[i];
        double diag_muS = 0.0;
        for (int j = 0; j < d; ++j) {
            if (j == i) continue;
            diag_S += p.gamma()(i, j) * S[i] * S[j];
            diag_muS += p.gamma()(i, j) * S[i] * mu[j];
            out.c_S(i, j) = tc.phi * S[i] * mu[j] + sig2 * S[i] * S[j] - p.gamma()(i, j) * S[i] * S[j];
            out.c_mu_S(i, j) = -p.gamma()(i, j) * mu[i] * S[j];
        }
        out.c_S(i, i) = diag_S;
        out.c_mu_S(i, i) = diag_muS;
    }

    out.b_sigma = tc.kappa + tc.lambda * sigma;
    out.c_sigma = tc.phi * sigma + sig2 * sigma * sigma;
    out.c_sigma_S = tc.phi * S + sig2 * sigma * S;
    out.c_sigma_mu = Eigen::VectorXd::Zero(d);
    return out;
}

AssetCharacteristics prop_main_characteristics(const PropMainSpec& spec, const Eigen::VectorXd& S) {
    const auto& p = spec.simplex();
    const int d = p.dim();
    if (S.size() != d) throw std::invalid_argument("prop_main_characteristics: S has wrong length");
    double total = 0.0;
    for (int i = 0; i < d; ++i) {
        if (S[i] < 0.0) throw std::invalid_argument("prop_main_characteristics: S must be >= 0");
        total += S[i];
    }
    if (!(total > 0.0))
        throw std::invalid_argument("prop_main_characteristics: total capitalization must be > 0");

    AssetCharacteristics out;
    out.b_S = p.beta() * total + p.B() * S + spec.lambda_vec().cwiseProduct(S);
    out.c_S.resize(d, d);
    const double zeta = spec.zeta();
    for (int i = 0; i < d; ++i) {
        double diag = (zeta + 2.0 * spec.lambda_vec()[i]) * S[i] * S[i];
        for (int j = 0; j < d; ++j) {
            if (j == i) continue;
            diag += p.gamma()(i, j) * S[i] * S[j];
            out.c_S(i, j) =
                (zeta + spec.lambda_vec()[i] + spec.lambda_vec()[j] - p.gamma()(i, j)) * S[i] * S[j];
        }
        out.c_S(i, i) = diag;
    }
    return out;
}

}  // namespace polymkt
