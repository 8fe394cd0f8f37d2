#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

namespace polymkt {

/// One failed admissibility condition, with the offending indices.
struct Violation {
    std::string code;     // stable machine-readable name
    std::string message;  // human-readable, indices included
    int i = -1;
    int j = -1;
};

struct ValidationReport {
    std::vector<Violation> violations;
    bool ok() const { return violations.empty(); }
    std::string to_string() const;
};

/// Drift/covariance parameters (beta, B, gamma) of a polynomial diffusion on
/// the unit simplex. Admissibility:
///   - gamma symmetric with zero diagonal and nonnegative off-diagonal,
///   - B^T 1 + (beta^T 1) 1 = 0,
///   - beta_i + B_ij >= 0 for all i and j != i.
/// Immutable after construction; construct via validated().
class AdmissibleSimplexParameterSet {
public:
    static ValidationReport validate(const Eigen::VectorXd& beta, const Eigen::MatrixXd& B,
                                     const Eigen::MatrixXd& gamma);

    /// Throws std::invalid_argument carrying the full report if invalid.
    static AdmissibleSimplexParameterSet validated(Eigen::VectorXd beta, Eigen::MatrixXd B,
                                                   Eigen::MatrixXd gamma);

    int dim() const { return static_cast<int>(beta_.size()); }
    const Eigen::VectorXd& beta() const { return beta_; }
    const Eigen::MatrixXd& B() const { return B_; }
    const Eigen::MatrixXd& gamma() const { return gamma_; }

    /// Drift b_i(mu) = beta_i + sum_j B_ij mu_j, as a vector.
    Eigen::VectorXd drift(const Eigen::VectorXd& mu) const;
    /// Full d x d covariance c(mu): c_ij = -gamma_ij mu_i mu_j (i != j),
    /// c_ii = sum_{j != i} gamma_ij mu_i mu_j.
    Eigen::MatrixXd covariance(const Eigen::VectorXd& mu) const;
    /// Reduced (d-1) x (d-1) covariance block (last row/column dropped).
    Eigen::MatrixXd covariance_reduced(const Eigen::VectorXd& mu) const;
    /// Reduced drift (last entry dropped).
    Eigen::VectorXd drift_reduced(const Eigen::VectorXd& mu) const;

private:
    AdmissibleSimplexParameterSet(Eigen::VectorXd beta, Eigen::MatrixXd B, Eigen::MatrixXd gamma)
        : beta_(std::move(beta)), B_(std::move(B)), gamma_(std::move(gamma)) {}
    Eigen::VectorXd beta_;
    Eigen::MatrixXd B_;
    Eigen::MatrixXd gamma_;
};

/// Parameters of the total-capitalization diffusion
/// dSigma = (kappa + lambda Sigma) dt + sqrt(phi Sigma + sigma^2 Sigma^2) dW.
struct TotalCapParams {
    double kappa = 0.0;   // >= 0
    double phi = 0.0;     // >= 0
    double lambda = 0.0;
    double sigma = 0.0;

    static ValidationReport validate(double kappa, double phi, double lambda, double sigma);
    static TotalCapParams validated(double kappa, double phi, double lambda, double sigma);
};

/// Volatility stabilized market specification: d assets, excess-drift alpha >= 0.
struct VSMSpec {
    double alpha = 0.0;
    int d = 2;

    static VSMSpec validated(double alpha, int d);
};

/// Joint weight / total-capitalization model.
struct JointModelSpec {
    AdmissibleSimplexParameterSet simplex;
    TotalCapParams totalcap;
};

/// Asset-price model where S and mu are each polynomial but not necessarily
/// jointly: per-asset drift rates lambda_i and a common quadratic level zeta,
/// constrained by zeta 11^T + Lambda - gamma being positive semidefinite.
class PropMainSpec {
public:
    static ValidationReport validate(const AdmissibleSimplexParameterSet& simplex, double zeta,
                                     const Eigen::VectorXd& lambda_vec);
    static PropMainSpec validated(AdmissibleSimplexParameterSet simplex, double zeta,
                                  Eigen::VectorXd lambda_vec);

    const AdmissibleSimplexParameterSet& simplex() const { return simplex_; }
    double zeta() const { return zeta_; }
    const Eigen::VectorXd& lambda_vec() const { return lambda_; }

private:
    PropMainSpec(AdmissibleSimplexParameterSet simplex, double zeta, Eigen::VectorXd lambda_vec)
        : simplex_(std::move(simplex)), zeta_(zeta), lambda_(std::move(lambda_vec)) {}
    AdmissibleSimplexParameterSet simplex_;
    double zeta_;
    Eigen::VectorXd lambda_;
};

/// Exact parameter image of the volatility stabilized model:
/// beta = (1+alpha)/2 * 1, B = -d(1+alpha)/2 * I, gamma_ij = 1 (i != j),
/// kappa = phi = 0, lambda = d(1+alpha)/2, sigma = 1.
JointModelSpec vsm_to_params(const VSMSpec& spec);

/// True iff the face {mu_i = 0} is attainable from the interior, i.e. the
/// non-attainment condition 2 beta_i + min_{j != i}(2 B_ij - gamma_ij) >= 0 fails.
bool boundary_attained(const AdmissibleSimplexParameterSet& params, int i);

/// True iff the model admits a local martingale deflator together with strong
/// relative arbitrage: some face has strictly positive drift somewhere
/// (beta_i + B_ij > 0 for some j != i) and every such face is non-attainable.
/// Requires gamma_ij > 0 for all i != j; throws std::domain_error otherwise.
bool classify_nupbr_arbitrage(const AdmissibleSimplexParameterSet& params);

/// Lower bound min_{i != j} gamma_ij * (d-1)/2 on the excess growth rate over
/// the interior of the simplex.
double excess_growth_lower_bound(const AdmissibleSimplexParameterSet& params);

/// True iff the total capitalization stays strictly positive: 2 kappa - phi >= 0.
bool sigma_strictly_positive(const TotalCapParams& tc);

/// All differential characteristic blocks of (mu, S, Sigma) at a state, with
/// S defined componentwise as mu * Sigma.
struct JointCharacteristics {
    Eigen::VectorXd b_mu;       // d
    Eigen::MatrixXd c_mu;       // d x d
    Eigen::VectorXd b_S;        // d
    Eigen::MatrixXd c_S;        // d x d
    Eigen::MatrixXd c_mu_S;     // d x d, row i col j = instantaneous cov(mu_i, S_j)
    double b_sigma = 0.0;
    double c_sigma = 0.0;
    Eigen::VectorXd c_sigma_S;  // d
    Eigen::VectorXd c_sigma_mu; // d, identically zero
};

JointCharacteristics joint_characteristics(const JointModelSpec& spec, const Eigen::VectorXd& mu,
                                           double sigma);

/// Drift and covariance of the asset prices under PropMainSpec at state S
/// (componentwise >= 0 with positive total).
struct AssetCharacteristics {
    Eigen::VectorXd b_S;
    Eigen::MatrixXd c_S;
};

AssetCharacteristics prop_main_characteristics(const PropMainSpec& spec, const Eigen::VectorXd& S);

}  // namespace polymkt
