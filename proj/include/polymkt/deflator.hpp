#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <vector>

#include "polymkt/model_params.hpp"
#include "polymkt/sde_sim.hpp"
#include "polymkt/simplex_poly.hpp"
#include "polymkt/stats.hpp"

namespace polymkt {

/// Closed-form inverse of the reduced covariance for gamma identically 1:
/// entries 1/mu_k + 1/mu_d on the diagonal and 1/mu_d off it. Interior only.
Eigen::MatrixXd a_tilde_inverse(const Eigen::VectorXd& mu, int d);

/// Market price of risk lambda(mu) solving c_reduced(mu) lambda = b_reduced(mu)
/// through the Moore-Penrose pseudo-inverse (symmetric eigendecomposition,
/// relative cutoff 1e-12). Throws std::domain_error when the residual exceeds
/// 1e-8, which signals a state outside the admissible set E or degenerate gamma.
Eigen::VectorXd lambda_tilde(const AdmissibleSimplexParameterSet& params, const Eigen::VectorXd& mu);

/// Callable wrapper around lambda_tilde for a fixed parameter set.
class MarketPriceOfRisk {
public:
    explicit MarketPriceOfRisk(AdmissibleSimplexParameterSet params) : params_(std::move(params)) {}
    const AdmissibleSimplexParameterSet& params() const { return params_; }
    Eigen::VectorXd operator()(const Eigen::VectorXd& mu) const { return lambda_tilde(params_, mu); }

private:
    AdmissibleSimplexParameterSet params_;
};

/// Deflator paths Z with Z_0 = 1, grown by the positivity-preserving log-Euler
///   log Z_{t+dt} = log Z_t - lambda^T (d mu_red - b_red dt) - 1/2 lambda^T c_red lambda dt.
/// The projected Euler scheme can clamp a path onto a face the exact dynamics
/// never attain; the market price of risk is undefined there, so that single
/// step contributes no increment (one O(dt) term of the integral) and the
/// path continues. Affected paths are flagged, never dropped: dropping or
/// zeroing them demonstrably biases every deflator statistic.
struct DeflatorPath {
    Eigen::VectorXd times;
    Eigen::MatrixXd Z;  // n_paths x stored steps, strictly positive
    std::vector<std::int32_t> face_touch_paths;  // paths with skipped steps
    std::vector<std::int32_t> invalid_paths;     // non-finite increments only
};

DeflatorPath deflator_path(const AdmissibleSimplexParameterSet& params, const PathBundle& weights);

/// Share holdings per path and stored step, in market-weight units.
struct StrategyPath {
    Eigen::VectorXd times;
    int n_paths = 0;
    int d = 0;
    std::vector<double> theta;  // [path][step][component]

    double at(int path, int s, int i) const {
        return theta[(static_cast<std::size_t>(path) * static_cast<std::size_t>(times.size()) + static_cast<std::size_t>(s)) * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
    }
};

struct WealthPath {
    Eigen::VectorXd times;
    Eigen::MatrixXd Y;  // n_paths x stored steps, Y_0 = 1
};

/// Discrete self-financing relative wealth Y_{t+dt} = Y_t + sum_i theta_i dmu_i
/// with Y_0 = 1. Grids must coincide.
WealthPath self_financing_wealth(const StrategyPath& strategy, const PathBundle& weights);

/// Portfolio weights pi_i = mu_i (theta_i / Y + 1 - sum_j mu_j theta_j / Y);
/// always sums to 1. Requires Y > 0 and interior mu.
Eigen::VectorXd theta_to_portfolio(const Eigen::VectorXd& theta, const Eigen::VectorXd& mu, double Y);

/// Entropy-generated portfolio: mu_i (1 - log(mu_i)/H(mu)) normalized to sum 1,
/// with H the Shannon entropy. The formula is the functionally-generated
/// portfolio of the entropy function known from the stochastic portfolio
/// theory literature; interior mu required.
Eigen::VectorXd entropy_portfolio(const Eigen::VectorXd& mu);

/// Terminal deflator sample from a fused simulation (no path storage).
struct DeflatorRun {
    Eigen::VectorXd z_terminal;   // per path; NaN where invalid
    Eigen::MatrixXd mu_terminal;  // n_paths x d
    std::vector<std::int32_t> face_touch_paths;  // paths with skipped steps
    std::vector<std::int32_t> invalid_paths;     // non-finite increments only
    MeanStderr z_mean;            // over all paths except invalid ones
};

DeflatorRun run_deflator_mc(const AdmissibleSimplexParameterSet& params, const Eigen::VectorXd& mu0,
                            const PathConfig& config);

/// Monte Carlo estimate of the superhedging price U_T = E[Z_T], with standard
/// error. Strictly below 1 exactly when relative arbitrage exists; 1 for
/// martingale (driftless) parameters where Z is identically 1.
MeanStderr superhedge_price_mc(const AdmissibleSimplexParameterSet& params, double horizon,
                               const Eigen::VectorXd& mu0, const PathConfig& config);

/// Default indicator-approximating payoff 1 - (1 - d^d prod_i mu_i)^n: it
/// vanishes on the whole boundary and increases pointwise to 1 on the interior.
SimplexPolynomial vanishing_indicator_polynomial(int d, int n);

struct ArbitrageResult {
    int n = 0;
    double price0 = 0.0;            // p_n(0, mu_0), the initial cost of the hedge
    double prob_outperform = 0.0;   // P[Y_T > 1] over valid paths
    Eigen::VectorXd wealth_terminal;  // Y_T per path; NaN where failed
    Eigen::VectorXd payoff_ratio;     // p_n(mu_T) / p_n(0, mu_0) per path
    std::vector<std::int32_t> failed_paths;
};

/// Approximate optimal arbitrage: prices the payoff under the driftless
/// generator, trades its gradient theta_t = D p_n(t, mu_t) / p_n(0, mu_0), and
/// reports the empirical outperformance probability alongside the initial
/// price. A custom payoff (vanishing off the admissible set) may be supplied;
/// the default family is vanishing_indicator_polynomial(d, n).
ArbitrageResult approximate_optimal_arbitrage(const AdmissibleSimplexParameterSet& params, int n,
                                              double horizon, const Eigen::VectorXd& mu0,
                                              const PathConfig& config,
                                              const SimplexPolynomial* payoff = nullptr);

}  // namespace polymkt
