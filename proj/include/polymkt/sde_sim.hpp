#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "polymkt/model_params.hpp"

namespace polymkt {

enum class Scheme { EulerProject };

/// Discretization and run controls shared by all simulators.
struct PathConfig {
    double dt = 1e-3;      // time step, years
    double horizon = 1.0;  // T
    int n_paths = 1;
    std::uint64_t seed = 0;
    Scheme scheme = Scheme::EulerProject;
    /// Stride between stored grid points; step 0 and the final step are
    /// always stored. Statistics are accumulated over every integration step
    /// regardless of the stride.
    int store_stride = 1;
    std::size_t memory_cap_bytes = std::size_t(2) << 30;
    int n_threads = 0;  // 0 = hardware concurrency

    /// Number of integration steps; horizon/dt must be an integer up to
    /// floating-point rounding.
    int steps() const;
    void validate() const;
};

/// Discretized Monte Carlo paths. Row-major layout [path][stored step][component]
/// matches the binary dump format. Aborted paths are listed in failed_paths and
/// carry NaN in their stored slots.
struct PathBundle {
    Eigen::VectorXd times;  // stored grid
    int n_paths = 0;
    int d = 0;  // weight components; 0 when the bundle has no weights
    std::vector<double> weights;
    std::vector<double> sigma;  // total capitalization, empty when absent
    std::vector<double> caps;   // individual capitalizations, empty when absent
    std::vector<double> min_weight;  // per path, min_i over every integration step
    std::vector<double> min_sigma;   // per path
    std::vector<std::int32_t> failed_paths;
    std::uint64_t seed = 0;
    double dt = 0.0;

    int stored_steps() const { return static_cast<int>(times.size()); }
    bool has_weights() const { return !weights.empty(); }
    bool has_sigma() const { return !sigma.empty(); }
    bool has_caps() const { return !caps.empty(); }
    bool path_ok(int path) const;

    double weight(int path, int s, int i) const {
        return weights[(static_cast<std::size_t>(path) * static_cast<std::size_t>(stored_steps()) + static_cast<std::size_t>(s)) * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
    }
    double sigma_at(int path, int s) const {
        return sigma[static_cast<std::size_t>(path) * static_cast<std::size_t>(stored_steps()) + static_cast<std::size_t>(s)];
    }
    double cap(int path, int s, int i) const {
        return caps[(static_cast<std::size_t>(path) * static_cast<std::size_t>(stored_steps()) + static_cast<std::size_t>(s)) * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)];
    }
    Eigen::VectorXd weight_row(int path, int s) const;

    /// Every stored weight vector lies in [0,1]^d with sum 1 within 1e-12;
    /// sigma entries are positive; caps agree with weights*sigma within
    /// 1e-12 relative. Throws std::logic_error on violation.
    void check_invariants() const;
};

/// Per-step hook for computations fused with the simulation (deflators,
/// wealth). Called from worker threads, one path at a time per thread;
/// implementations must keep per-path state in per-path slots.
class WeightPathObserver {
public:
    virtual ~WeightPathObserver() = default;
    virtual void begin_path(int path, const Eigen::VectorXd& mu0);
    virtual void step(int path, int step, double t_next, const Eigen::VectorXd& prev,
                      const Eigen::VectorXd& next) = 0;
    virtual void end_path(int path, bool ok);
};

/// Euler-Maruyama in full coordinates for the simplex diffusion:
///   mu <- mu + b(mu) dt + L(mu) xi sqrt(dt),   L L^T = c(mu),
/// with L from the symmetric eigen-factorization (negative eigenvalues floored
/// at zero; c(mu) has rank d-1 so Cholesky is not applicable), followed by
/// clamping to [0,1] and renormalizing the sum to 1. First-order weak scheme.
PathBundle simulate_weights(const AdmissibleSimplexParameterSet& params, const Eigen::VectorXd& mu0,
                            const PathConfig& config);

/// As above but streaming into an observer without storing paths.
void simulate_weights(const AdmissibleSimplexParameterSet& params, const Eigen::VectorXd& mu0,
                      const PathConfig& config, WeightPathObserver& observer);

/// Full-truncation Euler for the total capitalization
///   dSigma = (kappa + lambda Sigma) dt + sqrt(phi Sigma + sigma^2 Sigma^2) dW
/// with Sigma^+ = max(Sigma, 0) inside the coefficients. When the parameters
/// imply a strictly positive process (2 kappa - phi >= 0) the state is floored
/// at 1e-12.
PathBundle simulate_total_cap(const TotalCapParams& tc, double sigma0, const PathConfig& config);

/// Joint weights / total capitalization, driven by independent noise streams;
/// caps stored as S_i = mu_i * Sigma.
PathBundle simulate_joint(const JointModelSpec& spec, const Eigen::VectorXd& mu0, double sigma0,
                          const PathConfig& config);

/// Full-truncation Euler on the volatility stabilized asset dynamics
///   dS_i = (1+alpha)/2 Sigma dt + sqrt(S_i Sigma) dW_i.
/// Stored caps are clamped at 0 and weights derived by normalization.
PathBundle simulate_vsm_assets(const VSMSpec& spec, const Eigen::VectorXd& S0,
                               const PathConfig& config);

}  // namespace polymkt
