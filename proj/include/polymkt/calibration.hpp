#pragma once

#include <Eigen/Dense>

#include "polymkt/model_params.hpp"

namespace polymkt {

/// Observed market capitalizations: strictly increasing timestamps, positive
/// entries, d >= 2 assets.
struct CapTimeSeries {
    Eigen::VectorXd timestamps;
    Eigen::MatrixXd caps;  // n_times x d

    static CapTimeSeries validated(Eigen::VectorXd timestamps, Eigen::MatrixXd caps);
};

/// Observed market weights: rows on the simplex within 1e-12.
struct WeightTimeSeries {
    Eigen::VectorXd timestamps;
    Eigen::MatrixXd weights;  // n_times x d

    static WeightTimeSeries validated(Eigen::VectorXd timestamps, Eigen::MatrixXd weights);
};

/// Realized-covariance estimate of gamma from log-weight increments:
///   gamma_ij = -(1/T) sum_t dlog(mu_i) dlog(mu_j),  i != j,
/// with zero diagonal. Negative off-diagonal estimates are clipped to 0
/// (admissibility projection); the count is reported.
struct GammaEstimate {
    Eigen::MatrixXd gamma_hat;
    Eigen::MatrixXd standard_errors;
    double span = 0.0;  // T, in the units of the timestamps
    int clipped_negative = 0;
};

/// Drift estimate with the face-drift parametrization W_ij = beta_i + B_ij
/// (the drift on the simplex is b(mu) = W mu). Identification: beta_i is the
/// smallest off-diagonal entry of row i of W, so a purely diagonal B is
/// recovered exactly.
struct DriftEstimate {
    Eigen::VectorXd beta_hat;
    Eigen::MatrixXd B_hat;
    Eigen::MatrixXd W_standard_errors;
    bool projected = false;  // admissibility projection moved the LS solution
};

/// Rowwise normalization of capitalizations to market weights.
WeightTimeSeries caps_to_weights(const CapTimeSeries& series);

/// Exact Euclidean projection of a face-drift matrix W onto the admissible
/// set {column sums 0, W_ij >= 0 for i != j}; diagonal entries are free.
/// Idempotent; feasible inputs are returned unchanged.
Eigen::MatrixXd project_face_drift(const Eigen::MatrixXd& W);

/// Requires strictly interior observations and at least two rows.
GammaEstimate estimate_gamma(const WeightTimeSeries& series);

/// Per-component least squares of the weight increments against mu * dt,
/// followed by the exact Euclidean projection onto the admissibility
/// constraints (column sums of W zero, off-diagonal entries nonnegative).
/// gamma_hat is combined with the projected drift for a final validation.
/// Throws std::domain_error when the regression is rank deficient.
DriftEstimate estimate_drift(const WeightTimeSeries& series, const Eigen::MatrixXd& gamma_hat);

}  // namespace polymkt
