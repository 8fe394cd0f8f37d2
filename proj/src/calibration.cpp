#include "polymkt/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace polymkt {

namespace {

void require_times(const Eigen::VectorXd& t, Eigen::Index rows) {
    if (t.size() != rows) throw std::invalid_argument("time series: timestamp count mismatch");
    for (Eigen::Index i = 1; i < t.size(); ++i)
        if (!(t[i] > t[i - 1]))
            throw std::invalid_argument("time series: timestamps must be strictly increasing");
}

// Euclidean projection of one column of W onto {sum = 0, w_i >= 0 for i != j}
// with the diagonal coordinate free. Water-filling on the KKT multiplier.
Eigen::VectorXd project_column(const Eigen::VectorXd& w, int j) {
    const int d = static_cast<int>(w.size());
    std::vector<double> offdiag;
    offdiag.reserve(static_cast<std::size_t>(d - 1));
    for (int i = 0; i < d; ++i)
        if (i != j) offdiag.push_back(w[i]);
    std::sort(offdiag.begin(), offdiag.end(), std::greater<double>());

    // On [v_{k+1}, v_k] the active sum is linear in nu; k = number of
    // off-diagonal coordinates left unclamped.
    double nu = w[j];  // k = 0 candidate
    double prefix = 0.0;
    for (int k = 0; k <= d - 1; ++k) {
        if (k > 0) prefix += offdiag[static_cast<std::size_t>(k - 1)];
        const double candidate = (prefix + w[j]) / (k + 1);
        const double upper = k == 0 ? std::numeric_limits<double>::infinity()
                                    : offdiag[static_cast<std::size_t>(k - 1)];
        const double lower = k == d - 1 ? -std::numeric_limits<double>::infinity()
                                        : offdiag[static_cast<std::size_t>(k)];
        if (candidate <= upper && candidate >= lower) {
            nu = candidate;
            break;
        }
    }
    Eigen::VectorXd out(d);
    for (int i = 0; i < d; ++i)
        out[i] = i == j ? w[i] - nu : std::max(w[i] - nu, 0.0);
    // Close the column sum exactly by absorbing roundoff into the free slot.
    double s = 0.0;
    for (int i = 0; i < d; ++i)
        if (i != j) s += out[i];
    out[j] = -s;
    return out;
}

}  // namespace

CapTimeSeries CapTimeSeries::validated(Eigen::VectorXd timestamps, Eigen::MatrixXd caps) {
    require_times(timestamps, caps.rows());
    if (caps.cols() < 2) throw std::invalid_argument("CapTimeSeries: need d >= 2 assets");
    for (Eigen::Index r = 0; r < caps.rows(); ++r)
        for (Eigen::Index c = 0; c < caps.cols(); ++c)
            if (!(caps(r, c) > 0.0))
                throw std::invalid_argument("CapTimeSeries: nonpositive capitalization entry");
    return CapTimeSeries{std::move(timestamps), std::move(caps)};
}

WeightTimeSeries WeightTimeSeries::validated(Eigen::VectorXd timestamps, Eigen::MatrixXd weights) {
    require_times(timestamps, weights.rows());
    if (weights.cols() < 2) throw std::invalid_argument("WeightTimeSeries: need d >= 2 assets");
    for (Eigen::Index r = 0; r < weights.rows(); ++r) {
        double sum = 0.0;
        for (Eigen::Index c = 0; c < weights.cols(); ++c) {
            if (!(weights(r, c) >= 0.0))
                throw std::invalid_argument("WeightTimeSeries: negative weight");
            sum += weights(r, c);
        }
        if (std::abs(sum - 1.0) > 1e-12)
            throw std::invalid_argument("WeightTimeSeries: row does not sum to 1");
    }
    return WeightTimeSeries{std::move(timestamps), std::move(weights)};
}

WeightTimeSeries caps_to_weights(const CapTimeSeries& series) {
    Eigen::MatrixXd w = series.caps;
    for (Eigen::Index r = 0; r < w.rows(); ++r) w.row(r) /= w.row(r).sum();
    return WeightTimeSeries{series.timestamps, std::move(w)};
}

Eigen::MatrixXd project_face_drift(const Eigen::MatrixXd& W) {
    if (W.rows() != W.cols() || W.rows() < 2)
        throw std::invalid_argument("project_face_drift: W must be square, d >= 2");
    Eigen::MatrixXd out = W;
    for (int j = 0; j < W.cols(); ++j) out.col(j) = project_column(W.col(j), j);
    return out;
}

GammaEstimate estimate_gamma(const WeightTimeSeries& series) {
    const Eigen::Index n = series.weights.rows();
    const int d = static_cast<int>(series.weights.cols());
    if (n < 2) throw std::invalid_argument("estimate_gamma: need at least two observations");
    for (Eigen::Index r = 0; r < n; ++r)
        for (int c = 0; c < d; ++c)
            if (!(series.weights(r, c) > 0.0))
                throw std::invalid_argument("estimate_gamma: boundary observation");

    const double span = series.timestamps[n - 1] - series.timestamps[0];
    Eigen::MatrixXd log_w = series.weights.array().log().matrix();

    GammaEstimate out;
    out.span = span;
    out.gamma_hat = Eigen::MatrixXd::Zero(d, d);
    out.standard_errors = Eigen::MatrixXd::Zero(d, d);

    for (int i = 0; i < d; ++i) {
        for (int j = i + 1; j < d; ++j) {
            double sum = 0.0;
            for (Eigen::Index t = 0; t + 1 < n; ++t)
                sum += (log_w(t + 1, i) - log_w(t, i)) * (log_w(t + 1, j) - log_w(t, j));
            double g = -sum / span;
            // Residual spread of the per-increment products around the fitted
            // integrated covariance, scaled to the estimator.
            double ss = 0.0;
            for (Eigen::Index t = 0; t + 1 < n; ++t) {
                const double dt = series.timestamps[t + 1] - series.timestamps[t];
                const double p = (log_w(t + 1, i) - log_w(t, i)) * (log_w(t + 1, j) - log_w(t, j));
                const double e = p + g * dt;
                ss += e * e;
            }
            const double se = std::sqrt(ss) / span;
            if (g < 0.0) {
                g = 0.0;
                ++out.clipped_negative;
            }
            out.gamma_hat(i, j) = out.gamma_hat(j, i) = g;
            out.standard_errors(i, j) = out.standard_errors(j, i) = se;
        }
    }
    return out;
}

DriftEstimate estimate_drift(const WeightTimeSeries& series, const Eigen::MatrixXd& gamma_hat) {
    const Eigen::Index n = series.weights.rows();
    const int d = static_cast<int>(series.weights.cols());
    if (n < 2) throw std::invalid_argument("estimate_drift: need at least two observations");
    if (gamma_hat.rows() != d || gamma_hat.cols() != d)
        throw std::invalid_argument("estimate_drift: gamma_hat has wrong shape");

    // Regressors x_t = mu_t dt; responses per component y_t = dmu_i. Given
    // sum(mu) = 1 the constant term is absorbed, so the design has d columns.
    const Eigen::Index m = n - 1;
    Eigen::MatrixXd X(m, d);
    Eigen::MatrixXd Y(m, d);
    for (Eigen::Index t = 0; t < m; ++t) {
        const double dt = series.timestamps[t + 1] - series.timestamps[t];
        X.row(t) = series.weights.row(t) * dt;
        Y.row(t) = series.weights.row(t + 1) - series.weights.row(t);
    }

    const Eigen::MatrixXd gram = X.transpose() * X;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const double max_eig = es.eigenvalues().maxCoeff();
    if (!(max_eig > 0.0) || es.eigenvalues().minCoeff() < 1e-10 * max_eig)
        throw std::domain_error("estimate_drift: rank-deficient regression");

    const Eigen::MatrixXd gram_inv =
        es.eigenvectors() * es.eigenvalues().cwiseInverse().asDiagonal() * es.eigenvectors().transpose();
    Eigen::MatrixXd W_hat(d, d);
    Eigen::MatrixXd W_se(d, d);
    for (int i = 0; i < d; ++i) {
        const Eigen::VectorXd rhs = X.transpose() * Y.col(i);
        const Eigen::VectorXd row = gram_inv * rhs;
        W_hat.row(i) = row.transpose();
        const Eigen::VectorXd resid = Y.col(i) - X * row;
        const double dof = std::max<double>(1.0, static_cast<double>(m - d));
        const double s2 = resid.squaredNorm() / dof;
        for (int j = 0; j < d; ++j) W_se(i, j) = std::sqrt(s2 * gram_inv(j, j));
    }

    const Eigen::MatrixXd W = project_face_drift(W_hat);
    const bool projected = (W - W_hat).cwiseAbs().maxCoeff() > 1e-14;

    DriftEstimate out;
    out.W_standard_errors = std::move(W_se);
    out.projected = projected;
    out.beta_hat.resize(d);
    for (int i = 0; i < d; ++i) {
        double mn = std::numeric_limits<double>::infinity();
        for (int j = 0; j < d; ++j)
            if (j != i) mn = std::min(mn, W(i, j));
        out.beta_hat[i] = mn;
    }
    out.B_hat = W - out.beta_hat * Eigen::RowVectorXd::Ones(d);
    // The projected triple must be admissible; surface any defect loudly.
    (void)AdmissibleSimplexParameterSet::validated(out.beta_hat, out.B_hat, gamma_hat);
    return out;
}

}  // namespace polymkt
