#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "polymkt/calibration.hpp"
#include "polymkt/sde_sim.hpp"
#include "test_util.hpp"

using namespace polymkt;

namespace {

WeightTimeSeries series_from_path(const PathBundle& b, int path) {
    Eigen::MatrixXd w(b.stored_steps(), b.d);
    for (int s = 0; s < b.stored_steps(); ++s) w.row(s) = b.weight_row(path, s).transpose();
    return WeightTimeSeries::validated(b.times, std::move(w));
}

PathBundle simulate_vsm_weights(double alpha, int d, double T, double dt, std::uint64_t seed) {
    PathConfig cfg;
    cfg.dt = dt;
    cfg.horizon = T;
    cfg.n_paths = 1;
    cfg.seed = seed;
    return simulate_weights(vsm_to_params(VSMSpec{alpha, d}).simplex,
                            Eigen::VectorXd::Constant(d, 1.0 / d), cfg);
}

}  // namespace

TEST_CASE("caps to weights") {
    Eigen::VectorXd t(2);
    t << 0.0, 1.0;
    Eigen::MatrixXd caps(2, 3);
    caps << 2.0, 3.0, 5.0, 4.0, 6.0, 10.0;
    const WeightTimeSeries w = caps_to_weights(CapTimeSeries::validated(t, caps));
    CHECK(w.weights(0, 0) == doctest::Approx(0.2));
    CHECK(w.weights(0, 1) == doctest::Approx(0.3));
    CHECK(w.weights(0, 2) == doctest::Approx(0.5));
    // Scaling every cap leaves the weights unchanged.
    const WeightTimeSeries w10 = caps_to_weights(CapTimeSeries::validated(t, 10.0 * caps));
    CHECK((w.weights - w10.weights).cwiseAbs().maxCoeff() == 0.0);

    Eigen::MatrixXd single(2, 1);
    single << 1.0, 2.0;
    CHECK_THROWS_AS(CapTimeSeries::validated(t, single), std::invalid_argument);
    Eigen::MatrixXd nonpos = caps;
    nonpos(1, 2) = 0.0;
    CHECK_THROWS_AS(CapTimeSeries::validated(t, nonpos), std::invalid_argument);
    Eigen::VectorXd bad_t(2);
    bad_t << 1.0, 1.0;
    CHECK_THROWS_AS(CapTimeSeries::validated(bad_t, caps), std::invalid_argument);
}

TEST_CASE("gamma estimator basics") {
    SUBCASE("constant weights give zero") {
        Eigen::VectorXd t(4);
        t << 0.0, 1.0, 2.0, 3.0;
        Eigen::MatrixXd w(4, 2);
        for (int r = 0; r < 4; ++r) {
            w(r, 0) = 0.4;
            w(r, 1) = 0.6;
        }
        const GammaEstimate g = estimate_gamma(WeightTimeSeries::validated(t, w));
        CHECK(g.gamma_hat.cwiseAbs().maxCoeff() == 0.0);
        CHECK(g.clipped_negative == 0);
    }

    SUBCASE("two observations give the product of log increments") {
        Eigen::VectorXd t(2);
        t << 0.0, 1.0;
        Eigen::MatrixXd w(2, 2);
        w << 0.4, 0.6, 0.5, 0.5;
        const GammaEstimate g = estimate_gamma(WeightTimeSeries::validated(t, w));
        const double expect = -std::log(0.5 / 0.4) * std::log(0.5 / 0.6);
        CHECK(g.gamma_hat(0, 1) == doctest::Approx(expect).epsilon(1e-14));
        CHECK(g.gamma_hat(0, 1) == doctest::Approx(0.04068).epsilon(1e-3));
        CHECK(g.gamma_hat(1, 0) == g.gamma_hat(0, 1));
        CHECK(g.gamma_hat(0, 0) == 0.0);
        CHECK(g.span == doctest::Approx(1.0));
    }

    SUBCASE("boundary observations and short series are rejected") {
        Eigen::VectorXd t(2);
        t << 0.0, 1.0;
        Eigen::MatrixXd w(2, 2);
        w << 1.0, 0.0, 0.5, 0.5;
        CHECK_THROWS_AS(estimate_gamma(WeightTimeSeries::validated(t, w)), std::invalid_argument);
        Eigen::VectorXd t1(1);
        t1 << 0.0;
        Eigen::MatrixXd w1(1, 2);
        w1 << 0.4, 0.6;
        CHECK_THROWS_AS(estimate_gamma(WeightTimeSeries::validated(t1, w1)), std::invalid_argument);
    }
}

TEST_CASE("gamma recovery from simulated volatility stabilized weights") {
    const PathBundle b = simulate_vsm_weights(0.0, 3, 5.0, 1e-3, 8675309);
    const GammaEstimate g = estimate_gamma(series_from_path(b, 0));
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (i != j) CHECK(std::abs(g.gamma_hat(i, j) - 1.0) <= 0.05);
}

TEST_CASE("gamma estimate is invariant under cap rescaling") {
    const PathBundle b = simulate_vsm_weights(0.0, 2, 1.0, 1e-2, 4);
    const WeightTimeSeries w = series_from_path(b, 0);
    Eigen::MatrixXd caps = 7.5 * w.weights;  // constant total capitalization path
    const WeightTimeSeries via_caps = caps_to_weights(CapTimeSeries::validated(w.timestamps, caps));
    const GammaEstimate g1 = estimate_gamma(w);
    const GammaEstimate g2 = estimate_gamma(via_caps);
    CHECK((g1.gamma_hat - g2.gamma_hat).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("realized covariance error shrinks with the sampling interval") {
    // Same underlying fine path, subsampled 4x: the estimation error should
    // roughly halve. Averaged over paths to tame the noise in the comparison.
    double err_fine = 0.0, err_coarse = 0.0;
    const int n_rep = 6;
    for (int rep = 0; rep < n_rep; ++rep) {
        const PathBundle b = simulate_vsm_weights(0.0, 2, 4.0, 2.5e-4, 1000 + static_cast<std::uint64_t>(rep));
        const WeightTimeSeries fine = series_from_path(b, 0);
        const Eigen::Index n_coarse = (fine.timestamps.size() + 3) / 4;
        Eigen::VectorXd tc(n_coarse);
        Eigen::MatrixXd wc(n_coarse, 2);
        for (Eigen::Index r = 0; r < n_coarse; ++r) {
            tc[r] = fine.timestamps[r * 4];
            wc.row(r) = fine.weights.row(r * 4);
        }
        err_fine += std::abs(estimate_gamma(fine).gamma_hat(0, 1) - 1.0);
        err_coarse += std::abs(
            estimate_gamma(WeightTimeSeries::validated(tc, wc)).gamma_hat(0, 1) - 1.0);
    }
    CHECK(err_fine < err_coarse);
    CHECK(err_fine <= 0.75 * err_coarse);
}

TEST_CASE("drift estimation") {
    SUBCASE("driftless data estimates near-zero drift") {
        PathConfig cfg;
        cfg.dt = 1e-3;
        cfg.horizon = 20.0;
        cfg.n_paths = 1;
        cfg.seed = 55;
        const int d = 2;
        Eigen::MatrixXd gamma = Eigen::MatrixXd::Ones(d, d) - Eigen::MatrixXd::Identity(d, d);
        const auto params = AdmissibleSimplexParameterSet::validated(
            Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d), gamma);
        const PathBundle b = simulate_weights(params, Eigen::VectorXd::Constant(d, 0.5), cfg);
        const WeightTimeSeries w = series_from_path(b, 0);
        const DriftEstimate est = estimate_drift(w, estimate_gamma(w).gamma_hat);
        CHECK(est.beta_hat.cwiseAbs().maxCoeff() <= 0.25);
        CHECK(est.B_hat.cwiseAbs().maxCoeff() <= 0.5);
    }

    SUBCASE("volatility stabilized drift is recovered within 20 percent") {
        const PathBundle b = simulate_vsm_weights(0.0, 2, 20.0, 1e-3, 321321);
        const WeightTimeSeries w = series_from_path(b, 0);
        const DriftEstimate est = estimate_drift(w, estimate_gamma(w).gamma_hat);
        CHECK(std::abs(est.beta_hat[0] - 0.5) <= 0.1);
        CHECK(std::abs(est.beta_hat[1] - 0.5) <= 0.1);
    }

    SUBCASE("output combined with the gamma estimate is admissible") {
        const PathBundle b = simulate_vsm_weights(0.5, 3, 2.0, 1e-3, 777);
        const WeightTimeSeries w = series_from_path(b, 0);
        const GammaEstimate g = estimate_gamma(w);
        const DriftEstimate est = estimate_drift(w, g.gamma_hat);
        CHECK(AdmissibleSimplexParameterSet::validate(est.beta_hat, est.B_hat, g.gamma_hat).ok());
    }

    SUBCASE("constant weights are rank deficient") {
        Eigen::VectorXd t(5);
        t << 0.0, 1.0, 2.0, 3.0, 4.0;
        Eigen::MatrixXd w(5, 2);
        for (int r = 0; r < 5; ++r) {
            w(r, 0) = 0.4;
            w(r, 1) = 0.6;
        }
        const Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(2, 2);
        CHECK_THROWS_AS(estimate_drift(WeightTimeSeries::validated(t, w), gamma),
                        std::domain_error);
    }
}

TEST_CASE("face-drift projection is exact and idempotent") {
    std::mt19937_64 rng(107);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 200; ++trial) {
        const int d = 2 + trial % 4;
        Eigen::MatrixXd W(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) W(i, j) = u(rng);
        const Eigen::MatrixXd P = project_face_drift(W);
        // Feasibility: zero column sums, nonnegative off-diagonals.
        for (int j = 0; j < d; ++j) {
            CHECK(std::abs(P.col(j).sum()) <= 1e-12);
            for (int i = 0; i < d; ++i)
                if (i != j) CHECK(P(i, j) >= 0.0);
        }
        // Idempotence.
        CHECK((project_face_drift(P) - P).cwiseAbs().maxCoeff() <= 1e-12);
        // A feasible input is returned unchanged.
        const Eigen::MatrixXd Q = project_face_drift(P);
        CHECK((Q - P).cwiseAbs().maxCoeff() <= 1e-12);
    }
}
