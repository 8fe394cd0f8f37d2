#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "polymkt/model_params.hpp"
#include "test_util.hpp"

using namespace polymkt;

namespace {

bool has_violation(const ValidationReport& r, const std::string& code) {
    for (const auto& v : r.violations)
        if (v.code == code) return true;
    return false;
}

}  // namespace

TEST_CASE("vsm parameters validate and match the closed-form map") {
    const JointModelSpec j2 = vsm_to_params(VSMSpec{0.0, 2});
    CHECK(j2.simplex.beta().isApprox(Eigen::VectorXd::Constant(2, 0.5)));
    CHECK(j2.simplex.B().isApprox(-Eigen::MatrixXd::Identity(2, 2)));
    CHECK(j2.simplex.gamma()(0, 1) == 1.0);
    CHECK(j2.totalcap.kappa == 0.0);
    CHECK(j2.totalcap.phi == 0.0);
    CHECK(j2.totalcap.lambda == doctest::Approx(1.0));
    CHECK(j2.totalcap.sigma == doctest::Approx(1.0));

    const JointModelSpec j3 = vsm_to_params(VSMSpec{1.0, 3});
    CHECK(j3.simplex.beta().isApprox(Eigen::VectorXd::Ones(3)));
    CHECK(j3.simplex.B().isApprox(-3.0 * Eigen::MatrixXd::Identity(3, 3)));
    CHECK(j3.totalcap.lambda == doctest::Approx(3.0));

    for (double alpha : {0.0, 0.5, 2.0})
        for (int d : {2, 3, 7}) {
            const JointModelSpec j = vsm_to_params(VSMSpec{alpha, d});
            CHECK(AdmissibleSimplexParameterSet::validate(j.simplex.beta(), j.simplex.B(),
                                                          j.simplex.gamma())
                      .ok());
        }
    CHECK_THROWS_AS(vsm_to_params(VSMSpec{-0.1, 2}), std::invalid_argument);
}

TEST_CASE("validation names every violated condition with indices") {
    const JointModelSpec vsm = vsm_to_params(VSMSpec{0.0, 3});

    SUBCASE("negative gamma entry") {
        Eigen::MatrixXd gamma = vsm.simplex.gamma();
        gamma(0, 2) = gamma(2, 0) = -0.25;
        const auto r = AdmissibleSimplexParameterSet::validate(vsm.simplex.beta(), vsm.simplex.B(), gamma);
        REQUIRE_FALSE(r.ok());
        CHECK(has_violation(r, "gamma_sign"));
        bool found = false;
        for (const auto& v : r.violations)
            if (v.code == "gamma_sign" && v.i == 0 && v.j == 2) found = true;
        CHECK(found);
    }

    SUBCASE("perturbed beta breaks the drift column-sum identity") {
        Eigen::VectorXd beta = vsm.simplex.beta();
        beta[0] += 0.1;
        const auto r = AdmissibleSimplexParameterSet::validate(beta, vsm.simplex.B(), vsm.simplex.gamma());
        REQUIRE_FALSE(r.ok());
        CHECK(has_violation(r, "drift_column_sum"));
    }

    SUBCASE("face drift sign") {
        Eigen::MatrixXd B = vsm.simplex.B();
        B(0, 1) = -1.0;  // beta_0 + B_01 = -0.5
        const auto r = AdmissibleSimplexParameterSet::validate(vsm.simplex.beta(), B, vsm.simplex.gamma());
        REQUIRE_FALSE(r.ok());
        CHECK(has_violation(r, "face_drift_sign"));
        CHECK(has_violation(r, "drift_column_sum"));
    }

    SUBCASE("asymmetric and nonzero-diagonal gamma") {
        Eigen::MatrixXd gamma = vsm.simplex.gamma();
        gamma(1, 1) = 0.3;
        gamma(0, 1) = 0.7;
        const auto r = AdmissibleSimplexParameterSet::validate(vsm.simplex.beta(), vsm.simplex.B(), gamma);
        CHECK(has_violation(r, "gamma_diagonal"));
        CHECK(has_violation(r, "gamma_symmetry"));
    }
}

TEST_CASE("boundary attainment condition") {
    const auto vsm2 = vsm_to_params(VSMSpec{0.0, 2}).simplex;
    CHECK_FALSE(boundary_attained(vsm2, 0));  // 2*0.5 + (0 - 1) = 0 >= 0
    CHECK_FALSE(boundary_attained(vsm2, 1));

    // d=3, beta = 0.2, B = -0.6 I, gamma = 1: 0.4 + (0 - 1) < 0.
    const int d = 3;
    Eigen::VectorXd beta = Eigen::VectorXd::Constant(d, 0.2);
    Eigen::MatrixXd B = -0.6 * Eigen::MatrixXd::Identity(d, d);
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Ones(d, d) - Eigen::MatrixXd::Identity(d, d);
    const auto weak = AdmissibleSimplexParameterSet::validated(beta, B, gamma);
    for (int i = 0; i < d; ++i) CHECK(boundary_attained(weak, i));

    const auto driftless = AdmissibleSimplexParameterSet::validated(
        Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d), gamma);
    for (int i = 0; i < d; ++i) CHECK(boundary_attained(driftless, i));

    CHECK_THROWS_AS(boundary_attained(weak, 3), std::invalid_argument);
}

TEST_CASE("NUPBR + strong arbitrage classifier truth table") {
    const int d = 3;
    Eigen::MatrixXd gamma = Eigen::MatrixXd::Ones(d, d) - Eigen::MatrixXd::Identity(d, d);

    const auto driftless = AdmissibleSimplexParameterSet::validated(
        Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d), gamma);
    CHECK_FALSE(classify_nupbr_arbitrage(driftless));

    for (double alpha : {0.0, 0.5, 1.0})
        for (int dd : {2, 3, 5})
            CHECK(classify_nupbr_arbitrage(vsm_to_params(VSMSpec{alpha, dd}).simplex));

    const auto weak = AdmissibleSimplexParameterSet::validated(
        Eigen::VectorXd::Constant(d, 0.2), -0.6 * Eigen::MatrixXd::Identity(d, d), gamma);
    CHECK_FALSE(classify_nupbr_arbitrage(weak));

    // Zero off-diagonal gamma violates the theorem hypothesis.
    Eigen::MatrixXd gamma0 = gamma;
    gamma0(0, 1) = gamma0(1, 0) = 0.0;
    const auto degenerate = AdmissibleSimplexParameterSet::validated(
        Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d), gamma0);
    CHECK_THROWS_AS(classify_nupbr_arbitrage(degenerate), std::domain_error);
}

TEST_CASE("classifier true forces non-attainment on positive-drift faces") {
    std::mt19937_64 rng(17);
    int checked = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const auto params = testutil::random_admissible_params(rng, 2 + static_cast<int>(trial % 4));
        if (!classify_nupbr_arbitrage(params)) continue;
        ++checked;
        for (int i = 0; i < params.dim(); ++i) {
            bool positive = false;
            for (int j = 0; j < params.dim(); ++j)
                if (j != i && params.beta()[i] + params.B()(i, j) > 0.0) positive = true;
            if (positive) CHECK_FALSE(boundary_attained(params, i));
        }
    }
    CHECK(checked > 0);
}

TEST_CASE("excess growth lower bound") {
    CHECK(excess_growth_lower_bound(vsm_to_params(VSMSpec{0.3, 10}).simplex) == doctest::Approx(4.5));

    const int d = 3;
    Eigen::MatrixXd gamma = 2.0 * (Eigen::MatrixXd::Ones(d, d) - Eigen::MatrixXd::Identity(d, d));
    const auto p = AdmissibleSimplexParameterSet::validated(Eigen::VectorXd::Zero(d),
                                                            Eigen::MatrixXd::Zero(d, d), gamma);
    CHECK(excess_growth_lower_bound(p) == doctest::Approx(2.0));

    gamma(0, 1) = gamma(1, 0) = 0.0;
    const auto pz = AdmissibleSimplexParameterSet::validated(Eigen::VectorXd::Zero(d),
                                                             Eigen::MatrixXd::Zero(d, d), gamma);
    CHECK(excess_growth_lower_bound(pz) == 0.0);
}

TEST_CASE("total-cap strict positivity") {
    CHECK(sigma_strictly_positive(TotalCapParams{1.0, 2.0, 0.0, 0.0}));
    CHECK_FALSE(sigma_strictly_positive(TotalCapParams{0.4, 1.0, 0.0, 0.0}));
    CHECK(sigma_strictly_positive(TotalCapParams{0.0, 0.0, 1.0, 1.0}));
    CHECK_FALSE(TotalCapParams::validate(-1.0, 0.0, 0.0, 0.0).ok());
    CHECK_FALSE(TotalCapParams::validate(0.0, -0.5, 0.0, 0.0).ok());
}

TEST_CASE("joint characteristics: closed-form blocks for the VSM") {
    std::mt19937_64 rng(23);
    const JointModelSpec spec = vsm_to_params(VSMSpec{0.0, 3});
    for (int trial = 0; trial < 100; ++trial) {
        const Eigen::VectorXd mu = testutil::random_simplex_point(rng, 3, 0.05);
        const double sigma = 0.5 + 2.0 * (trial % 7) / 7.0;
        const auto ch = joint_characteristics(spec, mu, sigma);
        const Eigen::VectorXd S = mu * sigma;
        for (int i = 0; i < 3; ++i) {
            CHECK(ch.c_mu_S(i, i) == doctest::Approx(S[i] * (1.0 - mu[i])).epsilon(1e-12));
            for (int j = 0; j < 3; ++j)
                if (i != j) {
                    CHECK(ch.c_mu_S(i, j) == doctest::Approx(-mu[i] * S[j]).epsilon(1e-12));
                    CHECK(ch.c_mu_S(i, j) == doctest::Approx(ch.c_mu_S(j, i)).epsilon(1e-12));
                }
            CHECK(ch.c_sigma_mu[i] == 0.0);
        }
    }
}

TEST_CASE("joint characteristics: aggregation identities at random states") {
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int set = 0; set < 20; ++set) {
        const int d = 2 + set % 4;
        const auto simplex = testutil::random_admissible_params(rng, d);
        const TotalCapParams tc{u(rng), u(rng), 2.0 * u(rng) - 1.0, 2.0 * u(rng) - 1.0};
        const JointModelSpec spec{simplex, tc};
        for (int trial = 0; trial < 50; ++trial) {
            const Eigen::VectorXd mu = testutil::random_simplex_point(rng, d);
            const double sigma = 0.25 + 4.0 * u(rng);
            const auto ch = joint_characteristics(spec, mu, sigma);
            CHECK(std::abs(ch.b_S.sum() - ch.b_sigma) <= 1e-10 * (1.0 + std::abs(ch.b_sigma)));
            CHECK(std::abs(ch.c_S.sum() - ch.c_sigma) <= 1e-10 * (1.0 + std::abs(ch.c_sigma)));
            CHECK(ch.c_sigma_mu.cwiseAbs().maxCoeff() == 0.0);
        }
    }
}

TEST_CASE("joint characteristics: degenerate covariance vanishes") {
    const int d = 3;
    const auto simplex = AdmissibleSimplexParameterSet::validated(
        Eigen::VectorXd::Constant(d, 1.0 / 3.0), -Eigen::MatrixXd::Identity(d, d),
        Eigen::MatrixXd::Zero(d, d));
    const JointModelSpec spec{simplex, TotalCapParams{0.5, 0.0, 0.1, 0.0}};
    Eigen::VectorXd mu(3);
    mu << 0.2, 0.3, 0.5;
    const auto ch = joint_characteristics(spec, mu, 2.0);
    CHECK(ch.c_mu.cwiseAbs().maxCoeff() == 0.0);
    CHECK(ch.c_S.cwiseAbs().maxCoeff() == 0.0);
    CHECK(ch.c_mu_S.cwiseAbs().maxCoeff() == 0.0);
    CHECK(ch.c_sigma == 0.0);
    CHECK_THROWS_AS(joint_characteristics(spec, mu, 0.0), std::invalid_argument);
}

TEST_CASE("weight covariance is PSD, and PD in the reduced block on the interior") {
    std::mt19937_64 rng(31);
    for (int set = 0; set < 10; ++set) {
        const int d = 2 + set % 4;
        const auto params = testutil::random_admissible_params(rng, d, 0.1, 2.0);
        for (int trial = 0; trial < 100; ++trial) {
            const Eigen::VectorXd mu = testutil::random_simplex_point(rng, d);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(params.covariance(mu),
                                                              Eigen::EigenvaluesOnly);
            CHECK(es.eigenvalues().minCoeff() >= -1e-10);

            const Eigen::VectorXd interior = testutil::random_simplex_point(rng, d, 0.2);
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> er(params.covariance_reduced(interior),
                                                              Eigen::EigenvaluesOnly);
            CHECK(er.eigenvalues().minCoeff() > 0.0);
        }
    }
}

TEST_CASE("asset spec (zeta, lambda) validation and characteristics") {
    const JointModelSpec vsm = vsm_to_params(VSMSpec{0.0, 2});

    SUBCASE("scalar lambda with zeta = sigma^2 - 2 lambda reproduces the joint blocks") {
        std::mt19937_64 rng(37);
        const double lambda = vsm.totalcap.lambda;
        const double zeta = vsm.totalcap.sigma * vsm.totalcap.sigma - 2.0 * lambda;
        const auto spec = PropMainSpec::validated(vsm.simplex, zeta,
                                                  Eigen::VectorXd::Constant(2, lambda));
        for (int trial = 0; trial < 50; ++trial) {
            const Eigen::VectorXd mu = testutil::random_simplex_point(rng, 2, 0.05);
            const double sigma_total = 0.5 + trial * 0.01;
            const Eigen::VectorXd S = mu * sigma_total;
            const auto a = prop_main_characteristics(spec, S);
            const auto j = joint_characteristics(vsm, mu, sigma_total);
            CHECK((a.b_S - j.b_S).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + j.b_S.cwiseAbs().maxCoeff()));
            CHECK((a.c_S - j.c_S).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + j.c_S.cwiseAbs().maxCoeff()));
        }
    }

    SUBCASE("zeta + lambda_i + lambda_j = gamma_ij kills the off-diagonal covariance") {
        Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(2, 2);
        gamma(0, 1) = gamma(1, 0) = 1.0;
        const auto simplex = AdmissibleSimplexParameterSet::validated(
            Eigen::VectorXd::Constant(2, 0.5), -Eigen::MatrixXd::Identity(2, 2), gamma);
        Eigen::VectorXd lambda(2);
        lambda << 0.3, 0.2;
        const auto spec = PropMainSpec::validated(simplex, 0.5, lambda);
        Eigen::VectorXd S(2);
        S << 1.4, 0.6;
        const auto ch = prop_main_characteristics(spec, S);
        CHECK(ch.c_S(0, 1) == doctest::Approx(0.0).epsilon(1e-15));
    }

    SUBCASE("single-asset state diagonal") {
        Eigen::VectorXd lambda(2);
        lambda << 0.3, 0.2;
        const auto spec = PropMainSpec::validated(vsm.simplex, 0.5, lambda);
        Eigen::VectorXd S(2);
        S << 2.0, 0.0;
        const auto ch = prop_main_characteristics(spec, S);
        CHECK(ch.c_S(0, 0) == doctest::Approx((0.5 + 0.6) * 4.0).epsilon(1e-14));
        CHECK(ch.c_S(1, 1) == 0.0);
    }

    SUBCASE("PSD violation is rejected with a named violation") {
        Eigen::MatrixXd gamma = Eigen::MatrixXd::Zero(2, 2);
        gamma(0, 1) = gamma(1, 0) = 5.0;
        const auto simplex = AdmissibleSimplexParameterSet::validated(
            Eigen::VectorXd::Constant(2, 0.5), -Eigen::MatrixXd::Identity(2, 2), gamma);
        Eigen::VectorXd lambda = Eigen::VectorXd::Zero(2);
        const auto r = PropMainSpec::validate(simplex, 0.1, lambda);
        REQUIRE_FALSE(r.ok());
        CHECK(has_violation(r, "quadratic_psd"));
        CHECK_THROWS_AS(PropMainSpec::validated(simplex, 0.1, lambda), std::invalid_argument);
    }

    SUBCASE("nonpositive total capitalization is rejected") {
        Eigen::VectorXd lambda = Eigen::VectorXd::Zero(2);
        const auto spec = PropMainSpec::validated(vsm.simplex, 1.0, lambda);
        CHECK_THROWS_AS(prop_main_characteristics(spec, Eigen::VectorXd::Zero(2)),
                        std::invalid_argument);
    }
}
