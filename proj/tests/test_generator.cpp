#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "polymkt/expm.hpp"
#include "polymkt/generator.hpp"
#include "polymkt/sde_sim.hpp"
#include "polymkt/stats.hpp"
#include "test_util.hpp"

using namespace polymkt;

namespace {

// Independent application of the generator to a monomial: coefficient
// functions from the parameter formulas, monomial derivatives by central
// finite differences. Catches wiring mistakes in the symbolic assembly.
double generator_on_monomial_fd(const AdmissibleSimplexParameterSet& params,
                                const std::vector<int>& exps, const Eigen::VectorXd& x) {
    const int n = params.dim() - 1;
    auto mono = [&](const Eigen::VectorXd& y) {
        double v = 1.0;
        for (int j = 0; j < n; ++j)
            for (int e = 0; e < exps[static_cast<std::size_t>(j)]; ++e) v *= y[j];
        return v;
    };
    auto full = [&](const Eigen::VectorXd& y) {
        Eigen::VectorXd mu(params.dim());
        mu.head(n) = y;
        mu[n] = 1.0 - y.sum();
        return mu;
    };
    const Eigen::VectorXd mu = full(x);
    const Eigen::VectorXd b = params.drift(mu);
    const Eigen::MatrixXd c = params.covariance(mu);
    const double h = 1e-5;
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
        Eigen::VectorXd xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        acc += b[i] * (mono(xp) - mono(xm)) / (2.0 * h);
    }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            double d2;
            if (i == j) {
                Eigen::VectorXd xp = x, xm = x;
                xp[i] += h;
                xm[i] -= h;
                d2 = (mono(xp) - 2.0 * mono(x) + mono(xm)) / (h * h);
            } else {
                Eigen::VectorXd xpp = x, xpm = x, xmp = x, xmm = x;
                xpp[i] += h; xpp[j] += h;
                xpm[i] += h; xpm[j] -= h;
                xmp[i] -= h; xmp[j] += h;
                xmm[i] -= h; xmm[j] -= h;
                d2 = (mono(xpp) - mono(xpm) - mono(xmp) + mono(xmm)) / (4.0 * h * h);
            }
            acc += 0.5 * c(i, j) * d2;
        }
    return acc;
}

}  // namespace

TEST_CASE("generator for the d=2 volatility stabilized model, degree 2") {
    const auto params = vsm_to_params(VSMSpec{0.0, 2}).simplex;
    const GeneratorMatrix gen = build_generator(params, 2);
    Eigen::MatrixXd expect(3, 3);
    expect << 0.0, 0.5, 0.0,
              0.0, -1.0, 2.0,
              0.0, 0.0, -3.0;
    CHECK((gen.matrix() - expect).cwiseAbs().maxCoeff() <= 1e-14);
}

TEST_CASE("generator columns agree with a finite-difference application") {
    std::mt19937_64 rng(41);
    for (int d : {2, 3, 4}) {
        const auto params = testutil::random_admissible_params(rng, d);
        const int k = 3;
        const GeneratorMatrix gen = build_generator(params, k);
        for (int col = 0; col < gen.size(); ++col) {
            const SimplexPolynomial image(d, k, gen.matrix().col(col));
            const auto& exps = gen.basis().at(col).exponents;
            for (int trial = 0; trial < 3; ++trial) {
                const Eigen::VectorXd mu = testutil::random_simplex_point(rng, d, 0.1);
                const Eigen::VectorXd x = mu.head(d - 1);
                const double via_matrix = image.evaluate_reduced(x);
                const double via_fd = generator_on_monomial_fd(params, exps, x);
                CHECK(via_matrix == doctest::Approx(via_fd).epsilon(1e-5));
            }
        }
    }
}

TEST_CASE("structure invariants: constant column, degree preservation, martingale drift") {
    std::mt19937_64 rng(43);
    const auto params = testutil::random_admissible_params(rng, 4);
    const GeneratorMatrix gen = build_generator(params, 4);
    CHECK(gen.matrix().col(0).cwiseAbs().maxCoeff() == 0.0);
    const Basis& basis = gen.basis();
    for (int col = 0; col < gen.size(); ++col) {
        const int m = basis.at(col).degree();
        const int cutoff = basis.degree_offset(m + 1);
        for (int row = cutoff; row < gen.size(); ++row) CHECK(gen.matrix()(row, col) == 0.0);
    }

    const int d = 3;
    const auto driftless = AdmissibleSimplexParameterSet::validated(
        Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Zero(d, d),
        Eigen::MatrixXd::Ones(d, d) - Eigen::MatrixXd::Identity(d, d));
    const GeneratorMatrix g0 = build_generator(driftless, 2);
    for (int col = g0.basis().degree_offset(1); col < g0.basis().degree_offset(2); ++col)
        CHECK(g0.matrix().col(col).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("generator dimension cap") {
    std::mt19937_64 rng(47);
    const auto params = testutil::random_admissible_params(rng, 30);
    CHECK_THROWS_AS(build_generator(params, 4), std::invalid_argument);
}

TEST_CASE("expm: identity at t=0, nilpotent Taylor, diagonal case") {
    Eigen::MatrixXd N = Eigen::MatrixXd::Zero(5, 5);
    for (int i = 0; i + 1 < 5; ++i) N(i, i + 1) = 1.0;
    const double t = 0.7;
    Eigen::MatrixXd taylor = Eigen::MatrixXd::Identity(5, 5);
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(5, 5);
    double factorial = 1.0;
    for (int k = 1; k < 5; ++k) {
        power = power * (t * N);
        factorial *= k;
        taylor += power / factorial;
    }
    CHECK((expm(t * N) - taylor).cwiseAbs().maxCoeff() <= 1e-14);

    Eigen::MatrixXd D = Eigen::Vector3d(0.0, -1.0, -3.0).asDiagonal();
    const Eigen::MatrixXd E = expm(2.0 * D);
    CHECK(E(0, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(E(1, 1) == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
    CHECK(E(2, 2) == doctest::Approx(std::exp(-6.0)).epsilon(1e-14));
    CHECK(std::abs(E(0, 1)) + std::abs(E(1, 2)) + std::abs(E(2, 0)) <= 1e-16);

    const auto params = vsm_to_params(VSMSpec{0.0, 2}).simplex;
    const GeneratorMatrix gen = build_generator(params, 2);
    Eigen::VectorXd v(3);
    v << 0.2, -1.0, 3.0;
    CHECK((expm_apply(gen, 0.0, v) - v).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(expm_apply(gen, -1.0, v), std::invalid_argument);
}

TEST_CASE("conditional moment: scalar closed form and mass conservation") {
    const auto params = vsm_to_params(VSMSpec{0.0, 2}).simplex;
    const GeneratorMatrix gen = build_generator(params, 2);
    Eigen::VectorXd mu0(2);
    mu0 << 0.3, 0.7;

    const SimplexPolynomial x1 = SimplexPolynomial::coordinate(2, 0);
    const double expect = 0.5 - 0.2 * std::exp(-1.0);
    CHECK(std::abs(conditional_moment(gen, x1, 1.0, mu0) - expect) <= 1e-12);

    const SimplexPolynomial one = SimplexPolynomial::constant(2, 1.0);
    for (double t : {0.0, 0.5, 1.0, 5.0, 10.0})
        CHECK(std::abs(conditional_moment(gen, one, t, mu0) - 1.0) <= 1e-12);
}

TEST_CASE("conditional moment: second moment against an RK4 oracle") {
    const auto params = vsm_to_params(VSMSpec{0.0, 2}).simplex;
    Eigen::VectorXd mu0(2);
    mu0 << 0.3, 0.7;
    // Closed moment system for the d=2 VSM: m' = 1/2 - m, v' = 2m - 3v.
    auto odes = [](double, const Eigen::VectorXd& y) {
        Eigen::VectorXd dy(2);
        dy[0] = 0.5 - y[0];
        dy[1] = 2.0 * y[0] - 3.0 * y[1];
        return dy;
    };
    Eigen::VectorXd y0(2);
    y0 << 0.3, 0.09;
    const Eigen::VectorXd y = testutil::rk4(odes, y0, 0.0, 1.0, 20000);

    const SimplexPolynomial x1 = SimplexPolynomial::coordinate(2, 0);
    const SimplexPolynomial x1sq = multiply(x1, x1);
    CHECK(std::abs(conditional_moment(params, x1sq, 1.0, mu0) - y[1]) <= 1e-10);
    CHECK_THROWS_AS(conditional_moment(build_generator(params, 1), x1sq, 1.0, mu0),
                    std::invalid_argument);
}

TEST_CASE("semigroup property of the propagator") {
    std::mt19937_64 rng(53);
    const auto params = vsm_to_params(VSMSpec{0.5, 3}).simplex;
    const GeneratorMatrix gen = build_generator(params, 3);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::VectorXd v(gen.size());
    for (int i = 0; i < gen.size(); ++i) v[i] = u(rng);
    const double s = 0.4, t = 0.9;
    const Eigen::VectorXd direct = expm_apply(gen, s + t, v);
    const Eigen::VectorXd nested = expm_apply(gen, s, expm_apply(gen, t, v));
    CHECK((direct - nested).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + direct.cwiseAbs().maxCoeff()));
}

TEST_CASE("generator matches the small-time moment slope with Richardson consistency") {
    const auto params = vsm_to_params(VSMSpec{0.0, 3}).simplex;
    const GeneratorMatrix gen = build_generator(params, 2);
    const SimplexPolynomial p =
        multiply(SimplexPolynomial::coordinate(3, 0), SimplexPolynomial::coordinate(3, 1));
    Eigen::VectorXd mu0(3);
    mu0 << 0.2, 0.3, 0.5;

    Eigen::VectorXd coeffs = Eigen::VectorXd::Zero(gen.size());
    coeffs.head(p.coeffs().size()) = p.coeffs();
    const SimplexPolynomial gp(3, 2, gen.matrix() * coeffs);
    const double slope = gp.evaluate(mu0);

    auto fd = [&](double h) {
        return (conditional_moment(gen, p, h, mu0) - p.evaluate(mu0)) / h;
    };
    const double e1 = std::abs(fd(1e-3) - slope);
    const double e2 = std::abs(fd(1e-4) - slope);
    CHECK(e1 <= 1e-2);
    CHECK(e2 < e1);
    const double richardson = (10.0 * fd(1e-4) - fd(1e-3)) / 9.0;
    CHECK(std::abs(richardson - slope) <= 0.25 * e2 + 1e-12);
}

TEST_CASE("driftless pricing family") {
    const auto params = vsm_to_params(VSMSpec{0.0, 2}).simplex;  // gamma_12 = 1
    const SimplexPolynomial x = SimplexPolynomial::coordinate(2, 0);

    SUBCASE("coordinates are invariant (martingale)") {
        const DriftlessPolynomialPrice price(params, x, 2.0);
        for (double t : {0.0, 0.7, 2.0}) {
            const Eigen::VectorXd c = price.coefficients_at(t);
            CHECK(c[0] == doctest::Approx(0.0).epsilon(1e-14));
            CHECK(c[1] == doctest::Approx(1.0).epsilon(1e-14));
        }
    }

    SUBCASE("the payoff is recovered at the horizon") {
        const SimplexPolynomial payoff = multiply(x, x);
        const DriftlessPolynomialPrice price(params, payoff, 1.5);
        const Eigen::VectorXd c = price.coefficients_at(1.5);
        CHECK((c.head(3) - payoff.coeffs()).cwiseAbs().maxCoeff() <= 1e-14);
    }

    SUBCASE("4 x (1-x) is an eigenfunction with rate -1") {
        // G0 p = x(1-x) p'' / 2 with p'' = -8, so G0 p = -p.
        SimplexPolynomial payoff = multiply(x, subtract(SimplexPolynomial::constant(2, 1.0), x)) * 4.0;
        const double tau = 1.0;
        const DriftlessPolynomialPrice price(params, payoff, tau);
        for (double t : {0.0, 0.25, 0.8}) {
            const Eigen::VectorXd c = price.coefficients_at(t);
            const double decay = std::exp(-(tau - t));
            Eigen::VectorXd expect = Eigen::VectorXd::Zero(3);
            expect.head(3) = payoff.coeffs() * decay;
            CHECK((c - expect).cwiseAbs().maxCoeff() <= 1e-12);
        }
    }

    SUBCASE("matches Monte Carlo of the driftless weights within 3 standard errors") {
        SimplexPolynomial payoff = multiply(x, subtract(SimplexPolynomial::constant(2, 1.0), x)) * 4.0;
        const double tau = 1.0;
        const DriftlessPolynomialPrice price(params, payoff, tau);
        const auto driftless = AdmissibleSimplexParameterSet::validated(
            Eigen::VectorXd::Zero(2), Eigen::MatrixXd::Zero(2, 2), params.gamma());
        PathConfig cfg;
        cfg.dt = 1e-3;
        cfg.horizon = tau;
        cfg.n_paths = 20000;
        cfg.seed = 9001;
        cfg.store_stride = 1000;
        const PathBundle paths = simulate_weights(driftless, Eigen::VectorXd::Constant(2, 0.5), cfg);
        std::vector<double> vals;
        vals.reserve(static_cast<std::size_t>(cfg.n_paths));
        const int last = paths.stored_steps() - 1;
        for (int p = 0; p < cfg.n_paths; ++p)
            if (paths.path_ok(p)) vals.push_back(payoff.evaluate(paths.weight_row(p, last)));
        const auto ms = mean_stderr(vals);
        const double exact = price.value(0.0, Eigen::VectorXd::Constant(2, 0.5));
        CHECK(std::abs(ms.mean - exact) <= 3.0 * ms.stderr_);
    }
}
