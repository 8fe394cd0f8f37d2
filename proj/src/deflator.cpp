#include "polymkt/deflator.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "polymkt/expm.hpp"
#include "polymkt/generator.hpp"

namespace polymkt {

namespace {

constexpr double kPinvCutoffRel = 1e-12;
constexpr double kResidualTol = 1e-8;

// Indices whose face drift vanishes identically: beta_i + B_ij = 0 for all
// j != i (exact, consistent with the combinatorial classifier). Paths may
// touch those faces without leaving the admissible set E.
std::vector<bool> zero_face_drift(const AdmissibleSimplexParameterSet& params) {
    const int d = params.dim();
    std::vector<bool> in_J(static_cast<std::size_t>(d), true);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (j != i && params.beta()[i] + params.B()(i, j) != 0.0)
                in_J[static_cast<std::size_t>(i)] = false;
    return in_J;
}

bool inside_E(const Eigen::VectorXd& mu, const std::vector<bool>& in_J) {
    for (int i = 0; i < mu.size(); ++i)
        if (!in_J[static_cast<std::size_t>(i)] && !(mu[i] > 0.0)) return false;
    return true;
}

// Pseudo-inverse solve of c lambda = b with relative eigenvalue cutoff.
// Returns false when the residual exceeds the tolerance.
bool pinv_solve(const Eigen::MatrixXd& c, const Eigen::VectorXd& b, Eigen::VectorXd& lambda) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
    const Eigen::VectorXd& ev = es.eigenvalues();
    const double cutoff = kPinvCutoffRel * std::max(ev.cwiseAbs().maxCoeff(), 0.0);
    const Eigen::VectorXd proj = es.eigenvectors().transpose() * b;
    Eigen::VectorXd scaled = Eigen::VectorXd::Zero(b.size());
    for (Eigen::Index k = 0; k < ev.size(); ++k)
        if (ev[k] > cutoff) scaled[k] = proj[k] / ev[k];
    lambda.noalias() = es.eigenvectors() * scaled;
    const double resid = (c * lambda - b).cwiseAbs().maxCoeff();
    return resid <= kResidualTol;
}

// Reusable buffers for the per-step deflator increment.
struct DeflatorWorkspace {
    Eigen::MatrixXd c;
    Eigen::VectorXd b;
    Eigen::VectorXd lambda;

    void ensure(int n) {
        if (c.rows() != n) {
            c.resize(n, n);
            b.resize(n);
            lambda.resize(n);
        }
    }
};

enum class StepOutcome { kOk, kFaceTouch, kNonFinite };

// One log-Euler increment of the deflator between consecutive states.
StepOutcome deflator_increment(const AdmissibleSimplexParameterSet& params,
                               const std::vector<bool>& in_J, const Eigen::VectorXd& prev,
                               const Eigen::VectorXd& next, double dt, DeflatorWorkspace& ws,
                               double& dlogz) {
    if (!inside_E(prev, in_J)) return StepOutcome::kFaceTouch;
    const int d = params.dim();
    if (d == 2) {
        // Scalar reduced system: c = gamma_01 mu_0 mu_1, b = beta_0 + B mu.
        const double c = params.gamma()(0, 1) * prev[0] * prev[1];
        const double b = params.beta()[0] + params.B()(0, 0) * prev[0] + params.B()(0, 1) * prev[1];
        double lam = 0.0;
        if (c > 0.0)
            lam = b / c;
        else if (std::abs(b) > kResidualTol)
            return StepOutcome::kFaceTouch;
        const double dmu = next[0] - prev[0];
        dlogz = -lam * (dmu - b * dt) - 0.5 * lam * lam * c * dt;
        return std::isfinite(dlogz) ? StepOutcome::kOk : StepOutcome::kNonFinite;
    }
    const int n = d - 1;
    ws.ensure(n);
    for (int i = 0; i < n; ++i) {
        double bi = params.beta()[i];
        for (int j = 0; j < d; ++j) bi += params.B()(i, j) * prev[j];
        ws.b[i] = bi;
        double diag = params.gamma()(i, n) * prev[i] * prev[n];
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double v = params.gamma()(i, j) * prev[i] * prev[j];
            ws.c(i, j) = -v;
            diag += v;
        }
        ws.c(i, i) = diag;
    }
    if (!pinv_solve(ws.c, ws.b, ws.lambda)) return StepOutcome::kFaceTouch;
    double dlog = 0.0;
    for (int i = 0; i < n; ++i) dlog -= ws.lambda[i] * ((next[i] - prev[i]) - ws.b[i] * dt);
    dlog -= 0.5 * ws.lambda.dot(ws.c * ws.lambda) * dt;
    dlogz = dlog;
    return std::isfinite(dlogz) ? StepOutcome::kOk : StepOutcome::kNonFinite;
}

class DeflatorObserver : public WeightPathObserver {
public:
    DeflatorObserver(const AdmissibleSimplexParameterSet& params, int n_paths)
        : params_(params), in_J_(zero_face_drift(params)),
          logz_(static_cast<std::size_t>(n_paths), 0.0),
          touched_(static_cast<std::size_t>(n_paths), 0),
          invalid_(static_cast<std::size_t>(n_paths), 0),
          mu_term_(n_paths, params.dim()) {}

    void begin_path(int path, const Eigen::VectorXd& mu0) override {
        logz_[static_cast<std::size_t>(path)] = 0.0;
        touched_[static_cast<std::size_t>(path)] = inside_E(mu0, in_J_) ? 0 : 1;
        mu_term_.row(path) = mu0;
    }

    void step(int path, int /*step*/, double /*t_next*/, const Eigen::VectorXd& prev,
              const Eigen::VectorXd& next) override {
        mu_term_.row(path) = next;
        if (invalid_[static_cast<std::size_t>(path)]) return;
        thread_local DeflatorWorkspace ws;
        double dlogz = 0.0;
        switch (deflator_increment(params_, in_J_, prev, next, dt_, ws, dlogz)) {
            case StepOutcome::kOk:
                logz_[static_cast<std::size_t>(path)] += dlogz;
                break;
            case StepOutcome::kFaceTouch:
                touched_[static_cast<std::size_t>(path)] = 1;
                break;
            case StepOutcome::kNonFinite:
                invalid_[static_cast<std::size_t>(path)] = 1;
                break;
        }
    }

    void end_path(int path, bool ok) override {
        if (!ok) invalid_[static_cast<std::size_t>(path)] = 1;
    }

    void set_dt(double dt) { dt_ = dt; }

    DeflatorRun finish() const {
        DeflatorRun out;
        const int n_paths = static_cast<int>(logz_.size());
        out.z_terminal.resize(n_paths);
        out.mu_terminal = mu_term_;
        std::vector<double> sample;
        sample.reserve(static_cast<std::size_t>(n_paths));
        for (int p = 0; p < n_paths; ++p) {
            if (invalid_[static_cast<std::size_t>(p)]) {
                out.z_terminal[p] = std::numeric_limits<double>::quiet_NaN();
                out.invalid_paths.push_back(p);
                continue;
            }
            out.z_terminal[p] = std::exp(logz_[static_cast<std::size_t>(p)]);
            sample.push_back(out.z_terminal[p]);
            if (touched_[static_cast<std::size_t>(p)]) out.face_touch_paths.push_back(p);
        }
        if (sample.empty()) throw std::runtime_error("deflator: no usable paths");
        out.z_mean = mean_stderr(sample);
        return out;
    }

private:
    const AdmissibleSimplexParameterSet& params_;
    std::vector<bool> in_J_;
    std::vector<double> logz_;
    std::vector<std::uint8_t> touched_;
    std::vector<std::uint8_t> invalid_;
    Eigen::MatrixXd mu_term_;
    double dt_ = 0.0;
};

}  // namespace

Eigen::MatrixXd a_tilde_inverse(const Eigen::VectorXd& mu, int d) {
    require_simplex_point(mu, d);
    for (int i = 0; i < d; ++i)
        if (!(mu[i] > 0.0)) throw std::invalid_argument("a_tilde_inverse: boundary input");
    Eigen::MatrixXd out(d - 1, d - 1);
    const double inv_last = 1.0 / mu[d - 1];
    for (int k = 0; k < d - 1; ++k) {
        for (int l = 0; l < d - 1; ++l) out(k, l) = inv_last;
        out(k, k) += 1.0 / mu[k];
    }
    return out;
}

Eigen::VectorXd lambda_tilde(const AdmissibleSimplexParameterSet& params, const Eigen::VectorXd& mu) {
    require_simplex_point(mu, params.dim());
    Eigen::VectorXd lambda(params.dim() - 1);
    if (!pinv_solve(params.covariance_reduced(mu), params.drift_reduced(mu), lambda))
        throw std::domain_error(
            "lambda_tilde: residual above 1e-8 (state outside E or degenerate gamma)");
    return lambda;
}

DeflatorPath deflator_path(const AdmissibleSimplexParameterSet& params, const PathBundle& weights) {
    if (!weights.has_weights()) throw std::invalid_argument("deflator_path: bundle has no weights");
    if (weights.d != params.dim()) throw std::invalid_argument("deflator_path: dimension mismatch");
    const auto in_J = zero_face_drift(params);
    const int stored = weights.stored_steps();
    DeflatorPath out;
    out.times = weights.times;
    out.Z.setConstant(weights.n_paths, stored, std::numeric_limits<double>::quiet_NaN());
    for (int p = 0; p < weights.n_paths; ++p) {
        if (!weights.path_ok(p)) {
            out.invalid_paths.push_back(p);
            continue;
        }
        double logz = 0.0;
        out.Z(p, 0) = 1.0;
        DeflatorWorkspace ws;
        bool touched = false, invalid = false;
        for (int s = 0; s + 1 < stored && !invalid; ++s) {
            const double dt = weights.times[s + 1] - weights.times[s];
            double dlogz = 0.0;
            switch (deflator_increment(params, in_J, weights.weight_row(p, s),
                                       weights.weight_row(p, s + 1), dt, ws, dlogz)) {
                case StepOutcome::kOk:
                    logz += dlogz;
                    break;
                case StepOutcome::kFaceTouch:
                    touched = true;
                    break;
                case StepOutcome::kNonFinite:
                    invalid = true;
                    break;
            }
            if (!invalid) out.Z(p, s + 1) = std::exp(logz);
        }
        if (touched) out.face_touch_paths.push_back(p);
        if (invalid) out.invalid_paths.push_back(p);
    }
    return out;
}

WealthPath self_financing_wealth(const StrategyPath& strategy, const PathBundle& weights) {
    if (!weights.has_weights()) throw std::invalid_argument("self_financing_wealth: no weights");
    if (strategy.d != weights.d || strategy.n_paths != weights.n_paths ||
        strategy.times.size() != weights.times.size() ||
        (strategy.times - weights.times).cwiseAbs().maxCoeff() > 0.0)
        throw std::invalid_argument("self_financing_wealth: grid mismatch");
    const int stored = weights.stored_steps();
    WealthPath out;
    out.times = weights.times;
    out.Y.resize(weights.n_paths, stored);
    for (int p = 0; p < weights.n_paths; ++p) {
        double y = 1.0;
        out.Y(p, 0) = y;
        for (int s = 0; s + 1 < stored; ++s) {
            double dy = 0.0;
            for (int i = 0; i < weights.d; ++i)
                dy += strategy.at(p, s, i) * (weights.weight(p, s + 1, i) - weights.weight(p, s, i));
            y += dy;
            out.Y(p, s + 1) = y;
        }
    }
    return out;
}

Eigen::VectorXd theta_to_portfolio(const Eigen::VectorXd& theta, const Eigen::VectorXd& mu,
                                   double Y) {
    if (!(Y > 0.0)) throw std::invalid_argument("theta_to_portfolio: nonpositive wealth");
    require_simplex_point(mu, static_cast<int>(mu.size()));
    if (theta.size() != mu.size()) throw std::invalid_argument("theta_to_portfolio: size mismatch");
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        if (!(mu[i] > 0.0)) throw std::invalid_argument("theta_to_portfolio: boundary input");
    const double weighted = mu.dot(theta) / Y;
    Eigen::VectorXd pi(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i)
        pi[i] = mu[i] * (theta[i] / Y + 1.0 - weighted);
    return pi;
}

Eigen::VectorXd entropy_portfolio(const Eigen::VectorXd& mu) {
    require_simplex_point(mu, static_cast<int>(mu.size()));
    double H = 0.0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        if (!(mu[i] > 0.0)) throw std::invalid_argument("entropy_portfolio: boundary input");
        H -= mu[i] * std::log(mu[i]);
    }
    Eigen::VectorXd pi(mu.size());
    for (Eigen::Index i = 0; i < mu.size(); ++i) pi[i] = mu[i] * (1.0 - std::log(mu[i]) / H);
    return pi / pi.sum();
}

DeflatorRun run_deflator_mc(const AdmissibleSimplexParameterSet& params, const Eigen::VectorXd& mu0,
                            const PathConfig& config) {
    DeflatorObserver obs(params, config.n_paths);
    obs.set_dt(config.dt);
    simulate_weights(params, mu0, config, obs);
    return obs.finish();
}

MeanStderr superhedge_price_mc(const AdmissibleSimplexParameterSet& params, double horizon,
                               const Eigen::VectorXd& mu0, const PathConfig& config) {
    PathConfig cfg = config;
    cfg.horizon = horizon;
    return run_deflator_mc(params, mu0, cfg).z_mean;
}

SimplexPolynomial vanishing_indicator_polynomial(int d, int n) {
    if (n < 1) throw std::invalid_argument("vanishing_indicator_polynomial: n must be >= 1");
    SimplexPolynomial prod = SimplexPolynomial::constant(d, 1.0);
    for (int i = 0; i < d; ++i) prod = multiply(prod, SimplexPolynomial::coordinate(d, i));
    const double scale = std::pow(static_cast<double>(d), d);
    SimplexPolynomial inner = subtract(SimplexPolynomial::constant(d, 1.0), prod * scale);
    return subtract(SimplexPolynomial::constant(d, 1.0), pow(inner, n));
}

namespace {

// Fast value/gradient of a reduced polynomial with a per-call power table.
class PolyEvaluator {
public:
    PolyEvaluator(const Basis* basis, Eigen::VectorXd coeffs)
        : basis_(basis), coeffs_(std::move(coeffs)) {}

    // powers must be (d-1) x (k+1) scratch storage.
    void tabulate(const Eigen::VectorXd& x, Eigen::MatrixXd& powers) const {
        const int n = basis_->vars();
        const int k = basis_->max_degree();
        for (int j = 0; j < n; ++j) {
            powers(j, 0) = 1.0;
            for (int e = 1; e <= k; ++e) powers(j, e) = powers(j, e - 1) * x[j];
        }
    }

    double value(const Eigen::MatrixXd& powers) const {
        const int n = basis_->vars();
        double acc = 0.0;
        for (int idx = 0; idx < basis_->size(); ++idx) {
            const double c = coeffs_[idx];
            if (c == 0.0) continue;
            double term = c;
            const auto& exps = basis_->at(idx).exponents;
            for (int j = 0; j < n; ++j) term *= powers(j, exps[static_cast<std::size_t>(j)]);
            acc += term;
        }
        return acc;
    }

    void gradient(const Eigen::MatrixXd& powers, Eigen::VectorXd& grad) const {
        const int n = basis_->vars();
        grad.setZero();
        for (int idx = 0; idx < basis_->size(); ++idx) {
            const double c = coeffs_[idx];
            if (c == 0.0) continue;
            const auto& exps = basis_->at(idx).exponents;
            for (int j = 0; j < n; ++j) {
                const int e = exps[static_cast<std::size_t>(j)];
                if (e == 0) continue;
                double term = c * e * powers(j, e - 1);
                for (int l = 0; l < n; ++l)
                    if (l != j) term *= powers(l, exps[static_cast<std::size_t>(l)]);
                grad[j] += term;
            }
        }
    }

private:
    const Basis* basis_;
    Eigen::VectorXd coeffs_;
};

class ArbitrageObserver : public WeightPathObserver {
public:
    ArbitrageObserver(const Basis* basis, std::vector<PolyEvaluator> price_family, double price0,
                      int n_paths)
        : basis_(basis), family_(std::move(price_family)), price0_(price0),
          wealth_(static_cast<std::size_t>(n_paths), 1.0),
          ratio_(static_cast<std::size_t>(n_paths), std::numeric_limits<double>::quiet_NaN()),
          valid_(static_cast<std::size_t>(n_paths), 1) {}

    void begin_path(int path, const Eigen::VectorXd&) override {
        wealth_[static_cast<std::size_t>(path)] = 1.0;
    }

    void step(int path, int step, double /*t_next*/, const Eigen::VectorXd& prev,
              const Eigen::VectorXd& next) override {
        if (!valid_[static_cast<std::size_t>(path)]) return;
        thread_local Eigen::MatrixXd powers;
        thread_local Eigen::VectorXd grad;
        const int n = basis_->vars();
        if (powers.rows() != n || powers.cols() != basis_->max_degree() + 1)
            powers.resize(n, basis_->max_degree() + 1);
        if (grad.size() != n) grad.resize(n);
        const PolyEvaluator& pricer = family_[static_cast<std::size_t>(step)];
        pricer.tabulate(prev.head(n), powers);
        pricer.gradient(powers, grad);
        double dy = 0.0;
        for (int j = 0; j < n; ++j) dy += grad[j] * (next[j] - prev[j]);
        wealth_[static_cast<std::size_t>(path)] += dy / price0_;
        if (static_cast<std::size_t>(step) + 2 == family_.size()) {
            // Terminal payoff p_n(mu_T) evaluated with the horizon coefficients.
            pricer_terminal(next, path);
        }
    }

    void end_path(int path, bool ok) override {
        if (!ok) valid_[static_cast<std::size_t>(path)] = 0;
    }

    ArbitrageResult finish(int n_power) const {
        ArbitrageResult out;
        out.n = n_power;
        out.price0 = price0_;
        const int n_paths = static_cast<int>(wealth_.size());
        out.wealth_terminal.resize(n_paths);
        out.payoff_ratio.resize(n_paths);
        std::int64_t wins = 0, valid_count = 0;
        for (int p = 0; p < n_paths; ++p) {
            if (valid_[static_cast<std::size_t>(p)]) {
                out.wealth_terminal[p] = wealth_[static_cast<std::size_t>(p)];
                out.payoff_ratio[p] = ratio_[static_cast<std::size_t>(p)];
                ++valid_count;
                if (out.wealth_terminal[p] > 1.0) ++wins;
            } else {
                out.wealth_terminal[p] = std::numeric_limits<double>::quiet_NaN();
                out.payoff_ratio[p] = std::numeric_limits<double>::quiet_NaN();
                out.failed_paths.push_back(p);
            }
        }
        if (valid_count == 0) throw std::runtime_error("arbitrage: all paths failed");
        out.prob_outperform = static_cast<double>(wins) / static_cast<double>(valid_count);
        return out;
    }

private:
    void pricer_terminal(const Eigen::VectorXd& mu, int path) {
        thread_local Eigen::MatrixXd powers;
        const int n = basis_->vars();
        if (powers.rows() != n || powers.cols() != basis_->max_degree() + 1)
            powers.resize(n, basis_->max_degree() + 1);
        const PolyEvaluator& terminal = family_.back();
        terminal.tabulate(mu.head(n), powers);
        ratio_[static_cast<std::size_t>(path)] = terminal.value(powers) / price0_;
    }

    const Basis* basis_;
    std::vector<PolyEvaluator> family_;
    double price0_;
    std::vector<double> wealth_;
    std::vector<double> ratio_;
    std::vector<std::uint8_t> valid_;
};

}  // namespace

ArbitrageResult approximate_optimal_arbitrage(const AdmissibleSimplexParameterSet& params, int n,
                                              double horizon, const Eigen::VectorXd& mu0,
                                              const PathConfig& config,
                                              const SimplexPolynomial* payoff) {
    if (n < 1) throw std::invalid_argument("approximate_optimal_arbitrage: n must be >= 1");
    if (!classify_nupbr_arbitrage(params))
        throw std::invalid_argument(
            "approximate_optimal_arbitrage: classifier is false for these parameters");
    PathConfig cfg = config;
    cfg.horizon = horizon;
    cfg.validate();
    require_simplex_point(mu0, params.dim());

    const SimplexPolynomial p_n = payoff ? *payoff : vanishing_indicator_polynomial(params.dim(), n);
    DriftlessPolynomialPrice pricer(params, p_n, horizon);
    const GeneratorMatrix& gen = pricer.generator();
    const int steps = cfg.steps();

    // Coefficients of p_n(t_s, .) for every grid time, by backward recursion
    // with the one-step propagator exp(dt A0).
    const Eigen::MatrixXd step_propagator = expm(cfg.dt * gen.matrix());
    std::vector<Eigen::VectorXd> coeff_family(static_cast<std::size_t>(steps) + 1);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(gen.size());
    v.head(p_n.coeffs().size()) = p_n.coeffs();
    coeff_family[static_cast<std::size_t>(steps)] = v;
    for (int s = steps - 1; s >= 0; --s) {
        v = step_propagator * v;
        coeff_family[static_cast<std::size_t>(s)] = v;
    }

    const Basis* basis = &gen.basis();
    const double price0 =
        SimplexPolynomial(gen.dim(), gen.max_degree(), coeff_family[0]).evaluate(mu0);
    if (!(price0 > 0.0))
        throw std::domain_error("approximate_optimal_arbitrage: nonpositive initial price");

    std::vector<PolyEvaluator> family;
    family.reserve(coeff_family.size());
    for (auto& c : coeff_family) family.emplace_back(basis, std::move(c));

    ArbitrageObserver obs(basis, std::move(family), price0, cfg.n_paths);
    simulate_weights(params, mu0, cfg, obs);
    return obs.finish(n);
}

}  // namespace polymkt
