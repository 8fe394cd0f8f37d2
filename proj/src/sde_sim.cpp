#include "polymkt/sde_sim.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include "polymkt/rng.hpp"
#include "polymkt/simplex_poly.hpp"

namespace polymkt {

namespace {

constexpr std::uint32_t kWeightStream = 0;
constexpr std::uint32_t kSigmaStream = 1;

int resolved_threads(const PathConfig& cfg) {
    if (cfg.n_threads > 0) return cfg.n_threads;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : static_cast<int>(hw);
}

// Contiguous chunks of the path range, one worker per chunk. Workers write to
// disjoint per-path slots, so no synchronization is needed and the result does
// not depend on the worker count.
template <typename Fn>
void parallel_paths(int n_paths, int n_threads, Fn&& fn) {
    n_threads = std::max(1, std::min(n_threads, n_paths));
    if (n_threads == 1) {
        fn(0, n_paths);
        return;
    }
    std::vector<std::thread> workers;
    workers.reserve(static_cast<std::size_t>(n_threads));
    const int chunk = (n_paths + n_threads - 1) / n_threads;
    for (int w = 0; w < n_threads; ++w) {
        const int lo = w * chunk;
        const int hi = std::min(n_paths, lo + chunk);
        if (lo >= hi) break;
        workers.emplace_back([&fn, lo, hi] { fn(lo, hi); });
    }
    for (auto& t : workers) t.join();
}

struct StoredGrid {
    int steps = 0;
    int stride = 1;
    int n_stored = 0;

    StoredGrid(int steps_, int stride_) : steps(steps_), stride(stride_) {
        n_stored = steps / stride + 1 + (steps % stride != 0 ? 1 : 0);
    }
    bool stores(int step) const { return step % stride == 0 || step == steps; }
    int slot(int step) const {
        return (step == steps && steps % stride != 0) ? n_stored - 1 : step / stride;
    }
};

Eigen::VectorXd grid_times(const StoredGrid& g, double dt) {
    Eigen::VectorXd t(g.n_stored);
    for (int s = 0; s <= g.steps; ++s)
        if (g.stores(s)) t[g.slot(s)] = s * dt;
    return t;
}

void reserve_bundle(PathBundle& b, const PathConfig& cfg, const StoredGrid& g, int d,
                    bool with_weights, bool with_sigma, bool with_caps) {
    const std::size_t cells = static_cast<std::size_t>(cfg.n_paths) * static_cast<std::size_t>(g.n_stored);
    std::size_t bytes = 0;
    if (with_weights) bytes += cells * static_cast<std::size_t>(d) * sizeof(double);
    if (with_sigma) bytes += cells * sizeof(double);
    if (with_caps) bytes += cells * static_cast<std::size_t>(d) * sizeof(double);
    if (bytes > cfg.memory_cap_bytes)
        throw std::invalid_argument("PathConfig: stored paths exceed the memory cap; raise store_stride");
    b.times = grid_times(g, cfg.dt);
    b.n_paths = cfg.n_paths;
    b.d = with_weights || with_caps ? d : 0;
    b.seed = cfg.seed;
    b.dt = cfg.dt;
    const double nan = std::numeric_limits<double>::quiet_NaN();
    if (with_weights) b.weights.assign(cells * static_cast<std::size_t>(d), nan);
    if (with_sigma) b.sigma.assign(cells, nan);
    if (with_caps) b.caps.assign(cells * static_cast<std::size_t>(d), nan);
    if (with_weights || with_caps) b.min_weight.assign(static_cast<std::size_t>(cfg.n_paths), nan);
    if (with_sigma) b.min_sigma.assign(static_cast<std::size_t>(cfg.n_paths), nan);
}

// L = V sqrt(max(eigenvalues, 0)) so that L L^T equals the covariance.
template <int D>
void factor_covariance(const Eigen::MatrixXd& c, Eigen::MatrixXd& L) {
    if constexpr (D == Eigen::Dynamic) {
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
        L.noalias() = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    } else {
        Eigen::Matrix<double, D, D> cf = c;
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix<double, D, D>> es;
        es.computeDirect(cf);
        L.noalias() = es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
    }
}

using FactorFn = void (*)(const Eigen::MatrixXd&, Eigen::MatrixXd&);

FactorFn select_factor(int d) {
    switch (d) {
        case 2: return &factor_covariance<2>;
        case 3: return &factor_covariance<3>;
        case 4: return &factor_covariance<4>;
        default: return &factor_covariance<Eigen::Dynamic>;
    }
}

struct WeightRecorder {
    PathBundle* bundle = nullptr;
    const StoredGrid* grid = nullptr;

    void record(int path, int step, const Eigen::VectorXd& mu) const {
        if (!bundle || !grid->stores(step)) return;
        const int d = static_cast<int>(mu.size());
        const std::size_t base =
            (static_cast<std::size_t>(path) * static_cast<std::size_t>(grid->n_stored) +
             static_cast<std::size_t>(grid->slot(step))) * static_cast<std::size_t>(d);
        for (int i = 0; i < d; ++i) bundle->weights[base + static_cast<std::size_t>(i)] = mu[i];
    }
};

// One path of the projected Euler scheme for the weights. Returns false if the
// state became non-finite or degenerate (reported by the caller).
bool run_weight_path(const AdmissibleSimplexParameterSet& params, const Eigen::VectorXd& mu0,
                     const PathConfig& cfg, int path, FactorFn factor, const WeightRecorder& rec,
                     WeightPathObserver* obs, double& min_weight) {
    const int d = params.dim();
    const int steps = cfg.steps();
    const double dt = cfg.dt;
    const double sqrt_dt = std::sqrt(dt);
    const NormalStream noise(cfg.seed, static_cast<std::uint64_t>(path), kWeightStream);

    Eigen::VectorXd mu = mu0;
    Eigen::VectorXd next(d), b(d), xi(d);
    Eigen::MatrixXd c(d, d), L(d, d);

    min_weight = mu.minCoeff();
    rec.record(path, 0, mu);
    if (obs) obs->begin_path(path, mu);

    for (int s = 0; s < steps; ++s) {
        b.noalias() = params.B() * mu;
        b += params.beta();
        for (int i = 0; i < d; ++i) {
            double diag = 0.0;
            for (int j = 0; j < d; ++j) {
                if (j == i) continue;
                const double v = params.gamma()(i, j) * mu[i] * mu[j];
                c(i, j) = -v;
                diag += v;
            }
            c(i, i) = diag;
        }
        factor(c, L);
        noise.fill(static_cast<std::uint32_t>(s), xi.data(), d);
        next = mu + dt * b;
        next.noalias() += sqrt_dt * (L * xi);

        double sum = 0.0;
        for (int i = 0; i < d; ++i) {
            next[i] = std::min(1.0, std::max(0.0, next[i]));
            sum += next[i];
        }
        if (!(sum > 0.0) || !next.allFinite()) return false;
        next /= sum;

        min_weight = std::min(min_weight, next.minCoeff());
        rec.record(path, s + 1, next);
        if (obs) obs->step(path, s, (s + 1) * dt, mu, next);
        mu.swap(next);
    }
    return true;
}

// Scalar full-truncation Euler for the total capitalization along one path.
bool run_sigma_path(const TotalCapParams& tc, double sigma0, const PathConfig& cfg, int path,
                    double* stored, const StoredGrid& grid, double& min_sigma) {
    const int steps = cfg.steps();
    const double dt = cfg.dt;
    const double sqrt_dt = std::sqrt(dt);
    const bool floored = sigma_strictly_positive(tc);
    const NormalStream noise(cfg.seed, static_cast<std::uint64_t>(path), kSigmaStream);

    double x = sigma0;
    double xi = 0.0;
    min_sigma = x;
    if (stored) stored[grid.slot(0)] = x;
    for (int s = 0; s < steps; ++s) {
        const double pos = std::max(x, 0.0);
        noise.fill(static_cast<std::uint32_t>(s), &xi, 1);
        const double var = tc.phi * pos + tc.sigma * tc.sigma * pos * pos;
        x += (tc.kappa + tc.lambda * pos) * dt + std::sqrt(var) * sqrt_dt * xi;
        if (floored) x = std::max(x, 1e-12);
        if (!std::isfinite(x)) return false;
        min_sigma = std::min(min_sigma, x);
        if (stored && grid.stores(s + 1)) stored[grid.slot(s + 1)] = x;
    }
    return true;
}

void append_failed(PathBundle& b, const std::vector<std::uint8_t>& ok) {
    for (int p = 0; p < b.n_paths; ++p)
        if (!ok[static_cast<std::size_t>(p)]) b.failed_paths.push_back(p);
}

}  // namespace

void WeightPathObserver::begin_path(int, const Eigen::VectorXd&) {}
void WeightPathObserver::end_path(int, bool) {}

int PathConfig::steps() const {
    const double ratio = horizon / dt;
    const double rounded = std::round(ratio);
    if (!(rounded >= 1.0) || std::abs(ratio - rounded) > 16.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, ratio))
        throw std::invalid_argument("PathConfig: horizon must be an integer multiple of dt");
    return static_cast<int>(rounded);
}

void PathConfig::validate() const {
    if (!(dt > 0.0)) throw std::invalid_argument("PathConfig: dt must be > 0");
    if (!(horizon > 0.0)) throw std::invalid_argument("PathConfig: horizon must be > 0");
    if (n_paths < 1) throw std::invalid_argument("PathConfig: n_paths must be >= 1");
    if (store_stride < 1) throw std::invalid_argument("PathConfig: store_stride must be >= 1");
    (void)steps();
}

bool PathBundle::path_ok(int path) const {
    for (std::int32_t f : failed_paths)
        if (f == path) return false;
    return true;
}

Eigen::VectorXd PathBundle::weight_row(int path, int s) const {
    Eigen::VectorXd mu(d);
    for (int i = 0; i < d; ++i) mu[i] = weight(path, s, i);
    return mu;
}

void PathBundle::check_invariants() const {
    for (int p = 0; p < n_paths; ++p) {
        if (!path_ok(p)) continue;
        for (int s = 0; s < stored_steps(); ++s) {
            if (has_weights()) {
                double sum = 0.0;
                for (int i = 0; i < d; ++i) {
                    const double w = weight(p, s, i);
                    if (!(w >= 0.0 && w <= 1.0))
                        throw std::logic_error("PathBundle: weight outside [0,1]");
                    sum += w;
                }
                if (std::abs(sum - 1.0) > 1e-12)
                    throw std::logic_error("PathBundle: weights do not sum to 1");
            }
            if (has_sigma() && !(sigma_at(p, s) > 0.0))
                throw std::logic_error("PathBundle: nonpositive total capitalization");
            if (has_caps() && has_sigma() && has_weights()) {
                for (int i = 0; i < d; ++i) {
                    const double expect = weight(p, s, i) * sigma_at(p, s);
                    if (std::abs(cap(p, s, i) - expect) > 1e-12 * std::max(1.0, std::abs(expect)))
                        throw std::logic_error("PathBundle: caps != weights * sigma");
                }
            }
        }
    }
}

PathBundle simulate_weights(const AdmissibleSimplexParameterSet& params, const Eigen::VectorXd& mu0,
                            const PathConfig& config) {
    config.validate();
    require_simplex_point(mu0, params.dim());
    const StoredGrid grid(config.steps(), config.store_stride);
    PathBundle out;
    reserve_bundle(out, config, grid, params.dim(), true, false, false);
    WeightRecorder rec{&out, &grid};
    FactorFn factor = select_factor(params.dim());
    std::vector<std::uint8_t> ok(static_cast<std::size_t>(config.n_paths), 1);
    parallel_paths(config.n_paths, resolved_threads(config), [&](int lo, int hi) {
        for (int p = lo; p < hi; ++p) {
            double mw = 0.0;
            ok[static_cast<std::size_t>(p)] =
                run_weight_path(params, mu0, config, p, factor, rec, nullptr, mw) ? 1 : 0;
            out.min_weight[static_cast<std::size_t>(p)] = mw;
        }
    });
    append_failed(out, ok);
    return out;
}

void simulate_weights(const AdmissibleSimplexParameterSet& params, const Eigen::VectorXd& mu0,
                      const PathConfig& config, WeightPathObserver& observer) {
    config.validate();
    require_simplex_point(mu0, params.dim());
    const StoredGrid grid(config.steps(), config.store_stride);
    WeightRecorder rec{nullptr, &grid};
    FactorFn factor = select_factor(params.dim());
    parallel_paths(config.n_paths, resolved_threads(config), [&](int lo, int hi) {
        for (int p = lo; p < hi; ++p) {
            double mw = 0.0;
            const bool path_ok = run_weight_path(params, mu0, config, p, factor, rec, &observer, mw);
            observer.end_path(p, path_ok);
        }
    });
}

PathBundle simulate_total_cap(const TotalCapParams& tc, double sigma0, const PathConfig& config) {
    config.validate();
    if (!(sigma0 > 0.0)) throw std::invalid_argument("simulate_total_cap: Sigma_0 must be > 0");
    const StoredGrid grid(config.steps(), config.store_stride);
    PathBundle out;
    reserve_bundle(out, config, grid, 0, false, true, false);
    std::vector<std::uint8_t> ok(static_cast<std::size_t>(config.n_paths), 1);
    parallel_paths(config.n_paths, resolved_threads(config), [&](int lo, int hi) {
        for (int p = lo; p < hi; ++p) {
            double ms = 0.0;
            double* slot = out.sigma.data() + static_cast<std::size_t>(p) * static_cast<std::size_t>(grid.n_stored);
            ok[static_cast<std::size_t>(p)] = run_sigma_path(tc, sigma0, config, p, slot, grid, ms) ? 1 : 0;
            out.min_sigma[static_cast<std::size_t>(p)] = ms;
        }
    });
    append_failed(out, ok);
    return out;
}

PathBundle simulate_joint(const JointModelSpec& spec, const Eigen::VectorXd& mu0, double sigma0,
                          const PathConfig& config) {
    config.validate();
    require_simplex_point(mu0, spec.simplex.dim());
    if (!(sigma0 > 0.0)) throw std::invalid_argument("simulate_joint: Sigma_0 must be > 0");
    const int d = spec.simplex.dim();
    const StoredGrid grid(config.steps(), config.store_stride);
    PathBundle out;
    reserve_bundle(out, config, grid, d, true, true, true);
    WeightRecorder rec{&out, &grid};
    FactorFn factor = select_factor(d);
    std::vector<std::uint8_t> ok(static_cast<std::size_t>(config.n_paths), 1);
    parallel_paths(config.n_paths, resolved_threads(config), [&](int lo, int hi) {
        for (int p = lo; p < hi; ++p) {
            double mw = 0.0, ms = 0.0;
            double* slot = out.sigma.data() + static_cast<std::size_t>(p) * static_cast<std::size_t>(grid.n_stored);
            const bool w_ok = run_weight_path(spec.simplex, mu0, config, p, factor, rec, nullptr, mw);
            const bool s_ok = run_sigma_path(spec.totalcap, sigma0, config, p, slot, grid, ms);
            out.min_weight[static_cast<std::size_t>(p)] = mw;
            out.min_sigma[static_cast<std::size_t>(p)] = ms;
            ok[static_cast<std::size_t>(p)] = (w_ok && s_ok) ? 1 : 0;
            if (w_ok && s_ok) {
                const std::size_t base =
                    static_cast<std::size_t>(p) * static_cast<std::size_t>(grid.n_stored) * static_cast<std::size_t>(d);
                for (int s = 0; s < grid.n_stored; ++s)
                    for (int i = 0; i < d; ++i)
                        out.caps[base + static_cast<std::size_t>(s) * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] =
                            out.weights[base + static_cast<std::size_t>(s) * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] *
                            slot[s];
            }
        }
    });
    append_failed(out, ok);
    return out;
}

PathBundle simulate_vsm_assets(const VSMSpec& spec, const Eigen::VectorXd& S0,
                               const PathConfig& config) {
    config.validate();
    const VSMSpec vs = VSMSpec::validated(spec.alpha, spec.d);
    const int d = vs.d;
    if (S0.size() != d) throw std::invalid_argument("simulate_vsm_assets: S_0 has wrong length");
    for (int i = 0; i < d; ++i)
        if (!(S0[i] > 0.0)) throw std::invalid_argument("simulate_vsm_assets: S_0 must be > 0");

    const StoredGrid grid(config.steps(), config.store_stride);
    PathBundle out;
    reserve_bundle(out, config, grid, d, true, true, true);
    const int steps = config.steps();
    const double dt = config.dt;
    const double sqrt_dt = std::sqrt(dt);
    const double rate = 0.5 * (1.0 + vs.alpha);
    std::vector<std::uint8_t> ok(static_cast<std::size_t>(config.n_paths), 1);

    parallel_paths(config.n_paths, resolved_threads(config), [&](int lo, int hi) {
        Eigen::VectorXd S(d), xi(d), clamped(d);
        for (int p = lo; p < hi; ++p) {
            const NormalStream noise(config.seed, static_cast<std::uint64_t>(p), kWeightStream);
            S = S0;
            double mw = std::numeric_limits<double>::infinity();
            bool good = true;
            auto store = [&](int step) {
                if (!grid.stores(step)) return;
                double total = 0.0;
                for (int i = 0; i < d; ++i) {
                    clamped[i] = std::max(S[i], 0.0);
                    total += clamped[i];
                }
                const std::size_t row =
                    static_cast<std::size_t>(p) * static_cast<std::size_t>(grid.n_stored) + static_cast<std::size_t>(grid.slot(step));
                out.sigma[row] = total;
                for (int i = 0; i < d; ++i) {
                    out.caps[row * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] = clamped[i];
                    out.weights[row * static_cast<std::size_t>(d) + static_cast<std::size_t>(i)] = clamped[i] / total;
                }
            };
            store(0);
            {
                double total = S.sum();
                for (int i = 0; i < d; ++i) mw = std::min(mw, S[i] / total);
            }
            for (int s = 0; s < steps && good; ++s) {
                double total = 0.0;
                for (int i = 0; i < d; ++i) total += std::max(S[i], 0.0);
                noise.fill(static_cast<std::uint32_t>(s), xi.data(), d);
                for (int i = 0; i < d; ++i) {
                    const double pos = std::max(S[i], 0.0);
                    S[i] += rate * total * dt + std::sqrt(pos * total) * sqrt_dt * xi[i];
                }
                if (!S.allFinite()) {
                    good = false;
                    break;
                }
                double tot_next = 0.0;
                for (int i = 0; i < d; ++i) tot_next += std::max(S[i], 0.0);
                if (!(tot_next > 0.0)) {
                    good = false;
                    break;
                }
                for (int i = 0; i < d; ++i) mw = std::min(mw, std::max(S[i], 0.0) / tot_next);
                store(s + 1);
            }
            ok[static_cast<std::size_t>(p)] = good ? 1 : 0;
            out.min_weight[static_cast<std::size_t>(p)] = mw;
            double msig = std::numeric_limits<double>::infinity();
            if (good) {
                const std::size_t base = static_cast<std::size_t>(p) * static_cast<std::size_t>(grid.n_stored);
                for (int s = 0; s < grid.n_stored; ++s) msig = std::min(msig, out.sigma[base + static_cast<std::size_t>(s)]);
            }
            out.min_sigma[static_cast<std::size_t>(p)] = msig;
        }
    });
    append_failed(out, ok);
    return out;
}

}  // namespace polymkt
