// Batch CLI for polynomial market weight models: parameter validation and
// classification, Monte Carlo simulation, moment computation via the
// generator matrix exponential, deflator statistics, approximate optimal
// arbitrage, and calibration from capitalization time series.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "polymkt/calibration.hpp"
#include "polymkt/deflator.hpp"
#include "polymkt/generator.hpp"
#include "polymkt/io.hpp"
#include "polymkt/model_params.hpp"
#include "polymkt/sde_sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace polymkt;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitValidation = 1;
constexpr int kExitNumeric = 2;
constexpr int kExitIo = 3;

struct CommonOpts {
    std::string params_path;
    std::string out_dir = ".";
    std::uint64_t seed = 0;
    double dt = 1e-3;
    double horizon = 1.0;
    int n_paths = 10000;
    int degree = 0;
    int stride = 1;
    int threads = 0;
    std::string format = "csv";
    std::string mu0_csv;
    std::string s0_csv;
    double sigma0 = 1.0;
    bool sigma0_given = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_paths = true) {
    cmd->add_option("--params", o.params_path, "model parameter JSON file")->envname("POLYMKT_PARAMS");
    cmd->add_option("--out", o.out_dir, "output directory")->envname("POLYMKT_OUT");
    if (with_paths) {
        cmd->add_option("--seed", o.seed, "RNG seed (64-bit)")->envname("POLYMKT_SEED");
        cmd->add_option("--dt", o.dt, "time step in years")->envname("POLYMKT_DT");
        cmd->add_option("--T", o.horizon, "horizon in years")->envname("POLYMKT_T");
        cmd->add_option("--paths", o.n_paths, "number of Monte Carlo paths")->envname("POLYMKT_PATHS");
        cmd->add_option("--stride", o.stride, "storage stride between grid points");
        cmd->add_option("--threads", o.threads, "worker threads (0 = hardware)")->envname("POLYMKT_THREADS");
        cmd->add_option("--format", o.format, "path dump format: csv|binary")->envname("POLYMKT_FORMAT");
        cmd->add_option("--mu0", o.mu0_csv, "initial weights, comma separated");
        cmd->add_option("--s0", o.s0_csv, "initial capitalizations, comma separated");
        cmd->add_option("--sigma0", o.sigma0, "initial total capitalization");
    }
    cmd->add_option("--degree", o.degree, "polynomial degree cap")->envname("POLYMKT_DEGREE");
}

Eigen::VectorXd parse_csv_vector(const std::string& text) {
    std::vector<double> vals;
    std::stringstream ss(text);
    std::string cell;
    while (std::getline(ss, cell, ',')) vals.push_back(std::stod(cell));
    Eigen::VectorXd v(static_cast<Eigen::Index>(vals.size()));
    for (std::size_t i = 0; i < vals.size(); ++i) v[static_cast<Eigen::Index>(i)] = vals[i];
    return v;
}

std::uint64_t resolve_seed(const CommonOpts& o, const CLI::App* cmd) {
    if (cmd->count("--seed") > 0 || std::getenv("POLYMKT_SEED") != nullptr) return o.seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

PathConfig make_config(const CommonOpts& o, std::uint64_t seed) {
    PathConfig cfg;
    cfg.dt = o.dt;
    cfg.horizon = o.horizon;
    cfg.n_paths = o.n_paths;
    cfg.seed = seed;
    cfg.store_stride = o.stride;
    cfg.n_threads = o.threads;
    cfg.validate();
    return cfg;
}

Eigen::VectorXd resolve_mu0(const CommonOpts& o, const ParamsFile& pf, int d) {
    if (!o.mu0_csv.empty()) return parse_csv_vector(o.mu0_csv);
    if (pf.mu0) return *pf.mu0;
    return Eigen::VectorXd::Constant(d, 1.0 / d);
}

json matrix_json(const Eigen::MatrixXd& m) {
    json j = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        j.push_back(row);
    }
    return j;
}

class ManifestWriter {
public:
    ManifestWriter(std::string command, std::string out_dir)
        : command_(std::move(command)), out_dir_(std::move(out_dir)),
          start_(std::chrono::steady_clock::now()) {
        fs::create_directories(out_dir_);
    }

    std::string artifact(const std::string& name) {
        const std::string p = (fs::path(out_dir_) / name).string();
        artifacts_.push_back(p);
        return p;
    }

    json& config() { return config_; }

    void write() const {
        json m;
        m["tool"] = "polymkt";
        m["version"] = kVersion;
        m["command"] = command_;
        m["config"] = config_;
        m["artifacts"] = artifacts_;
        const auto elapsed = std::chrono::steady_clock::now() - start_;
        m["wall_clock_sec"] = std::chrono::duration<double>(elapsed).count();
        write_text_file((fs::path(out_dir_) / "manifest.json").string(), m.dump(2) + "\n");
    }

private:
    std::string command_;
    std::string out_dir_;
    json config_;
    std::vector<std::string> artifacts_;
    std::chrono::steady_clock::time_point start_;
};

void fill_run_config(json& cfg, const CommonOpts& o, std::uint64_t seed) {
    cfg["params"] = o.params_path;
    cfg["seed"] = seed;
    cfg["dt"] = o.dt;
    cfg["T"] = o.horizon;
    cfg["paths"] = o.n_paths;
    cfg["stride"] = o.stride;
    cfg["format"] = o.format;
    cfg["degree"] = o.degree;
}

int run_validate(const CommonOpts& o) {
    const RawParams raw = load_raw_params_file(o.params_path);
    ValidationReport report = AdmissibleSimplexParameterSet::validate(raw.beta, raw.B, raw.gamma);
    if (raw.totalcap) {
        ValidationReport tc = TotalCapParams::validate(raw.totalcap->kappa, raw.totalcap->phi,
                                                       raw.totalcap->lambda, raw.totalcap->sigma);
        for (auto& v : tc.violations) report.violations.push_back(std::move(v));
    }
    ManifestWriter manifest("validate", o.out_dir);
    manifest.config()["params"] = o.params_path;
    json out;
    out["valid"] = report.ok();
    out["violations"] = json::array();
    for (const auto& v : report.violations)
        out["violations"].push_back({{"code", v.code}, {"message", v.message}, {"i", v.i}, {"j", v.j}});
    write_text_file(manifest.artifact("validate.json"), out.dump(2) + "\n");
    manifest.write();
    if (report.ok()) {
        std::cout << "valid\n";
        return 0;
    }
    std::cout << report.to_string() << "\n";
    json err;
    err["error"] = {{"code", kExitValidation}, {"type", "validation"}, {"message", report.to_string()}};
    std::cerr << err.dump() << "\n";
    return kExitValidation;
}

int run_classify(const CommonOpts& o) {
    const ParamsFile pf = load_params_file(o.params_path);
    const auto& p = pf.simplex;
    ManifestWriter manifest("classify", o.out_dir);
    manifest.config()["params"] = o.params_path;

    json out;
    out["d"] = p.dim();
    json faces = json::array();
    for (int i = 0; i < p.dim(); ++i) faces.push_back(boundary_attained(p, i));
    out["boundary_attained"] = faces;
    out["nupbr_and_arbitrage"] = classify_nupbr_arbitrage(p);
    out["excess_growth_lower_bound"] = excess_growth_lower_bound(p);
    if (pf.totalcap) out["sigma_strictly_positive"] = sigma_strictly_positive(*pf.totalcap);
    write_text_file(manifest.artifact("classify.json"), out.dump(2) + "\n");
    manifest.write();

    std::cout << "NUPBR + strong relative arbitrage: "
              << (out["nupbr_and_arbitrage"].get<bool>() ? "true" : "false") << "\n";
    std::cout << "excess growth lower bound: " << out["excess_growth_lower_bound"].get<double>()
              << "\n";
    for (int i = 0; i < p.dim(); ++i)
        std::cout << "face {mu_" << i + 1 << "=0}: "
                  << (faces[static_cast<std::size_t>(i)].get<bool>() ? "attainable" : "not attainable")
                  << "\n";
    return 0;
}

int run_simulate(const CommonOpts& o, const CLI::App* cmd, const std::string& mode) {
    const ParamsFile pf = load_params_file(o.params_path);
    const std::uint64_t seed = resolve_seed(o, cmd);
    const PathConfig cfg = make_config(o, seed);

    std::string resolved_mode = mode;
    if (resolved_mode == "auto") resolved_mode = pf.totalcap ? "joint" : "weights";

    PathBundle bundle;
    if (resolved_mode == "weights") {
        bundle = simulate_weights(pf.simplex, resolve_mu0(o, pf, pf.simplex.dim()), cfg);
    } else if (resolved_mode == "joint") {
        if (!pf.totalcap) throw std::invalid_argument("simulate: joint mode needs totalcap parameters");
        const double sigma0 = pf.sigma0 && !o.sigma0_given ? *pf.sigma0 : o.sigma0;
        bundle = simulate_joint(JointModelSpec{pf.simplex, *pf.totalcap},
                                resolve_mu0(o, pf, pf.simplex.dim()), sigma0, cfg);
    } else if (resolved_mode == "vsm-assets") {
        if (!pf.vsm) throw std::invalid_argument("simulate: vsm-assets mode needs the vsm shorthand");
        Eigen::VectorXd s0;
        if (!o.s0_csv.empty())
            s0 = parse_csv_vector(o.s0_csv);
        else if (pf.s0)
            s0 = *pf.s0;
        else
            throw std::invalid_argument("simulate: vsm-assets mode needs --s0");
        bundle = simulate_vsm_assets(*pf.vsm, s0, cfg);
    } else {
        throw std::invalid_argument("simulate: unknown mode " + resolved_mode);
    }

    ManifestWriter manifest("simulate", o.out_dir);
    fill_run_config(manifest.config(), o, seed);
    manifest.config()["mode"] = resolved_mode;
    manifest.config()["failed_paths"] = bundle.failed_paths.size();
    if (o.format == "binary")
        write_paths_binary(manifest.artifact("paths.bin"), bundle);
    else
        write_paths_csv(manifest.artifact("paths.csv"), bundle);
    manifest.write();
    std::cout << "simulated " << cfg.n_paths << " paths, " << cfg.steps() << " steps, seed " << seed
              << "\n";
    return 0;
}

int run_moments(const CommonOpts& o, const std::string& poly_path, const std::string& t_list) {
    const ParamsFile pf = load_params_file(o.params_path);
    const SimplexPolynomial p = load_polynomial_file(poly_path);
    const Eigen::VectorXd mu0 = resolve_mu0(o, pf, pf.simplex.dim());
    const Eigen::VectorXd ts = parse_csv_vector(t_list);
    const int degree = std::max(o.degree, p.degree());
    const GeneratorMatrix gen = build_generator(pf.simplex, degree);

    ManifestWriter manifest("moments", o.out_dir);
    manifest.config()["params"] = o.params_path;
    manifest.config()["poly"] = poly_path;
    manifest.config()["t"] = t_list;
    manifest.config()["degree"] = degree;

    std::ostringstream csv;
    csv.precision(17);
    csv << "t,moment\n";
    for (Eigen::Index i = 0; i < ts.size(); ++i)
        csv << ts[i] << "," << conditional_moment(gen, p, ts[i], mu0) << "\n";
    write_text_file(manifest.artifact("moments.csv"), csv.str());
    manifest.write();
    std::cout << csv.str();
    return 0;
}

int run_deflator(const CommonOpts& o, const CLI::App* cmd, bool per_path) {
    const ParamsFile pf = load_params_file(o.params_path);
    const std::uint64_t seed = resolve_seed(o, cmd);
    const PathConfig cfg = make_config(o, seed);
    const Eigen::VectorXd mu0 = resolve_mu0(o, pf, pf.simplex.dim());

    const DeflatorRun run = run_deflator_mc(pf.simplex, mu0, cfg);

    ManifestWriter manifest("deflator", o.out_dir);
    fill_run_config(manifest.config(), o, seed);
    std::ostringstream csv;
    csv.precision(17);
    csv << "n_paths,valid_paths,mean_Z_T,stderr_Z_T\n";
    csv << cfg.n_paths << "," << run.z_mean.count << "," << run.z_mean.mean << ","
        << run.z_mean.stderr_ << "\n";
    write_text_file(manifest.artifact("deflator.csv"), csv.str());
    if (per_path) {
        std::ostringstream pp;
        pp.precision(17);
        pp << "path,Z_T\n";
        for (Eigen::Index p = 0; p < run.z_terminal.size(); ++p)
            pp << p << "," << run.z_terminal[p] << "\n";
        write_text_file(manifest.artifact("deflator_paths.csv"), pp.str());
    }
    manifest.write();
    std::cout << "mean Z_T = " << run.z_mean.mean << " (stderr " << run.z_mean.stderr_ << ", "
              << run.z_mean.count << " valid paths)\n";
    return 0;
}

int run_arbitrage(const CommonOpts& o, const CLI::App* cmd, const std::string& n_list,
                  bool per_path) {
    const ParamsFile pf = load_params_file(o.params_path);
    const std::uint64_t seed = resolve_seed(o, cmd);
    const PathConfig cfg = make_config(o, seed);
    const Eigen::VectorXd mu0 = resolve_mu0(o, pf, pf.simplex.dim());

    const MeanStderr u_t = superhedge_price_mc(pf.simplex, cfg.horizon, mu0, cfg);

    ManifestWriter manifest("arbitrage", o.out_dir);
    fill_run_config(manifest.config(), o, seed);
    manifest.config()["n"] = n_list;

    std::ostringstream csv;
    csv.precision(17);
    csv << "n,prob_outperform,price0,u_t_estimate,u_t_stderr\n";
    const Eigen::VectorXd ns = parse_csv_vector(n_list);
    for (Eigen::Index i = 0; i < ns.size(); ++i) {
        const int n = static_cast<int>(ns[i]);
        const ArbitrageResult res = approximate_optimal_arbitrage(pf.simplex, n, cfg.horizon, mu0, cfg);
        csv << n << "," << res.prob_outperform << "," << res.price0 << "," << u_t.mean << ","
            << u_t.stderr_ << "\n";
        if (per_path) {
            std::ostringstream pp;
            pp.precision(17);
            pp << "path,Y_T,payoff_ratio\n";
            for (Eigen::Index p = 0; p < res.wealth_terminal.size(); ++p)
                pp << p << "," << res.wealth_terminal[p] << "," << res.payoff_ratio[p] << "\n";
            write_text_file(manifest.artifact("arbitrage_paths_n" + std::to_string(n) + ".csv"),
                            pp.str());
        }
    }
    write_text_file(manifest.artifact("arbitrage.csv"), csv.str());
    manifest.write();
    std::cout << csv.str();
    return 0;
}

int run_calibrate(const CommonOpts& o, const std::string& input, const std::string& time_unit,
                  bool with_drift) {
    const TimeSeriesCsv ts = read_timeseries_csv(input, time_unit == "seconds");
    WeightTimeSeries weights =
        ts.is_weights ? WeightTimeSeries::validated(ts.times, ts.values)
                      : caps_to_weights(CapTimeSeries::validated(ts.times, ts.values));

    const GammaEstimate gamma = estimate_gamma(weights);

    ManifestWriter manifest("calibrate", o.out_dir);
    manifest.config()["input"] = input;
    manifest.config()["time_unit"] = time_unit;
    manifest.config()["dropped_rows"] = ts.dropped_rows;

    json se;
    se["gamma_se"] = matrix_json(gamma.standard_errors);
    se["clipped_negative"] = gamma.clipped_negative;
    se["dropped_rows"] = ts.dropped_rows;
    se["span"] = gamma.span;

    const int d = static_cast<int>(gamma.gamma_hat.rows());
    Eigen::VectorXd beta = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd B = Eigen::MatrixXd::Zero(d, d);
    if (with_drift) {
        const DriftEstimate drift = estimate_drift(weights, gamma.gamma_hat);
        beta = drift.beta_hat;
        B = drift.B_hat;
        se["W_se"] = matrix_json(drift.W_standard_errors);
        se["projected"] = drift.projected;
    }
    write_text_file(manifest.artifact("calibrated_params.json"),
                    params_to_json(beta, B, gamma.gamma_hat, std::nullopt) + "\n");
    write_text_file(manifest.artifact("calibrated_params.se.json"), se.dump(2) + "\n");
    manifest.write();
    std::cout << "calibrated d=" << d << " over span " << gamma.span << " (clipped "
              << gamma.clipped_negative << " negative gamma entries)\n";
    return 0;
}

int fail_with(int code, const char* type, const std::string& message) {
    json err;
    err["error"] = {{"code", code}, {"type", type}, {"message", message}};
    std::cerr << err.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"polynomial market weight and asset price models"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    CommonOpts o;
    std::string mode = "auto";
    std::string poly_path;
    std::string t_list = "1";
    std::string n_list = "4,8,16";
    std::string input_csv;
    std::string time_unit = "years";
    bool per_path = false;
    bool no_drift = false;

    CLI::App* validate = app.add_subcommand("validate", "check parameter admissibility");
    add_common(validate, o, false);

    CLI::App* classify = app.add_subcommand("classify", "boundary / arbitrage / growth classifiers");
    add_common(classify, o, false);

    CLI::App* simulate = app.add_subcommand("simulate", "Monte Carlo path simulation");
    add_common(simulate, o);
    simulate->add_option("--mode", mode, "weights|joint|vsm-assets|auto");

    CLI::App* moments = app.add_subcommand("moments", "conditional moments via matrix exponentials");
    add_common(moments, o);
    moments->add_option("--poly", poly_path, "polynomial JSON file")->required();
    moments->add_option("--t", t_list, "comma-separated horizons");

    CLI::App* deflator = app.add_subcommand("deflator", "local martingale deflator statistics");
    add_common(deflator, o);
    deflator->add_flag("--per-path", per_path, "write per-path terminal values");

    CLI::App* arbitrage = app.add_subcommand("arbitrage", "approximate optimal arbitrage");
    add_common(arbitrage, o);
    arbitrage->add_option("--n", n_list, "comma-separated polynomial orders");
    arbitrage->add_flag("--per-path", per_path, "write per-path terminal values");

    CLI::App* calibrate = app.add_subcommand("calibrate", "estimate (gamma, beta, B) from a CSV");
    add_common(calibrate, o, false);
    calibrate->add_option("--input", input_csv, "time series CSV")->required();
    calibrate->add_option("--time-unit", time_unit, "numeric time column unit: years|seconds");
    calibrate->add_flag("--no-drift", no_drift, "estimate gamma only");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
        app.exit(e);
        return fail_with(kExitValidation, "validation", e.what());
    }

    o.sigma0_given = simulate->count("--sigma0") > 0;

    try {
        if (validate->parsed()) return run_validate(o);
        if (classify->parsed()) return run_classify(o);
        if (simulate->parsed()) return run_simulate(o, simulate, mode);
        if (moments->parsed()) return run_moments(o, poly_path, t_list);
        if (deflator->parsed()) return run_deflator(o, deflator, per_path);
        if (arbitrage->parsed()) return run_arbitrage(o, arbitrage, n_list, per_path);
        if (calibrate->parsed()) return run_calibrate(o, input_csv, time_unit, !no_drift);
    } catch (const IoError& e) {
        return fail_with(kExitIo, "io", e.what());
    } catch (const std::invalid_argument& e) {
        return fail_with(kExitValidation, "validation", e.what());
    } catch (const std::domain_error& e) {
        return fail_with(kExitNumeric, "numeric", e.what());
    } catch (const std::exception& e) {
        return fail_with(kExitNumeric, "numeric", e.what());
    }
    return 0;
}
