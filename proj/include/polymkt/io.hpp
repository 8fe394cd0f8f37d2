#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>

#include "polymkt/calibration.hpp"
#include "polymkt/model_params.hpp"
#include "polymkt/sde_sim.hpp"
#include "polymkt/simplex_poly.hpp"

namespace polymkt {

/// I/O failures distinct from validation/numerics for exit-code mapping.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Parsed parameter file. Either the explicit {"d", "beta", "B", "gamma",
/// "totalcap"?} form or the {"vsm": {"alpha", "d"}} shorthand; optional
/// initial state entries "mu0", "sigma0", "s0".
struct ParamsFile {
    AdmissibleSimplexParameterSet simplex;
    std::optional<TotalCapParams> totalcap;
    std::optional<VSMSpec> vsm;
    std::optional<Eigen::VectorXd> mu0;
    std::optional<double> sigma0;
    std::optional<Eigen::VectorXd> s0;
};

ParamsFile load_params_file(const std::string& path);
ParamsFile parse_params_json(const std::string& text);

/// Unvalidated parameter fields, for producing full validation reports.
struct RawParams {
    Eigen::VectorXd beta;
    Eigen::MatrixXd B;
    Eigen::MatrixXd gamma;
    std::optional<TotalCapParams> totalcap;
    bool from_vsm = false;
};

RawParams parse_raw_params_json(const std::string& text);
RawParams load_raw_params_file(const std::string& path);

std::string params_to_json(const Eigen::VectorXd& beta, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& gamma,
                           const std::optional<TotalCapParams>& totalcap);

/// Polynomial literal {"dim": d, "terms": [{"exps": [...], "coef": c}, ...]}
/// in full coordinates; reduced on load.
SimplexPolynomial load_polynomial_file(const std::string& path);
SimplexPolynomial parse_polynomial_json(const std::string& text);

/// CSV dump: header path,step,time,mu_1..mu_d[,Sigma][,S_1..S_d].
void write_paths_csv(const std::string& path, const PathBundle& bundle);

/// Binary dump; layout (all little-endian):
///   magic "PMKTPATH", u32 version = 1, u32 flags (1 weights | 2 sigma | 4 caps),
///   u64 seed, u32 n_paths, u32 n_stored, u32 d, f64 dt,
///   times[n_stored] f64,
///   weights[n_paths * n_stored * d] f64 row-major (when present),
///   sigma[n_paths * n_stored] f64 (when present),
///   caps[n_paths * n_stored * d] f64 row-major (when present).
void write_paths_binary(const std::string& path, const PathBundle& bundle);
PathBundle read_paths_binary(const std::string& path);

/// Time-series CSV with header time,cap_1..cap_d or time,mu_1..mu_d.
/// The time column accepts RFC3339 timestamps (converted to years) or plain
/// numbers (interpreted as years, or seconds when seconds_to_years is set).
/// Rows with missing or unparseable cells are dropped, never interpolated.
struct TimeSeriesCsv {
    Eigen::VectorXd times;  // years
    Eigen::MatrixXd values;
    bool is_weights = false;
    int dropped_rows = 0;
};

TimeSeriesCsv read_timeseries_csv(const std::string& path, bool seconds_to_years = false);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace polymkt
