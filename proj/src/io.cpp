#include "polymkt/io.hpp"

#include <cmath>
#include <cstring>
#include <ctime>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace polymkt {

namespace {

using nlohmann::json;

constexpr double kSecondsPerYear = 31557600.0;  // Julian year

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

Eigen::VectorXd vector_from_json(const json& j) {
    Eigen::VectorXd v(j.size());
    Eigen::Index i = 0;
    for (const auto& x : j) v[i++] = x.get<double>();
    return v;
}

Eigen::MatrixXd matrix_from_json(const json& j) {
    const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
    if (rows == 0) throw IoError("empty matrix in JSON");
    const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
    Eigen::MatrixXd m(rows, cols);
    Eigen::Index r = 0;
    for (const auto& row : j) {
        if (static_cast<Eigen::Index>(row.size()) != cols) throw IoError("ragged matrix in JSON");
        Eigen::Index c = 0;
        for (const auto& x : row) m(r, c++) = x.get<double>();
        ++r;
    }
    return m;
}

json vector_to_json(const Eigen::VectorXd& v) {
    json j = json::array();
    for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v[i]);
    return j;
}

json matrix_to_json(const Eigen::MatrixXd& m) {
    json j = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        j.push_back(row);
    }
    return j;
}

// RFC3339: YYYY-MM-DD[T ]HH:MM:SS[.frac][Z|+hh:mm|-hh:mm]. Returns epoch seconds.
std::optional<double> parse_rfc3339(const std::string& s) {
    int year, month, day, hour, minute;
    double second;
    char sep;
    int consumed = 0;
    if (std::sscanf(s.c_str(), "%4d-%2d-%2d%c%2d:%2d:%lf%n", &year, &month, &day, &sep, &hour,
                    &minute, &second, &consumed) != 7)
        return std::nullopt;
    if (sep != 'T' && sep != 't' && sep != ' ') return std::nullopt;
    std::tm tm{};
    tm.tm_year = year - 1900;
    tm.tm_mon = month - 1;
    tm.tm_mday = day;
    tm.tm_hour = hour;
    tm.tm_min = minute;
    tm.tm_sec = 0;
    double epoch = static_cast<double>(timegm(&tm)) + second;
    const char* rest = s.c_str() + consumed;
    if (*rest == 'Z' || *rest == 'z' || *rest == '\0') return epoch;
    int oh, om;
    char sign;
    if (std::sscanf(rest, "%c%2d:%2d", &sign, &oh, &om) == 3 && (sign == '+' || sign == '-')) {
        const double offset = oh * 3600.0 + om * 60.0;
        return sign == '+' ? epoch - offset : epoch + offset;
    }
    return std::nullopt;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream is(line);
    while (std::getline(is, cell, ',')) {
        // trim
        const auto b = cell.find_first_not_of(" \t\r");
        const auto e = cell.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

}  // namespace

ParamsFile parse_params_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("params JSON parse error: ") + e.what());
    }
    std::optional<Eigen::VectorXd> mu0, s0;
    std::optional<double> sigma0;
    if (j.contains("mu0")) mu0 = vector_from_json(j.at("mu0"));
    if (j.contains("s0")) s0 = vector_from_json(j.at("s0"));
    if (j.contains("sigma0")) sigma0 = j.at("sigma0").get<double>();

    if (j.contains("vsm")) {
        const auto& v = j.at("vsm");
        VSMSpec spec = VSMSpec::validated(v.at("alpha").get<double>(), v.at("d").get<int>());
        JointModelSpec joint = vsm_to_params(spec);
        return ParamsFile{std::move(joint.simplex), joint.totalcap, spec,
                          std::move(mu0), sigma0, std::move(s0)};
    }

    const int d = j.at("d").get<int>();
    Eigen::VectorXd beta = vector_from_json(j.at("beta"));
    Eigen::MatrixXd B = matrix_from_json(j.at("B"));
    Eigen::MatrixXd gamma = matrix_from_json(j.at("gamma"));
    if (beta.size() != d || B.rows() != d || gamma.rows() != d)
        throw IoError("params JSON: shapes inconsistent with d");
    std::optional<TotalCapParams> tc;
    if (j.contains("totalcap")) {
        const auto& t = j.at("totalcap");
        tc = TotalCapParams::validated(t.at("kappa").get<double>(), t.at("phi").get<double>(),
                                       t.at("lambda").get<double>(), t.at("sigma").get<double>());
    }
    return ParamsFile{
        AdmissibleSimplexParameterSet::validated(std::move(beta), std::move(B), std::move(gamma)),
        tc, std::nullopt, std::move(mu0), sigma0, std::move(s0)};
}

ParamsFile load_params_file(const std::string& path) { return parse_params_json(slurp(path)); }

RawParams parse_raw_params_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("params JSON parse error: ") + e.what());
    }
    RawParams out;
    if (j.contains("vsm")) {
        const auto& v = j.at("vsm");
        JointModelSpec joint =
            vsm_to_params(VSMSpec::validated(v.at("alpha").get<double>(), v.at("d").get<int>()));
        out.beta = joint.simplex.beta();
        out.B = joint.simplex.B();
        out.gamma = joint.simplex.gamma();
        out.totalcap = joint.totalcap;
        out.from_vsm = true;
        return out;
    }
    out.beta = vector_from_json(j.at("beta"));
    out.B = matrix_from_json(j.at("B"));
    out.gamma = matrix_from_json(j.at("gamma"));
    if (j.contains("totalcap")) {
        const auto& t = j.at("totalcap");
        out.totalcap = TotalCapParams{t.at("kappa").get<double>(), t.at("phi").get<double>(),
                                      t.at("lambda").get<double>(), t.at("sigma").get<double>()};
    }
    return out;
}

RawParams load_raw_params_file(const std::string& path) {
    return parse_raw_params_json(slurp(path));
}

std::string params_to_json(const Eigen::VectorXd& beta, const Eigen::MatrixXd& B,
                           const Eigen::MatrixXd& gamma,
                           const std::optional<TotalCapParams>& totalcap) {
    json j;
    j["d"] = beta.size();
    j["beta"] = vector_to_json(beta);
    j["B"] = matrix_to_json(B);
    j["gamma"] = matrix_to_json(gamma);
    if (totalcap) {
        j["totalcap"] = {{"kappa", totalcap->kappa},
                         {"phi", totalcap->phi},
                         {"lambda", totalcap->lambda},
                         {"sigma", totalcap->sigma}};
    }
    return j.dump(2);
}

SimplexPolynomial parse_polynomial_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw IoError(std::string("polynomial JSON parse error: ") + e.what());
    }
    const int d = j.at("dim").get<int>();
    std::vector<FullTerm> terms;
    int max_degree = 0;
    for (const auto& t : j.at("terms")) {
        FullTerm term;
        term.coef = t.at("coef").get<double>();
        for (const auto& e : t.at("exps")) term.exps.push_back(e.get<int>());
        if (static_cast<int>(term.exps.size()) != d)
            throw IoError("polynomial JSON: term exponent count != dim");
        int deg = 0;
        for (int e : term.exps) deg += e;
        max_degree = std::max(max_degree, deg);
        terms.push_back(std::move(term));
    }
    if (terms.empty()) throw IoError("polynomial JSON: no terms");
    return reduce(terms, d, max_degree);
}

SimplexPolynomial load_polynomial_file(const std::string& path) {
    return parse_polynomial_json(slurp(path));
}

void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << content;
    if (!out) throw IoError("write failed for " + path);
}

void write_paths_csv(const std::string& path, const PathBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out << "path,step";
    out << ",time";
    for (int i = 1; i <= bundle.d && bundle.has_weights(); ++i) out << ",mu_" << i;
    if (bundle.has_sigma()) out << ",Sigma";
    for (int i = 1; i <= bundle.d && bundle.has_caps(); ++i) out << ",S_" << i;
    out << "\n";
    out.precision(17);
    for (int p = 0; p < bundle.n_paths; ++p) {
        if (!bundle.path_ok(p)) continue;
        for (int s = 0; s < bundle.stored_steps(); ++s) {
            const long step = std::lround(bundle.times[s] / bundle.dt);
            out << p << "," << step << "," << bundle.times[s];
            if (bundle.has_weights())
                for (int i = 0; i < bundle.d; ++i) out << "," << bundle.weight(p, s, i);
            if (bundle.has_sigma()) out << "," << bundle.sigma_at(p, s);
            if (bundle.has_caps())
                for (int i = 0; i < bundle.d; ++i) out << "," << bundle.cap(p, s, i);
            out << "\n";
        }
    }
    if (!out) throw IoError("write failed for " + path);
}

namespace {

template <typename T>
void put(std::ofstream& out, T v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
    T v;
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

}  // namespace

void write_paths_binary(const std::string& path, const PathBundle& bundle) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path);
    out.write("PMKTPATH", 8);
    const std::uint32_t flags = (bundle.has_weights() ? 1u : 0u) | (bundle.has_sigma() ? 2u : 0u) |
                                (bundle.has_caps() ? 4u : 0u);
    put<std::uint32_t>(out, 1u);
    put<std::uint32_t>(out, flags);
    put<std::uint64_t>(out, bundle.seed);
    put<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.n_paths));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.stored_steps()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(bundle.d));
    put<double>(out, bundle.dt);
    out.write(reinterpret_cast<const char*>(bundle.times.data()),
              static_cast<std::streamsize>(sizeof(double)) * bundle.times.size());
    auto dump = [&](const std::vector<double>& v) {
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(sizeof(double) * v.size()));
    };
    if (bundle.has_weights()) dump(bundle.weights);
    if (bundle.has_sigma()) dump(bundle.sigma);
    if (bundle.has_caps()) dump(bundle.caps);
    if (!out) throw IoError("write failed for " + path);
}

PathBundle read_paths_binary(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, "PMKTPATH", 8) != 0) throw IoError("bad magic in " + path);
    const auto version = get<std::uint32_t>(in);
    if (version != 1u) throw IoError("unsupported path file version");
    const auto flags = get<std::uint32_t>(in);
    PathBundle b;
    b.seed = get<std::uint64_t>(in);
    b.n_paths = static_cast<int>(get<std::uint32_t>(in));
    const int stored = static_cast<int>(get<std::uint32_t>(in));
    b.d = static_cast<int>(get<std::uint32_t>(in));
    b.dt = get<double>(in);
    b.times.resize(stored);
    in.read(reinterpret_cast<char*>(b.times.data()),
            static_cast<std::streamsize>(sizeof(double)) * stored);
    const std::size_t cells = static_cast<std::size_t>(b.n_paths) * static_cast<std::size_t>(stored);
    auto load = [&](std::vector<double>& v, std::size_t count) {
        v.resize(count);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(sizeof(double) * count));
    };
    if (flags & 1u) load(b.weights, cells * static_cast<std::size_t>(b.d));
    if (flags & 2u) load(b.sigma, cells);
    if (flags & 4u) load(b.caps, cells * static_cast<std::size_t>(b.d));
    if (!in) throw IoError("truncated path file " + path);
    return b;
}

TimeSeriesCsv read_timeseries_csv(const std::string& path, bool seconds_to_years) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    std::string line;
    if (!std::getline(in, line)) throw IoError("empty CSV " + path);
    const auto header = split_csv_line(line);
    if (header.size() < 3 || header[0] != "time")
        throw IoError("CSV header must be time,cap_1..cap_d or time,mu_1..mu_d");
    bool is_weights;
    if (header[1].rfind("mu_", 0) == 0)
        is_weights = true;
    else if (header[1].rfind("cap_", 0) == 0)
        is_weights = false;
    else
        throw IoError("CSV columns must be cap_* or mu_*");
    const int d = static_cast<int>(header.size()) - 1;

    std::vector<double> times;
    std::vector<double> values;
    int dropped = 0;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto cells = split_csv_line(line);
        if (static_cast<int>(cells.size()) != d + 1) {
            ++dropped;
            continue;
        }
        double t;
        bool ok = true;
        if (auto rfc = parse_rfc3339(cells[0])) {
            t = *rfc / kSecondsPerYear;
        } else {
            try {
                std::size_t used = 0;
                t = std::stod(cells[0], &used);
                if (used != cells[0].size()) ok = false;
                if (seconds_to_years) t /= kSecondsPerYear;
            } catch (...) {
                ok = false;
            }
        }
        std::vector<double> row(static_cast<std::size_t>(d));
        for (int i = 0; ok && i < d; ++i) {
            try {
                std::size_t used = 0;
                row[static_cast<std::size_t>(i)] = std::stod(cells[static_cast<std::size_t>(i) + 1], &used);
                if (used != cells[static_cast<std::size_t>(i) + 1].size()) ok = false;
                if (!std::isfinite(row[static_cast<std::size_t>(i)])) ok = false;
            } catch (...) {
                ok = false;
            }
        }
        if (!ok) {
            ++dropped;
            continue;
        }
        times.push_back(t);
        values.insert(values.end(), row.begin(), row.end());
    }
    TimeSeriesCsv out;
    out.is_weights = is_weights;
    out.dropped_rows = dropped;
    const Eigen::Index n = static_cast<Eigen::Index>(times.size());
    out.times.resize(n);
    out.values.resize(n, d);
    for (Eigen::Index r = 0; r < n; ++r) {
        out.times[r] = times[static_cast<std::size_t>(r)];
        for (int c = 0; c < d; ++c)
            out.values(r, c) = values[static_cast<std::size_t>(r) * static_cast<std::size_t>(d) + static_cast<std::size_t>(c)];
    }
    return out;
}

}  // namespace polymkt
