#pragma once

// Experiment configuration: UTF-8 text, one `key = value` per line, `#` comments,
// optional `[section]` headers that prefix the following keys with "section.".
// Unknown keys are errors.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "io.hpp"
#include "spectrum.hpp"
#include "vec2.hpp"

namespace fracturb {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
    std::uint64_t seed = 1;
    double h = 1.0 / 3.0;
    double nu = 1e-2;
    std::vector<double> tau{1.0};
    double delta = 0.5;

    std::string spectrum_kind = "kolmogorov";
    double spectrum_c0 = 1.0;
    int spectrum_r = 2;
    double spectrum_exponent = 0.0;  // power_law only
    std::map<int, double> spectrum_table;

    double dt_field = 0.0625;
    double t_total = 50.0;
    double t_pullback = 4.0;
    double t_tail = 0.0;  // 0: tau ln(1e8)

    std::size_t particle_count = 1000;
    std::string particle_init = "uniform-zero-velocity";

    std::string out_dir = "out";
    std::size_t stride = 10;
    bool plot = true;
    bool trajectories = true;

    bool expect_clustering = false;
    int box_resolution = 10;

    double fou_alpha = 1.0;
    double fou_lambda = 1.0;
    double fou_dt = 0.1;
    std::size_t fou_n = 64;
    std::size_t fou_paths = 2000;
    std::size_t fou_written = 5;

    std::size_t pullback_samples = 1000;

    std::size_t diag_ensemble = 1000;
    double diag_lag_dt = 1e-3;
    std::vector<double> diag_lag_steps{1, 2, 4, 8, 16, 32, 64, 128};
    std::vector<double> diag_probe{0.3, 0.7};
    std::size_t diag_spectrum_ensemble = 1000;
    std::vector<double> diag_displacement{0.1, 0.2};
    std::size_t diag_covariance_lag_steps = 0;

    SpectrumConfig spectrum() const {
        SpectrumConfig s;
        s.c0 = spectrum_c0;
        s.cutoff = spectrum_r;
        s.h = h;
        if (spectrum_kind == "kolmogorov") s.kind = KolmogorovSpectrum{};
        else if (spectrum_kind == "power_law") s.kind = PowerLawSpectrum{spectrum_exponent};
        else if (spectrum_kind == "table") s.kind = TableSpectrum{spectrum_table};
        else throw ConfigError("spectrum.kind must be kolmogorov, power_law or table (got '" + spectrum_kind + "')");
        return s;
    }

    double dt_particle() const { return 2.0 * dt_field; }

    void validate() const {
        auto require = [](bool ok, const std::string& what) {
            if (!ok) throw ConfigError("invalid config: " + what);
        };
        require(h > 0.0 && h < 1.0, "h must lie in (0, 1)");
        require(nu > 0.0, "nu must be > 0");
        require(!tau.empty(), "tau list is empty");
        for (double t : tau) require(t >= 0.0 && std::isfinite(t), "every tau must be >= 0");
        require(delta > 0.0, "delta must be > 0");
        try {
            spectrum().validate();
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid config: ") + e.what());
        }
        require(dt_field > 0.0, "time.dt_field must be > 0");
        require(t_total > 0.0, "time.T_total must be > 0");
        require(t_pullback > 0.0, "time.T_pullback must be > 0");
        require(t_tail >= 0.0, "time.T_tail must be >= 0");
        require(particle_init == "uniform-zero-velocity", "particles.init supports only uniform-zero-velocity");
        require(box_resolution >= 1, "simulate.box_resolution must be >= 1");
        require(fou_alpha > 0.0 && fou_lambda >= 0.0 && fou_dt > 0.0 && fou_n >= 1, "fou parameters out of range");
        require(fou_paths >= 2, "fou.paths must be >= 2");
        require(diag_ensemble >= 2 && diag_spectrum_ensemble >= 2, "diagnose ensembles must be >= 2");
        require(diag_lag_dt > 0.0, "diagnose.lag_dt must be > 0");
        require(!diag_lag_steps.empty(), "diagnose.lag_steps is empty");
        for (double l : diag_lag_steps) require(l >= 0.0 && l == std::floor(l), "diagnose.lag_steps must be integers");
        require(diag_probe.size() == 2, "diagnose.probe needs two coordinates");
        require(diag_displacement.size() == 2, "diagnose.displacement needs two coordinates");
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    double out = 0.0;
    try {
        out = std::stod(v, &used);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a number, got '" + v + "'");
    }
    if (used != v.size()) throw ConfigError("config key '" + key + "': trailing characters in '" + v + "'");
    return out;
}

inline std::uint64_t to_u64(const std::string& key, const std::string& v) {
    std::size_t used = 0;
    unsigned long long out = 0;
    try {
        if (!v.empty() && v[0] == '-') throw std::invalid_argument("negative");
        out = std::stoull(v, &used);
    } catch (const std::exception&) {
        throw ConfigError("config key '" + key + "': expected a non-negative integer, got '" + v + "'");
    }
    if (used != v.size()) throw ConfigError("config key '" + key + "': trailing characters in '" + v + "'");
    return out;
}

inline bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true") return true;
    if (v == "false") return false;
    throw ConfigError("config key '" + key + "': expected true or false, got '" + v + "'");
}

inline std::vector<double> to_list(const std::string& key, const std::string& v) {
    std::vector<double> out;
    std::stringstream in(v);
    std::string item;
    while (std::getline(in, item, ',')) out.push_back(to_double(key, trim(item)));
    return out;
}

inline std::string join(const std::vector<double>& xs) {
    std::string out;
    for (std::size_t i = 0; i < xs.size(); ++i) out += (i ? ", " : "") + format_double(xs[i]);
    return out;
}

}  // namespace detail

inline void apply_setting(ExperimentConfig& c, const std::string& key, const std::string& v) {
    using namespace detail;
    if (key == "seed") c.seed = to_u64(key, v);
    else if (key == "h") c.h = to_double(key, v);
    else if (key == "nu") c.nu = to_double(key, v);
    else if (key == "tau") c.tau = to_list(key, v);
    else if (key == "delta") c.delta = to_double(key, v);
    else if (key == "spectrum.kind") c.spectrum_kind = v;
    else if (key == "spectrum.c0") c.spectrum_c0 = to_double(key, v);
    else if (key == "spectrum.R") c.spectrum_r = static_cast<int>(to_u64(key, v));
    else if (key == "spectrum.exponent") c.spectrum_exponent = to_double(key, v);
    else if (key == "spectrum.table") {
        c.spectrum_table.clear();
        std::stringstream in(v);
        std::string item;
        while (std::getline(in, item, ',')) {
            item = trim(item);
            const auto colon = item.find(':');
            if (colon == std::string::npos) throw ConfigError("spectrum.table entries are |z|^2:weight, got '" + item + "'");
            c.spectrum_table[static_cast<int>(to_u64(key, trim(item.substr(0, colon))))] =
                to_double(key, trim(item.substr(colon + 1)));
        }
    } else if (key == "time.dt_field") c.dt_field = to_double(key, v);
    else if (key == "time.T_total") c.t_total = to_double(key, v);
    else if (key == "time.T_pullback") c.t_pullback = to_double(key, v);
    else if (key == "time.T_tail") c.t_tail = to_double(key, v);
    else if (key == "particles.count") c.particle_count = to_u64(key, v);
    else if (key == "particles.init") c.particle_init = v;
    else if (key == "outputs.directory") c.out_dir = v;
    else if (key == "outputs.stride") c.stride = to_u64(key, v);
    else if (key == "outputs.plot") c.plot = to_bool(key, v);
    else if (key == "outputs.trajectories") c.trajectories = to_bool(key, v);
    else if (key == "simulate.expect_clustering") c.expect_clustering = to_bool(key, v);
    else if (key == "simulate.box_resolution") c.box_resolution = static_cast<int>(to_u64(key, v));
    else if (key == "fou.alpha") c.fou_alpha = to_double(key, v);
    else if (key == "fou.lambda") c.fou_lambda = to_double(key, v);
    else if (key == "fou.dt") c.fou_dt = to_double(key, v);
    else if (key == "fou.n") c.fou_n = to_u64(key, v);
    else if (key == "fou.paths") c.fou_paths = to_u64(key, v);
    else if (key == "fou.written_paths") c.fou_written = to_u64(key, v);
    else if (key == "pullback.samples") c.pullback_samples = to_u64(key, v);
    else if (key == "diagnose.ensemble") c.diag_ensemble = to_u64(key, v);
    else if (key == "diagnose.lag_dt") c.diag_lag_dt = to_double(key, v);
    else if (key == "diagnose.lag_steps") c.diag_lag_steps = to_list(key, v);
    else if (key == "diagnose.probe") c.diag_probe = to_list(key, v);
    else if (key == "diagnose.spectrum_ensemble") c.diag_spectrum_ensemble = to_u64(key, v);
    else if (key == "diagnose.displacement") c.diag_displacement = to_list(key, v);
    else if (key == "diagnose.covariance_lag_steps") c.diag_covariance_lag_steps = to_u64(key, v);
    else throw ConfigError("unknown config key '" + key + "'");
}

inline ExperimentConfig parse_config(std::istream& in, const std::string& origin = "<config>") {
    ExperimentConfig c;
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw ConfigError(origin + ":" + std::to_string(lineno) + ": malformed section header");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(line.substr(0, eq));
        if (!section.empty()) key = section + "." + key;
        try {
            apply_setting(c, key, detail::trim(line.substr(eq + 1)));
        } catch (const ConfigError& e) {
            throw ConfigError(origin + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path);
    return parse_config(in, path);
}

/// Every setting, including defaults, in a form parse_config reads back to the same values.
inline std::string resolved_config(const ExperimentConfig& c) {
    using detail::join;
    std::ostringstream os;
    os << "seed = " << c.seed << "\n";
    os << "h = " << format_double(c.h) << "\n";
    os << "nu = " << format_double(c.nu) << "\n";
    os << "tau = " << join(c.tau) << "\n";
    os << "delta = " << format_double(c.delta) << "\n";
    os << "\n[spectrum]\n";
    os << "kind = " << c.spectrum_kind << "\n";
    os << "c0 = " << format_double(c.spectrum_c0) << "\n";
    os << "R = " << c.spectrum_r << "\n";
    os << "exponent = " << format_double(c.spectrum_exponent) << "\n";
    os << "table = ";
    bool first = true;
    for (const auto& [n2, w] : c.spectrum_table) {
        os << (first ? "" : ", ") << n2 << ":" << format_double(w);
        first = false;
    }
    os << "\n\n[time]\n";
    os << "dt_field = " << format_double(c.dt_field) << "\n";
    os << "T_total = " << format_double(c.t_total) << "\n";
    os << "T_pullback = " << format_double(c.t_pullback) << "\n";
    os << "T_tail = " << format_double(c.t_tail) << "\n";
    os << "\n[particles]\n";
    os << "count = " << c.particle_count << "\n";
    os << "init = " << c.particle_init << "\n";
    os << "\n[outputs]\n";
    os << "directory = " << c.out_dir << "\n";
    os << "stride = " << c.stride << "\n";
    os << "plot = " << (c.plot ? "true" : "false") << "\n";
    os << "trajectories = " << (c.trajectories ? "true" : "false") << "\n";
    os << "\n[simulate]\n";
    os << "expect_clustering = " << (c.expect_clustering ? "true" : "false") << "\n";
    os << "box_resolution = " << c.box_resolution << "\n";
    os << "\n[fou]\n";
    os << "alpha = " << format_double(c.fou_alpha) << "\n";
    os << "lambda = " << format_double(c.fou_lambda) << "\n";
    os << "dt = " << format_double(c.fou_dt) << "\n";
    os << "n = " << c.fou_n << "\n";
    os << "paths = " << c.fou_paths << "\n";
    os << "written_paths = " << c.fou_written << "\n";
    os << "\n[pullback]\n";
    os << "samples = " << c.pullback_samples << "\n";
    os << "\n[diagnose]\n";
    os << "ensemble = " << c.diag_ensemble << "\n";
    os << "lag_dt = " << format_double(c.diag_lag_dt) << "\n";
    os << "lag_steps = " << join(c.diag_lag_steps) << "\n";
    os << "probe = " << join(c.diag_probe) << "\n";
    os << "spectrum_ensemble = " << c.diag_spectrum_ensemble << "\n";
    os << "displacement = " << join(c.diag_displacement) << "\n";
    os << "covariance_lag_steps = " << c.diag_covariance_lag_steps << "\n";
    return os.str();
}

}  // namespace fracturb
