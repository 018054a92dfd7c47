#pragma once

// Binary containers: a readable text header terminated by "end_header\n",
// followed by little-endian float64 payload.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"
#include "particles.hpp"

namespace fracturb {

/// Decimal form of a double that parses back to the same bits.
inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::uint64_t fnv1a(const std::string& bytes) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

namespace detail {

inline void write_f64(std::ostream& os, double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    char bytes[8];
    for (int i = 0; i < 8; ++i) bytes[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
    os.write(bytes, 8);
}

inline double read_f64(std::istream& is) {
    unsigned char bytes[8];
    if (!is.read(reinterpret_cast<char*>(bytes), 8)) throw std::runtime_error("unexpected end of binary payload");
    std::uint64_t bits = 0;
    for (int i = 0; i < 8; ++i) bits |= std::uint64_t{bytes[i]} << (8 * i);
    return std::bit_cast<double>(bits);
}

inline std::map<std::string, std::string> read_header(std::istream& is, const std::string& magic) {
    std::string line;
    if (!std::getline(is, line) || line != magic) throw std::runtime_error("not a " + magic + " container");
    std::map<std::string, std::string> kv;
    while (std::getline(is, line)) {
        if (line == "end_header") return kv;
        const auto eq = line.find(" = ");
        if (eq == std::string::npos) throw std::runtime_error("malformed header line: " + line);
        kv[line.substr(0, eq)] = line.substr(eq + 3);
    }
    throw std::runtime_error("header not terminated");
}

inline const std::string& need(const std::map<std::string, std::string>& kv, const std::string& key) {
    const auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("header is missing '" + key + "'");
    return it->second;
}

inline std::vector<double> parse_doubles(const std::string& s) {
    std::vector<double> out;
    std::istringstream in(s);
    std::string tok;
    while (in >> tok) out.push_back(std::stod(tok));
    return out;
}

}  // namespace detail

/// Text header describing a field: everything except the coefficient payload.
inline std::string field_header(const FieldPath& f) {
    const auto& m = f.metadata();
    std::ostringstream os;
    os << "FRACTURB-FIELD 1\n";
    os << "seed = " << m.seed << "\n";
    os << "h = " << format_double(f.h()) << "\n";
    os << "nu = " << format_double(f.nu()) << "\n";
    os << "spectrum.kind = " << m.spectrum.kind_name() << "\n";
    os << "spectrum.c0 = " << format_double(m.spectrum.c0) << "\n";
    os << "spectrum.R = " << m.spectrum.cutoff << "\n";
    if (const auto* p = std::get_if<PowerLawSpectrum>(&m.spectrum.kind))
        os << "spectrum.exponent = " << format_double(p->exponent) << "\n";
    if (const auto* t = std::get_if<TableSpectrum>(&m.spectrum.kind)) {
        os << "spectrum.table =";
        for (const auto& [n2, w] : t->weights) os << " " << n2 << ":" << format_double(w);
        os << "\n";
    }
    os << "grid.t0 = " << format_double(f.grid().t0()) << "\n";
    os << "grid.dt = " << format_double(f.grid().dt()) << "\n";
    os << "grid.n = " << f.grid().n() << "\n";
    os << "modes = " << f.half_modes().size() << "\n";
    os << "jitter =";
    for (double j : m.jitter) os << " " << format_double(j);
    os << "\n";
    return os.str();
}

/// Hash identifying a field realization by its metadata (seed, parameters, grid).
inline std::string field_hash(const FieldPath& f) { return hex64(fnv1a(field_header(f))); }

inline void write_field(std::ostream& os, const FieldPath& f) {
    os << field_header(f) << "end_header\n";
    const std::size_t n = f.grid().n();
    for (std::size_t m = 0; m < f.half_modes().size(); ++m)
        for (std::size_t j = 0; j < n; ++j) {
            const cplx c = f.coeff(m, j);
            detail::write_f64(os, c.real());
            detail::write_f64(os, c.imag());
        }
    if (!os) throw std::runtime_error("write_field: stream error");
}

inline FieldPath read_field(std::istream& is) {
    const auto kv = detail::read_header(is, "FRACTURB-FIELD 1");
    SpectrumConfig spec;
    spec.h = std::stod(detail::need(kv, "h"));
    spec.c0 = std::stod(detail::need(kv, "spectrum.c0"));
    spec.cutoff = std::stoi(detail::need(kv, "spectrum.R"));
    const std::string kind = detail::need(kv, "spectrum.kind");
    if (kind == "kolmogorov") {
        spec.kind = KolmogorovSpectrum{};
    } else if (kind == "power_law") {
        spec.kind = PowerLawSpectrum{std::stod(detail::need(kv, "spectrum.exponent"))};
    } else if (kind == "table") {
        TableSpectrum t;
        std::istringstream in(detail::need(kv, "spectrum.table"));
        std::string tok;
        while (in >> tok) {
            const auto colon = tok.find(':');
            if (colon == std::string::npos) throw std::runtime_error("bad spectrum.table entry " + tok);
            t.weights[std::stoi(tok.substr(0, colon))] = std::stod(tok.substr(colon + 1));
        }
        spec.kind = std::move(t);
    } else {
        throw std::runtime_error("unknown spectrum kind " + kind);
    }
    const TimeGrid grid(std::stod(detail::need(kv, "grid.t0")), std::stod(detail::need(kv, "grid.dt")),
                        std::stoull(detail::need(kv, "grid.n")));
    const std::size_t modes = std::stoull(detail::need(kv, "modes"));
    const std::uint64_t seed = std::stoull(detail::need(kv, "seed"));
    const double nu = std::stod(detail::need(kv, "nu"));
    const std::vector<double> jitter = detail::parse_doubles(detail::need(kv, "jitter"));

    std::vector<cplx> coeffs(modes * grid.n());
    for (auto& c : coeffs) {
        const double re = detail::read_f64(is);
        c = {re, detail::read_f64(is)};
    }
    return FieldPath(spec, nu, grid, seed, std::move(coeffs), jitter);
}

inline void save_field(const std::string& path, const FieldPath& f) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open " + path + " for writing");
    write_field(os, f);
}

inline FieldPath load_field(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("cannot open " + path);
    return read_field(is);
}

inline void write_trajectory(std::ostream& os, const Trajectory& t, const SimConfig& cfg, const std::string& field_id) {
    os << "FRACTURB-TRAJ 1\n";
    os << "tau = " << format_double(cfg.tau) << "\n";
    os << "dt_particle = " << format_double(cfg.dt_particle) << "\n";
    os << "t_start_index = " << cfg.t_start_index << "\n";
    os << "n_steps = " << cfg.n_steps << "\n";
    os << "stride = " << cfg.stride << "\n";
    os << "field_hash = " << field_id << "\n";
    os << "particles = " << t.n_particles << "\n";
    os << "frames =";
    for (auto s : t.frame_steps) os << " " << s;
    os << "\nlayout = frame-major, particle-major within frame, x1 x2 y1 y2\n";
    os << "end_header\n";
    for (const auto& s : t.frames) {
        detail::write_f64(os, s.x.a);
        detail::write_f64(os, s.x.b);
        detail::write_f64(os, s.y.a);
        detail::write_f64(os, s.y.b);
    }
    if (!os) throw std::runtime_error("write_trajectory: stream error");
}

inline Trajectory read_trajectory(std::istream& is) {
    const auto kv = detail::read_header(is, "FRACTURB-TRAJ 1");
    Trajectory t;
    t.n_particles = std::stoull(detail::need(kv, "particles"));
    for (double s : detail::parse_doubles(detail::need(kv, "frames"))) t.frame_steps.push_back(static_cast<std::size_t>(s));
    t.frames.resize(t.frame_steps.size() * t.n_particles);
    for (auto& s : t.frames) {
        s.x.a = detail::read_f64(is);
        s.x.b = detail::read_f64(is);
        s.y.a = detail::read_f64(is);
        s.y.b = detail::read_f64(is);
    }
    return t;
}

}  // namespace fracturb
