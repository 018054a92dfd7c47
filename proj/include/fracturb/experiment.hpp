#pragma once

// The four experiment commands behind the `fracturb` executable. Each writes its
// data files plus `config.resolved` into an output directory and reports whether
// every pass/fail flag it computed passed.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "attractor.hpp"
#include "config.hpp"
#include "diagnostics.hpp"
#include "field.hpp"
#include "fou.hpp"
#include "io.hpp"
#include "particles.hpp"
#include "rng.hpp"

namespace fracturb {

struct CommandResult {
    bool passed = true;
    std::vector<std::string> files;  ///< written, relative to the output directory
};

/// Rows of a `quantity,analytic,estimate,band,pass` table.
class ResultTable {
  public:
    void add(const std::string& quantity, double analytic, double estimate, double band, bool pass) {
        rows_.push_back({quantity, analytic, estimate, band, pass});
    }
    /// |estimate - analytic| <= band.
    void add_band(const std::string& quantity, double analytic, double estimate, double band) {
        add(quantity, analytic, estimate, band, std::abs(estimate - analytic) <= band);
    }
    bool all_passed() const {
        for (const auto& r : rows_)
            if (!r.pass) return false;
        return true;
    }
    std::string csv() const {
        std::ostringstream os;
        os << "quantity,analytic,estimate,band,pass\n";
        for (const auto& r : rows_)
            os << r.quantity << "," << format_double(r.analytic) << "," << format_double(r.estimate) << ","
               << format_double(r.band) << "," << (r.pass ? "true" : "false") << "\n";
        return os.str();
    }

  private:
    struct Row {
        std::string quantity;
        double analytic, estimate, band;
        bool pass;
    };
    std::vector<Row> rows_;
};

namespace detail {

class OutputDir {
  public:
    explicit OutputDir(const std::string& path) : root_(path) { std::filesystem::create_directories(root_); }

    void text(const std::string& name, const std::string& body, CommandResult& res) const {
        std::ofstream os(root_ / name, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + (root_ / name).string());
        os << body;
        res.files.push_back(name);
    }
    std::ofstream binary(const std::string& name, CommandResult& res) const {
        std::ofstream os(root_ / name, std::ios::binary);
        if (!os) throw std::runtime_error("cannot write " + (root_ / name).string());
        res.files.push_back(name);
        return os;
    }

  private:
    std::filesystem::path root_;
};

inline std::string tau_label(double tau) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "tau_%g", tau);
    return buf;
}

inline std::string scatter_csv(const std::vector<ParticleState>& states) {
    std::ostringstream os;
    os << "particle_id,x1,x2,y1,y2\n";
    for (std::size_t p = 0; p < states.size(); ++p) {
        const auto& s = states[p];
        os << p << "," << format_double(s.x.a) << "," << format_double(s.x.b) << "," << format_double(s.y.a) << ","
           << format_double(s.y.b) << "\n";
    }
    return os.str();
}

inline std::string scatter_svg(const std::vector<ParticleState>& states, const std::string& title) {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"0 0 1 1\">\n";
    os << "<title>" << title << "</title>\n";
    os << "<rect width=\"1\" height=\"1\" fill=\"white\" stroke=\"black\" stroke-width=\"0.002\"/>\n";
    char buf[96];
    for (const auto& s : states) {
        std::snprintf(buf, sizeof buf, "<circle cx=\"%.5f\" cy=\"%.5f\" r=\"0.0015\"/>\n", s.x.a, 1.0 - s.x.b);
        os << buf;
    }
    os << "</svg>\n";
    return os.str();
}

inline std::size_t particle_steps(const ExperimentConfig& c, double duration) {
    const double steps = duration / c.dt_particle();
    const auto n = static_cast<std::size_t>(std::llround(steps));
    if (n == 0 || std::abs(steps - static_cast<double>(n)) > 1e-9 * steps)
        throw ConfigError("duration " + format_double(duration) + " is not a whole number of particle steps (" +
                          format_double(c.dt_particle()) + ")");
    return n;
}

inline void check_grid(std::size_t n) {
    if (n > kCholeskyCap)
        throw ConfigError("the run needs a field grid of " + std::to_string(n) + " points; the exact sampler allows " +
                          std::to_string(kCholeskyCap) + " (raise time.dt_field or shorten the run)");
}

}  // namespace detail

/// Samples real fOU paths and compares their one- and two-point moments with the kernel.
inline CommandResult cmd_sample_fou(const ExperimentConfig& c, const std::string& out_dir, unsigned threads = 1) {
    c.validate();
    const detail::OutputDir out(out_dir);
    CommandResult res;
    out.text("config.resolved", resolved_config(c), res);

    const FouParams params(c.fou_alpha, c.fou_lambda, c.nu, c.h);
    const TimeGrid grid(0.0, c.fou_dt, c.fou_n);
    std::shared_ptr<const CholeskyFactor> factor;
    if (params.lambda() > 0.0) factor = std::make_shared<const CholeskyFactor>(params, grid);

    const std::size_t written = std::min(c.fou_written, c.fou_paths);
    std::vector<std::vector<double>> kept(written);
    std::vector<double> y0(c.fou_paths), y0sq(c.fou_paths), y01(c.fou_paths);
    parallel_for(c.fou_paths, threads, [&](std::size_t i) {
        CounterStream stream({c.seed, static_cast<std::uint32_t>(i), StreamTag::ensemble});
        const RealFouPath path = factor ? sample_real_fou(params, grid, 1.0, stream, *factor)
                                        : sample_real_fou(params, grid, 1.0, stream);
        y0[i] = path.values[0];
        y0sq[i] = path.values[0] * path.values[0];
        y01[i] = grid.n() > 1 ? path.values[0] * path.values[1] : 0.0;
        if (i < written) kept[i] = path.values;
    });

    std::ostringstream paths;
    paths << "j,t";
    for (std::size_t i = 0; i < written; ++i) paths << ",path_" << i;
    paths << "\n";
    for (std::size_t j = 0; j < grid.n(); ++j) {
        paths << j << "," << format_double(grid.time(j));
        for (std::size_t i = 0; i < written; ++i) paths << "," << format_double(kept[i][j]);
        paths << "\n";
    }
    out.text("fou_paths.csv", paths.str(), res);

    ResultTable table;
    const double var = fou_variance(params);
    const SampleSummary m = summarize(y0), v = summarize(y0sq);
    table.add_band("mean_t0", 0.0, m.mean, 4.0 * m.std_error);
    table.add_band("variance_t0", var, v.mean, 4.0 * v.std_error);
    if (grid.n() > 1) {
        const SampleSummary cv = summarize(y01);
        table.add_band("covariance_lag_dt", fou_covariance(params, grid.dt()), cv.mean, 4.0 * cv.std_error);
    }
    out.text("fou_table.csv", table.csv(), res);
    res.passed = table.all_passed();
    return res;
}

/// Synthesizes one field, releases the configured particles for each tau and writes
/// final scatters, trajectories and dispersion indices.
inline CommandResult cmd_simulate(const ExperimentConfig& c, const std::string& out_dir, unsigned threads = 1) {
    c.validate();
    const detail::OutputDir out(out_dir);
    CommandResult res;
    out.text("config.resolved", resolved_config(c), res);

    const std::size_t steps = detail::particle_steps(c, c.t_total);
    detail::check_grid(2 * steps + 1);
    const FieldPath field = synthesize(c.spectrum(), c.nu, TimeGrid(0.0, c.dt_field, 2 * steps + 1), c.seed, {threads});
    {
        auto os = out.binary("field.bin", res);
        write_field(os, field);
    }
    const std::string fid = field_hash(field);

    CounterStream stream({c.seed, 0, StreamTag::particles});
    const std::vector<Vec2> start = uniform_torus_points(c.particle_count, stream);
    std::vector<ParticleState> initial(start.size());
    for (std::size_t p = 0; p < start.size(); ++p) initial[p].x = start[p];

    ResultTable table;
    std::vector<double> indices;
    for (double tau : c.tau) {
        SimConfig sim = SimConfig::aligned(field, tau, 0, steps, c.stride);
        const bool tracer = tau == 0.0 || !sim.drag_resolved();
        if (tracer && tau > 0.0)
            std::cerr << "note: dt_particle/tau = " << sim.dt_particle / tau << " for tau = " << tau
                      << "; integrating the tracer limit instead\n";
        const Trajectory traj =
            tracer ? integrate_tracer(field, sim, start, threads) : integrate(field, sim, initial, threads);
        const std::vector<ParticleState> final_states = traj.final_states();
        const std::string label = detail::tau_label(tau);
        out.text("scatter_" + label + ".csv", detail::scatter_csv(final_states), res);
        if (c.plot) out.text("scatter_" + label + ".svg", detail::scatter_svg(final_states, label), res);
        if (c.trajectories) {
            auto os = out.binary("trajectory_" + label + ".bin", res);
            write_trajectory(os, traj, sim, fid);
        }
        const ClusterStats stats = final_states.empty() ? ClusterStats{} : dispersion_index(positions_of(final_states), c.box_resolution);
        indices.push_back(stats.dispersion_index);
        // Uniform scatter gives 1 with standard deviation about sqrt(2 / (m^2 - 1)).
        const double m2 = static_cast<double>(c.box_resolution * c.box_resolution);
        table.add("dispersion_index_" + label + (tracer ? "_tracer" : ""), 1.0, stats.dispersion_index,
                  4.0 * std::sqrt(2.0 / std::max(1.0, m2 - 1.0)), true);
    }
    if (c.expect_clustering) {
        // Taus in the inertial band [0.1, 1] must all cluster more than every tau outside it.
        double min_inertial = std::numeric_limits<double>::infinity();
        double max_extreme = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < c.tau.size(); ++i) {
            if (c.tau[i] >= 0.1 && c.tau[i] <= 1.0) min_inertial = std::min(min_inertial, indices[i]);
            else max_extreme = std::max(max_extreme, indices[i]);
        }
        const bool ok = std::isfinite(min_inertial) && std::isfinite(max_extreme) && min_inertial > max_extreme;
        table.add("clustering_margin", 0.0, min_inertial - max_extreme, 0.0, ok);
    }
    out.text("dispersion.csv", table.csv(), res);
    res.passed = table.all_passed();
    return res;
}

struct PullbackLayout {
    std::size_t tail = 0;   ///< field steps of radius history
    std::size_t depth = 0;  ///< field steps of the middle depth T (multiple of 4)
    std::size_t n = 0;      ///< field grid points; time 0 is the last index
};

inline PullbackLayout pullback_layout(const ExperimentConfig& c, double tau) {
    PullbackLayout l;
    const double eps = c.t_tail > 0.0 ? std::exp(-c.t_tail / tau) : kDefaultTailEps;
    l.tail = tail_steps(tau, c.dt_field, eps);
    l.depth = 4 * static_cast<std::size_t>(std::llround(c.t_pullback / c.dt_field / 4.0));
    if (l.depth == 0) throw ConfigError("time.T_pullback is shorter than four field steps");
    l.n = l.tail + 2 * l.depth + 1;
    return l;
}

/// Pullback clouds at depths T/2, T and 2T ending at time 0, with their nesting distances.
inline CommandResult cmd_pullback(const ExperimentConfig& c, const std::string& out_dir, unsigned threads = 1) {
    c.validate();
    const double tau = c.tau.front();
    if (!(tau > 0.0)) throw ConfigError("pullback needs tau > 0");
    const detail::OutputDir out(out_dir);
    CommandResult res;
    out.text("config.resolved", resolved_config(c), res);

    const PullbackLayout lay = pullback_layout(c, tau);
    detail::check_grid(lay.n);
    const double t0 = -static_cast<double>(lay.n - 1) * c.dt_field;
    const FieldPath field = synthesize(c.spectrum(), c.nu, TimeGrid(t0, c.dt_field, lay.n), c.seed, {threads});
    const C1History c1 = C1History::of(field, 64, threads);
    const double eps = c.t_tail > 0.0 ? std::exp(-c.t_tail / tau) : kDefaultTailEps;

    const std::size_t end = lay.n - 1;
    const std::size_t depths[3] = {lay.depth / 2, lay.depth, 2 * lay.depth};
    std::vector<AttractorCloud> clouds;
    ResultTable table;
    for (std::size_t d : depths) {
        clouds.push_back(
            pullback_snapshot(field, c1, tau, c.delta, end - d, end, c.pullback_samples, c.seed, threads, eps));
        const std::string label = "depth_" + format_double(static_cast<double>(d) * c.dt_field);
        out.text("cloud_" + label + ".csv", detail::scatter_csv(clouds.back().points), res);
        table.add("start_radius_" + label, clouds.back().start_radius, clouds.back().start_radius, 0.0, true);
    }
    const double d_shallow = hausdorff_semidistance(clouds[0].points, clouds[1].points, threads);
    const double d_deep = hausdorff_semidistance(clouds[1].points, clouds[2].points, threads);
    table.add("semidistance_half_to_full", d_shallow, d_shallow, 0.0, true);
    table.add("semidistance_full_to_double", d_deep, d_deep, 0.0, true);
    table.add("nesting_decrease", d_shallow, d_deep, 0.0, d_deep < d_shallow || d_shallow == 0.0);
    out.text("nesting.csv", table.csv(), res);
    res.passed = table.all_passed();
    return res;
}

/// Structure function, energy spectrum and velocity covariance against their closed forms.
inline CommandResult cmd_diagnose(const ExperimentConfig& c, const std::string& out_dir, unsigned threads = 1) {
    c.validate();
    const detail::OutputDir out(out_dir);
    CommandResult res;
    out.text("config.resolved", resolved_config(c), res);
    const FieldModel model{c.spectrum(), c.nu};
    const Vec2 probe{c.diag_probe[0], c.diag_probe[1]};

    std::vector<std::size_t> lags;
    for (double l : c.diag_lag_steps) lags.push_back(static_cast<std::size_t>(l));
    const auto sf = structure_function_time(model, probe, c.diag_lag_dt, lags, c.diag_ensemble, c.seed, threads);
    ResultTable sf_table;
    for (const auto& r : sf.rows) {
        const std::string lag = format_double(r.lag);
        sf_table.add_band("structure_function_lag_" + lag, r.analytic, r.estimate, 4.0 * r.std_error);
        sf_table.add("below_upper_bound_lag_" + lag, r.upper, r.estimate, 4.0 * r.std_error,
                     r.estimate <= r.upper + 4.0 * r.std_error);
    }
    if (sf.fit) sf_table.add_band("loglog_slope", 2.0 * c.h, sf.fit->slope, 0.15);
    out.text("structure_function.csv", sf_table.csv(), res);

    const auto es = energy_spectrum_estimate(model, c.diag_spectrum_ensemble, derive_seed(c.seed, 1u << 20), threads);
    ResultTable es_table;
    for (const auto& m : es.modes)
        es_table.add_band("mode_energy_z_" + std::to_string(m.z1) + "_" + std::to_string(m.z2), m.analytic, m.measured,
                          4.0 * m.std_error);
    for (const auto& s : es.shells)
        es_table.add_band("shell_energy_z2_" + std::to_string(s.norm2), s.analytic, s.measured, 4.0 * s.std_error);
    const bool kolmogorov = c.spectrum_kind == "kolmogorov";
    if (es.fit && kolmogorov) es_table.add_band("shell_slope", -5.0 / 3.0, es.fit->slope, 0.1);
    out.text("energy_spectrum.csv", es_table.csv(), res);

    const Vec2 disp{c.diag_displacement[0], c.diag_displacement[1]};
    const Vec2 other = wrap_unit(probe - disp);
    const double lag = static_cast<double>(c.diag_covariance_lag_steps) * c.diag_lag_dt;
    const Eigen::Matrix2d analytic = velocity_autocovariance_analytic(model, disp, lag);
    const auto est = velocity_covariance_estimate(model, probe, other, c.diag_lag_dt, c.diag_covariance_lag_steps,
                                                  c.diag_ensemble, derive_seed(c.seed, 2u << 20), threads);
    ResultTable cov_table;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            cov_table.add_band("covariance_" + std::to_string(i + 1) + std::to_string(j + 1), analytic(i, j),
                               est.mean(i, j), 4.0 * est.std_error(i, j));
    out.text("covariance.csv", cov_table.csv(), res);

    res.passed = sf_table.all_passed() && es_table.all_passed() && cov_table.all_passed();
    return res;
}

}  // namespace fracturb
