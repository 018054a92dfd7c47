#pragma once

// Monte-Carlo estimators checked against closed-form targets, and the box-count
// clustering statistic.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <vector>

#include "field.hpp"
#include "fou.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "spectrum.hpp"
#include "vec2.hpp"

namespace fracturb {

/// Sample mean and standard error of the mean.
struct SampleSummary {
    double mean = 0.0;
    double std_error = 0.0;
    std::size_t count = 0;
};

inline SampleSummary summarize(const std::vector<double>& xs) {
    SampleSummary s;
    s.count = xs.size();
    if (xs.empty()) return s;
    double sum = 0.0;
    for (double x : xs) sum += x;
    s.mean = sum / static_cast<double>(xs.size());
    if (xs.size() > 1) {
        double ss = 0.0;
        for (double x : xs) ss += (x - s.mean) * (x - s.mean);
        s.std_error = std::sqrt(ss / static_cast<double>(xs.size() - 1) / static_cast<double>(xs.size()));
    }
    return s;
}

struct SlopeFit {
    double slope = 0.0;
    double intercept = 0.0;
    double std_error = 0.0;
};

/// Ordinary least squares of log(y) on log(x).
inline SlopeFit loglog_fit(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size() || x.size() < 3) throw std::invalid_argument("loglog_fit: need at least 3 points");
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] > 0.0 && y[i] > 0.0)) throw std::invalid_argument("loglog_fit: values must be positive");
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double dx = std::log(x[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log(y[i]) - my);
    }
    SlopeFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double rss = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double r = std::log(y[i]) - (fit.intercept + fit.slope * std::log(x[i]));
        rss += r * r;
    }
    fit.std_error = std::sqrt(rss / (n - 2.0) / sxx);
    return fit;
}

/// Fixed parameters shared by every synthesis in an ensemble.
struct FieldModel {
    SpectrumConfig spectrum;
    double nu = 1e-2;

    FouParams mode_params(const WaveMode& m) const { return {m.alpha, m.lambda, nu, spectrum.h}; }
};

/// E|v(x, t) - v(x, t - s)|^2 = sum over K of |k|^2 * 2 (c_k(0) - c_k(s)).
inline double structure_function_analytic(const FieldModel& model, double lag) {
    double total = 0.0;
    for (const auto& m : mode_set(model.spectrum)) {
        if (m.lambda == 0.0) continue;
        const FouParams p = model.mode_params(m);
        total += m.alpha * 2.0 * (fou_covariance(p, 0.0) - fou_covariance(p, lag));
    }
    return total;
}

/// Sum over K of |k|^2 lambda_k (nu |s|)^{2H}, the mode-wise upper bound.
inline double structure_function_upper(const FieldModel& model, double lag) {
    double total = 0.0;
    for (const auto& m : mode_set(model.spectrum)) {
        if (m.lambda == 0.0) continue;
        total += m.alpha * structure_function_bounds(model.mode_params(m), lag, model.spectrum.h).upper;
    }
    return total;
}

struct LagEstimate {
    double lag = 0.0;
    double estimate = 0.0;
    double std_error = 0.0;
    double analytic = 0.0;
    double upper = 0.0;
};

struct StructureFunctionResult {
    std::vector<LagEstimate> rows;
    std::optional<SlopeFit> fit;  ///< over the positive lags, when there are at least 3
};

/// Monte-Carlo E|v(x, t0 + lag) - v(x, t0)|^2 over `ensemble` independent syntheses on the
/// grid {0, dt, ..., max_lag}. Member i uses seed derive_seed(seed, i).
inline StructureFunctionResult structure_function_time(const FieldModel& model, Vec2 x, double dt,
                                                       const std::vector<std::size_t>& lag_steps, std::size_t ensemble,
                                                       std::uint64_t seed, unsigned threads = 1,
                                                       FactorCache* cache = nullptr) {
    if (lag_steps.empty()) throw std::invalid_argument("structure_function_time: no lags");
    if (ensemble < 2) throw std::invalid_argument("structure_function_time: ensemble must be >= 2");
    const std::size_t max_lag = *std::max_element(lag_steps.begin(), lag_steps.end());
    const TimeGrid grid(0.0, dt, max_lag + 1);
    FactorCache local;
    FactorCache& shared = cache ? *cache : local;

    std::vector<std::vector<double>> samples(lag_steps.size(), std::vector<double>(ensemble));
    // Warm the factor cache once, then sample members independently.
    synthesize(model.spectrum, model.nu, grid, derive_seed(seed, 0), {threads, &shared});
    parallel_for(ensemble, threads, [&](std::size_t i) {
        const FieldPath f = synthesize(model.spectrum, model.nu, grid, derive_seed(seed, i), {1, &shared});
        const Vec2 v0 = eval_velocity(f, x, 0);
        for (std::size_t l = 0; l < lag_steps.size(); ++l) samples[l][i] = (eval_velocity(f, x, lag_steps[l]) - v0).norm2();
    });

    StructureFunctionResult out;
    std::vector<double> xs, ys;
    for (std::size_t l = 0; l < lag_steps.size(); ++l) {
        const double lag = static_cast<double>(lag_steps[l]) * dt;
        const SampleSummary s = summarize(samples[l]);
        out.rows.push_back({lag, s.mean, s.std_error, structure_function_analytic(model, lag),
                            structure_function_upper(model, lag)});
        if (lag > 0.0 && s.mean > 0.0) {
            xs.push_back(lag);
            ys.push_back(s.mean);
        }
    }
    if (xs.size() >= 3) out.fit = loglog_fit(xs, ys);
    return out;
}

struct ModeEnergyEstimate {
    int z1 = 0, z2 = 0;
    double measured = 0.0;
    double std_error = 0.0;
    double analytic = 0.0;
};

struct ShellEnergyEstimate {
    int norm2 = 0;      ///< |z|^2
    double k = 0.0;     ///< |k|
    std::size_t modes = 0;
    double measured = 0.0;  ///< mean per-mode energy in the shell
    double std_error = 0.0;
    double analytic = 0.0;
};

struct EnergySpectrumResult {
    std::vector<ModeEnergyEstimate> modes;  ///< K+ order
    std::vector<ShellEnergyEstimate> shells;
    std::optional<SlopeFit> fit;  ///< log(|k| E_shell) against log |k|
};

/// Mode energy (1/2)|k|^2 |psi_k|^2 averaged over independent syntheses at a single time.
inline EnergySpectrumResult energy_spectrum_estimate(const FieldModel& model, std::size_t ensemble, std::uint64_t seed,
                                                     unsigned threads = 1) {
    if (ensemble < 2) throw std::invalid_argument("energy_spectrum_estimate: ensemble must be >= 2");
    const TimeGrid grid(0.0, 1.0, 1);
    const std::vector<WaveMode> half = positive_half(mode_set(model.spectrum));
    std::vector<std::vector<double>> energy(half.size(), std::vector<double>(ensemble));
    FactorCache cache;
    parallel_for(ensemble, threads, [&](std::size_t i) {
        const FieldPath f = synthesize(model.spectrum, model.nu, grid, derive_seed(seed, i), {1, &cache});
        for (std::size_t m = 0; m < half.size(); ++m) energy[m][i] = 0.5 * half[m].alpha * std::norm(f.coeff(m, 0));
    });

    EnergySpectrumResult out;
    std::map<int, std::vector<std::size_t>> shells;
    for (std::size_t m = 0; m < half.size(); ++m) {
        const SampleSummary s = summarize(energy[m]);
        out.modes.push_back({half[m].z1, half[m].z2, s.mean, s.std_error, mode_energy(half[m], model.spectrum.h)});
        shells[half[m].norm2()].push_back(m);
    }
    std::vector<double> ks, es;
    for (const auto& [n2, members] : shells) {
        // Per-member shell mean keeps the members' draws paired, so the error is a plain CLT error.
        std::vector<double> shell_mean(ensemble, 0.0);
        for (std::size_t i = 0; i < ensemble; ++i) {
            for (std::size_t m : members) shell_mean[i] += energy[m][i];
            shell_mean[i] /= static_cast<double>(members.size());
        }
        const SampleSummary s = summarize(shell_mean);
        ShellEnergyEstimate row;
        row.norm2 = n2;
        row.k = 2.0 * std::numbers::pi * std::sqrt(static_cast<double>(n2));
        row.modes = members.size();
        row.measured = s.mean;
        row.std_error = s.std_error;
        row.analytic = mode_energy(half[members.front()], model.spectrum.h);
        out.shells.push_back(row);
        if (s.mean > 0.0) {
            ks.push_back(row.k);
            es.push_back(row.k * s.mean);
        }
    }
    if (ks.size() >= 3) out.fit = loglog_fit(ks, es);
    return out;
}

/// R(x, y, t, s) = sum over K of [[k2^2, -k1 k2], [-k1 k2, k1^2]] c_k(t - s) cos<k, x - y>,
/// with c_k the full-coefficient fOU covariance (so c_k(0) = lambda_k Gamma(2H) H |k|^{-4H}).
inline Eigen::Matrix2d velocity_autocovariance_analytic(const FieldModel& model, Vec2 displacement, double lag) {
    Eigen::Matrix2d r = Eigen::Matrix2d::Zero();
    for (const auto& m : mode_set(model.spectrum)) {
        if (m.lambda == 0.0) continue;
        const double c = fou_covariance(model.mode_params(m), lag);
        const double phase = std::cos(m.k1 * displacement.a + m.k2 * displacement.b);
        Eigen::Matrix2d block;
        block << m.k2 * m.k2, -m.k1 * m.k2, -m.k1 * m.k2, m.k1 * m.k1;
        r += c * phase * block;
    }
    return r;
}

/// delta_k(s) = c_k(s) / c_k(0), the normalized time-lag factor of mode k.
inline double mode_time_factor(const FieldModel& model, const WaveMode& m, double lag) {
    const FouParams p = model.mode_params(m).with_lambda(1.0);
    return fou_covariance(p, lag) / fou_variance(p);
}

struct CovarianceEstimate {
    Eigen::Matrix2d mean = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d std_error = Eigen::Matrix2d::Zero();
};

/// Monte-Carlo E[v_i(x, t + lag) v_j(y, t)] over independent syntheses.
inline CovarianceEstimate velocity_covariance_estimate(const FieldModel& model, Vec2 x, Vec2 y, double dt,
                                                       std::size_t lag_steps, std::size_t ensemble, std::uint64_t seed,
                                                       unsigned threads = 1) {
    if (ensemble < 2) throw std::invalid_argument("velocity_covariance_estimate: ensemble must be >= 2");
    const TimeGrid grid(0.0, dt, lag_steps + 1);
    std::vector<std::vector<double>> prod(4, std::vector<double>(ensemble));
    FactorCache cache;
    synthesize(model.spectrum, model.nu, grid, derive_seed(seed, 0), {threads, &cache});
    parallel_for(ensemble, threads, [&](std::size_t i) {
        const FieldPath f = synthesize(model.spectrum, model.nu, grid, derive_seed(seed, i), {1, &cache});
        const Vec2 a = eval_velocity(f, x, lag_steps);
        const Vec2 b = eval_velocity(f, y, 0);
        prod[0][i] = a.a * b.a;
        prod[1][i] = a.a * b.b;
        prod[2][i] = a.b * b.a;
        prod[3][i] = a.b * b.b;
    });
    CovarianceEstimate out;
    for (int q = 0; q < 4; ++q) {
        const SampleSummary s = summarize(prod[static_cast<std::size_t>(q)]);
        out.mean(q / 2, q % 2) = s.mean;
        out.std_error(q / 2, q % 2) = s.std_error;
    }
    return out;
}

struct ClusterStats {
    int box_resolution = 0;
    double dispersion_index = 0.0;
    std::size_t n_particles = 0;
    bool sparse = false;  ///< mean box count below 5, index is noisy
};

/// Variance-to-mean ratio of particle counts in an m x m box partition of [0,1)^2.
inline ClusterStats dispersion_index(const std::vector<Vec2>& positions, int m) {
    if (positions.empty()) throw std::invalid_argument("dispersion_index: no particles");
    if (m < 1) throw std::invalid_argument("dispersion_index: box resolution must be >= 1");
    std::vector<std::size_t> counts(static_cast<std::size_t>(m) * static_cast<std::size_t>(m), 0);
    auto box = [m](double v) { return std::clamp(static_cast<int>(std::floor(v * m)), 0, m - 1); };
    for (const auto& p : positions) ++counts[static_cast<std::size_t>(box(p.a) * m + box(p.b))];
    const double mean = static_cast<double>(positions.size()) / static_cast<double>(counts.size());
    double var = 0.0;
    for (auto c : counts) var += (static_cast<double>(c) - mean) * (static_cast<double>(c) - mean);
    var /= static_cast<double>(counts.size());

    ClusterStats out;
    out.box_resolution = m;
    out.dispersion_index = var / mean;
    out.n_particles = positions.size();
    out.sparse = mean < 5.0;
    return out;
}

}  // namespace fracturb
