#pragma once

// Explicit absorbing velocity ball and finite-sample pullback clouds.
//
//   r(t0)^2 = (1 + delta)/tau * int_{-inf}^{t0} e^{(u - t0)/tau} c1(u)^2 du
//
// with the infinite history truncated at T_tail = tau ln(1/eps_tail) and the
// truncation bounded by e^{-T_tail/tau} (1 + delta) max c1^2.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"
#include "io.hpp"
#include "parallel.hpp"
#include "particles.hpp"
#include "rng.hpp"

namespace fracturb {

struct AbsorbingRadius {
    double r = 0.0;
    double delta = 0.0;
    double tail_error = 0.0;  ///< already included in r^2
    double t_tail = 0.0;      ///< history actually integrated
};

class InsufficientHistoryError : public std::out_of_range {
  public:
    using std::out_of_range::out_of_range;
};

inline constexpr double kDefaultTailEps = 1e-8;

/// c1 sampled on a field grid.
struct C1History {
    std::vector<double> values;
    double dt = 0.0;

    static C1History of(const FieldPath& field, int probe = 64, unsigned threads = 1) {
        return {c1_norm_series(field, probe, threads), field.grid().dt()};
    }
};

/// Field steps of history needed for the radius at any index.
inline std::size_t tail_steps(double tau, double dt, double eps_tail = kDefaultTailEps) {
    if (!(tau > 0.0)) throw std::invalid_argument("absorbing_radius: tau must be > 0");
    if (!(eps_tail > 0.0 && eps_tail < 1.0)) throw std::invalid_argument("absorbing_radius: eps_tail must lie in (0, 1)");
    return static_cast<std::size_t>(std::ceil(tau * std::log(1.0 / eps_tail) / dt - 1e-9));
}

inline AbsorbingRadius absorbing_radius(const C1History& c1, double tau, double delta, std::size_t t0_index,
                                        double eps_tail = kDefaultTailEps) {
    if (!(delta > 0.0)) throw std::invalid_argument("absorbing_radius: delta must be > 0");
    const std::size_t k = tail_steps(tau, c1.dt, eps_tail);
    if (t0_index >= c1.values.size()) throw std::out_of_range("absorbing_radius: t0 index outside the field grid");
    if (t0_index < k)
        throw InsufficientHistoryError("absorbing_radius: needs " + std::to_string(k) + " field steps of history before index " +
                                       std::to_string(t0_index));
    ExpWeightedIntegral history(tau, c1.dt);
    double max_sq = 0.0;
    for (std::size_t q = t0_index - k; q < t0_index; ++q) {
        history.step(c1.values[q] * c1.values[q], c1.values[q + 1] * c1.values[q + 1]);
        max_sq = std::max(max_sq, c1.values[q] * c1.values[q]);
    }
    max_sq = std::max(max_sq, c1.values[t0_index] * c1.values[t0_index]);

    AbsorbingRadius out;
    out.delta = delta;
    out.t_tail = static_cast<double>(k) * c1.dt;
    out.tail_error = std::exp(-out.t_tail / tau) * (1.0 + delta) * max_sq;
    out.r = std::sqrt((1.0 + delta) / tau * history.value() + out.tail_error);
    return out;
}

struct InvarianceReport {
    double r_start = 0.0;
    double r_end = 0.0;
    double worst_ratio = 0.0;  ///< max |y(t)| / r_end
    std::vector<std::size_t> offending;
    bool passed = true;
};

inline constexpr double kInvarianceSlack = 1e-6;

namespace detail {

inline InvarianceReport ball_report(const std::vector<ParticleState>& final_states, double r_start, double r_end) {
    InvarianceReport rep;
    rep.r_start = r_start;
    rep.r_end = r_end;
    for (std::size_t p = 0; p < final_states.size(); ++p) {
        const double y = final_states[p].y.norm();
        const double ratio = r_end > 0.0 ? y / r_end : (y == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        rep.worst_ratio = std::max(rep.worst_ratio, ratio);
        if (ratio > 1.0 + kInvarianceSlack) rep.offending.push_back(p);
    }
    rep.passed = rep.offending.empty();
    return rep;
}

// Uniform positions, velocities at radius `speed` with uniform direction.
inline std::vector<ParticleState> sphere_states(std::size_t n, double speed, std::uint64_t seed) {
    CounterStream stream({seed, 0, StreamTag::particles});
    std::vector<ParticleState> out(n);
    for (auto& s : out) {
        s.x = {stream.uniform_open(), stream.uniform_open()};
        const double angle = 2.0 * std::numbers::pi * stream.uniform_open();
        s.y = {speed * std::cos(angle), speed * std::sin(angle)};
    }
    return out;
}

}  // namespace detail

/// Starts n states on |y| = r(t0) and checks they are inside r(t0 + t) after `steps` particle steps.
inline InvarianceReport forward_invariance_check(const FieldPath& field, const C1History& c1, double tau, double delta,
                                                 std::size_t t0_index, std::size_t steps, std::size_t n,
                                                 std::uint64_t seed, unsigned threads = 1) {
    const AbsorbingRadius start = absorbing_radius(c1, tau, delta, t0_index);
    const std::size_t end_index = t0_index + 2 * steps;
    if (end_index >= field.grid().n()) throw std::out_of_range("forward_invariance_check: window runs past the field");
    const AbsorbingRadius end = absorbing_radius(c1, tau, delta, end_index);
    const SimConfig cfg = SimConfig::aligned(field, tau, t0_index, steps, 0);
    const Trajectory traj = integrate(field, cfg, detail::sphere_states(n, start.r, seed), threads);
    return detail::ball_report(traj.final_states(), start.r, end.r);
}

/// Starts n states at |y| = excess * r(t0) and integrates for tau ln(100 excess^2), after which
/// they must be inside the absorbing ball.
inline InvarianceReport absorption_check(const FieldPath& field, const C1History& c1, double tau, double delta,
                                         std::size_t t0_index, double excess, std::size_t n, std::uint64_t seed,
                                         unsigned threads = 1) {
    if (!(excess >= 1.0)) throw std::invalid_argument("absorption_check: excess must be >= 1");
    const AbsorbingRadius start = absorbing_radius(c1, tau, delta, t0_index);
    const double duration = tau * std::log(100.0 * excess * excess);
    const double h = 2.0 * field.grid().dt();
    const auto steps = static_cast<std::size_t>(std::ceil(duration / h));
    const std::size_t end_index = t0_index + 2 * steps;
    if (end_index >= field.grid().n()) throw std::out_of_range("absorption_check: window runs past the field");
    const AbsorbingRadius end = absorbing_radius(c1, tau, delta, end_index);
    const SimConfig cfg = SimConfig::aligned(field, tau, t0_index, steps, 0);
    const Trajectory traj = integrate(field, cfg, detail::sphere_states(n, excess * start.r, seed), threads);
    return detail::ball_report(traj.final_states(), start.r, end.r);
}

struct AttractorCloud {
    std::vector<ParticleState> points;
    double pullback_time = 0.0;
    double start_radius = 0.0;
    std::string field_hash;
    std::size_t samples = 0;
    std::uint64_t seed = 0;
};

/// Uniform states on torus x ball(r(start)) integrated from start_index to end_index.
inline AttractorCloud pullback_snapshot(const FieldPath& field, const C1History& c1, double tau, double delta,
                                        std::size_t start_index, std::size_t end_index, std::size_t n,
                                        std::uint64_t seed, unsigned threads = 1, double eps_tail = kDefaultTailEps) {
    if (end_index < start_index || (end_index - start_index) % 2 != 0)
        throw std::invalid_argument("pullback_snapshot: window must span an even number of field steps");
    const AbsorbingRadius radius = absorbing_radius(c1, tau, delta, start_index, eps_tail);

    CounterStream stream({seed, 0, StreamTag::particles});
    std::vector<ParticleState> initial(n);
    for (auto& s : initial) {
        s.x = {stream.uniform_open(), stream.uniform_open()};
        const double rho = radius.r * std::sqrt(stream.uniform_open());
        const double angle = 2.0 * std::numbers::pi * stream.uniform_open();
        s.y = {rho * std::cos(angle), rho * std::sin(angle)};
    }
    const SimConfig cfg = SimConfig::aligned(field, tau, start_index, (end_index - start_index) / 2, 0);
    AttractorCloud cloud;
    cloud.points = integrate(field, cfg, initial, threads).final_states();
    cloud.pullback_time = static_cast<double>(end_index - start_index) * field.grid().dt();
    cloud.start_radius = radius.r;
    cloud.field_hash = field_hash(field);
    cloud.samples = n;
    cloud.seed = seed;
    return cloud;
}

/// sup_{a in from} inf_{b in to} |a.y - b.y|, brute force.
inline double hausdorff_semidistance(const std::vector<ParticleState>& from, const std::vector<ParticleState>& to,
                                     unsigned threads = 1) {
    if (from.empty()) return 0.0;
    if (to.empty()) throw std::invalid_argument("hausdorff_semidistance: target cloud is empty");
    std::vector<double> nearest(from.size());
    parallel_for(from.size(), threads, [&](std::size_t i) {
        double best = std::numeric_limits<double>::infinity();
        for (const auto& b : to) best = std::min(best, (from[i].y - b.y).norm2());
        nearest[i] = best;
    });
    return std::sqrt(*std::max_element(nearest.begin(), nearest.end()));
}

}  // namespace fracturb
