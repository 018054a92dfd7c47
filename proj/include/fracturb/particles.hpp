#pragma once

// Stokes-law inertial particles  tau x'' = v(x, t) - x'  and passive tracers
// x' = v(x, t), advanced with classical RK4 on the field's own time grid.
//
// A particle step spans two field steps, so the RK4 stages at t, t + h/2, t + h
// read field indices j, j + 1, j + 2 and no coefficient path is ever
// interpolated in time.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "field.hpp"
#include "parallel.hpp"
#include "rng.hpp"
#include "vec2.hpp"

namespace fracturb {

struct ParticleState {
    Vec2 x;  ///< position on [0,1)^2
    Vec2 y;  ///< velocity

    friend bool operator==(const ParticleState&, const ParticleState&) = default;
};

/// Largest dt/tau for which RK4 damps the drag term -y/tau reliably. The real
/// stability interval of RK4 ends at 2.785; staying below it leaves a margin.
inline constexpr double kRk4DragLimit = 2.5;

struct SimConfig {
    double tau = 1.0;  ///< Stokes time; 0 selects tracer mode
    double dt_particle = 0.0;
    std::size_t t_start_index = 0;
    std::size_t n_steps = 0;
    std::size_t stride = 10;  ///< store a frame every `stride` steps (0: first and last only)

    /// Config whose particle step is twice the field step of `field`.
    static SimConfig aligned(const FieldPath& field, double tau, std::size_t start, std::size_t steps,
                             std::size_t stride = 10) {
        return {tau, 2.0 * field.grid().dt(), start, steps, stride};
    }

    bool tracer() const noexcept { return tau == 0.0; }

    void validate(const FieldPath& field) const {
        if (!(tau >= 0.0) || !std::isfinite(tau)) throw std::invalid_argument("SimConfig: tau must be >= 0");
        if (dt_particle != 2.0 * field.grid().dt())
            throw std::invalid_argument("SimConfig: dt_particle must equal exactly 2 * dt_field (" +
                                        std::to_string(2.0 * field.grid().dt()) + ")");
        if (t_start_index + 2 * n_steps >= field.grid().n() && n_steps > 0)
            throw std::out_of_range("SimConfig: " + std::to_string(n_steps) + " steps from field index " +
                                    std::to_string(t_start_index) + " run past the field grid of " +
                                    std::to_string(field.grid().n()) + " points");
        if (t_start_index >= field.grid().n()) throw std::out_of_range("SimConfig: start index outside the field grid");
    }

    /// Inertial RK4 needs dt/tau below the drag limit; tiny tau belongs to tracer mode.
    bool drag_resolved() const noexcept { return tau > 0.0 && dt_particle / tau <= kRk4DragLimit; }
};

struct StateRate {
    Vec2 dx;
    Vec2 dy;
};

/// (x', y') = (y, (v(x, t_j) - y) / tau).
inline StateRate rhs(const FieldPath& field, double tau, std::size_t j, const ParticleState& s) {
    if (!(tau > 0.0)) throw std::invalid_argument("rhs: tau must be > 0 (use the tracer integrator for tau = 0)");
    const Vec2 v = eval_velocity(field, s.x, j);
    return {s.y, (1.0 / tau) * (v - s.y)};
}

/// One RK4 step of size dt_particle starting at field index j.
inline ParticleState rk4_step(const FieldPath& field, const SimConfig& cfg, std::size_t j, const ParticleState& s) {
    field.check_index(j + 2);
    const double h = cfg.dt_particle;
    const double tau = cfg.tau;
    auto shift = [](const ParticleState& p, double c, const StateRate& k) {
        return ParticleState{p.x + c * k.dx, p.y + c * k.dy};
    };
    const StateRate k1 = rhs(field, tau, j, s);
    const StateRate k2 = rhs(field, tau, j + 1, shift(s, 0.5 * h, k1));
    const StateRate k3 = rhs(field, tau, j + 1, shift(s, 0.5 * h, k2));
    const StateRate k4 = rhs(field, tau, j + 2, shift(s, h, k3));
    ParticleState out;
    out.x = s.x + (h / 6.0) * (k1.dx + 2.0 * k2.dx + 2.0 * k3.dx + k4.dx);
    out.y = s.y + (h / 6.0) * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy);
    out.x = wrap_unit(out.x);
    return out;
}

/// One RK4 step of x' = v(x, t) from field index j.
inline Vec2 rk4_tracer_step(const FieldPath& field, double h, std::size_t j, Vec2 x) {
    field.check_index(j + 2);
    const Vec2 k1 = eval_velocity(field, x, j);
    const Vec2 k2 = eval_velocity(field, x + (0.5 * h) * k1, j + 1);
    const Vec2 k3 = eval_velocity(field, x + (0.5 * h) * k2, j + 1);
    const Vec2 k4 = eval_velocity(field, x + h * k3, j + 2);
    return wrap_unit(x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
}

/// n points uniform on the torus, drawn in order from `stream`.
inline std::vector<Vec2> uniform_torus_points(std::size_t n, CounterStream& stream) {
    std::vector<Vec2> out(n);
    for (auto& p : out) {
        p.a = stream.uniform_open();
        p.b = stream.uniform_open();
    }
    return out;
}

inline std::vector<Vec2> positions_of(const std::vector<ParticleState>& states) {
    std::vector<Vec2> out;
    out.reserve(states.size());
    for (const auto& s : states) out.push_back(s.x);
    return out;
}

/// Stored frames, frame-major: frames[f * n_particles + p] is particle p at step frame_steps[f].
struct Trajectory {
    std::size_t n_particles = 0;
    std::vector<std::size_t> frame_steps;
    std::vector<ParticleState> frames;

    ParticleState at(std::size_t frame, std::size_t particle) const { return frames[frame * n_particles + particle]; }
    std::vector<ParticleState> final_states() const {
        if (frame_steps.empty()) return {};
        const auto begin = frames.begin() + static_cast<std::ptrdiff_t>((frame_steps.size() - 1) * n_particles);
        return {begin, frames.end()};
    }
};

class IntegrationError : public std::runtime_error {
  public:
    IntegrationError(std::size_t particle, std::size_t step)
        : std::runtime_error("non-finite particle state: particle " + std::to_string(particle) + " at step " +
                             std::to_string(step)),
          particle_(particle), step_(step) {}
    std::size_t particle() const noexcept { return particle_; }
    std::size_t step() const noexcept { return step_; }

  private:
    std::size_t particle_, step_;
};

namespace detail {

inline std::vector<std::size_t> frame_schedule(std::size_t n_steps, std::size_t stride) {
    std::vector<std::size_t> steps{0};
    if (stride > 0)
        for (std::size_t s = stride; s < n_steps; s += stride) steps.push_back(s);
    if (n_steps > 0) steps.push_back(n_steps);
    return steps;
}

inline bool finite(const ParticleState& s) {
    return std::isfinite(s.x.a) && std::isfinite(s.x.b) && std::isfinite(s.y.a) && std::isfinite(s.y.b);
}

// Runs `advance(step, state)` for every particle and records frames. Failures are
// reported for the lowest particle index so the message does not depend on scheduling.
template <class Advance>
Trajectory run_particles(const SimConfig& cfg, const std::vector<ParticleState>& initial, unsigned threads,
                         Advance advance) {
    Trajectory out;
    out.n_particles = initial.size();
    out.frame_steps = frame_schedule(cfg.n_steps, cfg.stride);
    if (initial.empty()) return out;
    const std::size_t n = initial.size();
    out.frames.resize(out.frame_steps.size() * n);
    constexpr std::size_t kNoFailure = std::numeric_limits<std::size_t>::max();
    std::vector<std::size_t> failed_step(n, kNoFailure);

    parallel_for(n, threads, [&](std::size_t p) {
        ParticleState s = initial[p];
        out.frames[p] = s;
        std::size_t next_frame = 1;
        for (std::size_t step = 0; step < cfg.n_steps; ++step) {
            s = advance(step, s);
            if (!finite(s)) {
                failed_step[p] = step;
                return;
            }
            if (next_frame < out.frame_steps.size() && out.frame_steps[next_frame] == step + 1)
                out.frames[next_frame++ * n + p] = s;
        }
    });
    for (std::size_t p = 0; p < n; ++p)
        if (failed_step[p] != kNoFailure) throw IntegrationError(p, failed_step[p]);
    return out;
}

}  // namespace detail

/// Integrates every particle independently; the record is ordered by particle index.
inline Trajectory integrate(const FieldPath& field, const SimConfig& cfg, const std::vector<ParticleState>& initial,
                            unsigned threads = 1) {
    cfg.validate(field);
    if (cfg.tracer()) throw std::invalid_argument("integrate: tau = 0 selects the tracer integrator");
    if (!cfg.drag_resolved())
        throw std::invalid_argument("integrate: dt_particle / tau = " + std::to_string(cfg.dt_particle / cfg.tau) +
                                    " exceeds the RK4 drag limit " + std::to_string(kRk4DragLimit) +
                                    "; use the tracer integrator or a finer field grid");
    for (const auto& s : initial)
        if (!detail::finite(s)) throw std::invalid_argument("integrate: initial state is not finite");
    return detail::run_particles(cfg, initial, threads, [&](std::size_t step, const ParticleState& s) {
        return rk4_step(field, cfg, cfg.t_start_index + 2 * step, s);
    });
}

/// Passive tracers. The stored velocity is the fluid velocity at the stored position.
inline Trajectory integrate_tracer(const FieldPath& field, const SimConfig& cfg, const std::vector<Vec2>& initial,
                                   unsigned threads = 1) {
    cfg.validate(field);
    std::vector<ParticleState> start(initial.size());
    for (std::size_t p = 0; p < initial.size(); ++p) {
        start[p].x = initial[p];
        start[p].y = eval_velocity(field, initial[p], cfg.t_start_index);
    }
    return detail::run_particles(cfg, start, threads, [&](std::size_t step, const ParticleState& s) {
        const std::size_t j = cfg.t_start_index + 2 * step;
        const Vec2 x = rk4_tracer_step(field, cfg.dt_particle, j, s.x);
        return ParticleState{x, eval_velocity(field, x, j + 2)};
    });
}

/// Running value of int_{t_0}^{t} e^{-(t-u)/tau} f(u) du for f sampled on a uniform
/// grid, with f linear between samples and the exponential weight integrated exactly.
class ExpWeightedIntegral {
  public:
    ExpWeightedIntegral(double tau, double h) : decay_(std::exp(-h / tau)) {
        if (!(tau > 0.0) || !(h > 0.0)) throw std::invalid_argument("ExpWeightedIntegral: tau and h must be > 0");
        const double one_minus = -std::expm1(-h / tau);
        right_ = tau * (1.0 - (tau / h) * one_minus);
        left_ = tau * one_minus - right_;
    }

    /// Advances one grid step, from sample f_prev to sample f_next.
    void step(double f_prev, double f_next) { value_ = decay_ * value_ + left_ * f_prev + right_ * f_next; }

    double value() const noexcept { return value_; }
    double decay() const noexcept { return decay_; }

  private:
    double decay_, left_ = 0.0, right_ = 0.0;
    double value_ = 0.0;
};

/// Right-hand side of |y(t)|^2 <= e^{-t/tau}|y(0)|^2 + (1/tau) int_0^t e^{-(t-s)/tau} c1(s)^2 ds
/// at every particle step, given c1 on the field grid and |y(0)|^2.
inline std::vector<double> energy_bound(const std::vector<double>& c1_field, const SimConfig& cfg, double dt_field,
                                        double y0_squared) {
    if (cfg.t_start_index + 2 * cfg.n_steps >= c1_field.size() && cfg.n_steps > 0)
        throw std::out_of_range("energy_bound: c1 series shorter than the integration window");
    ExpWeightedIntegral forcing(cfg.tau, dt_field);
    std::vector<double> bound(cfg.n_steps + 1);
    bound[0] = y0_squared;
    for (std::size_t step = 0; step < cfg.n_steps; ++step) {
        const std::size_t j = cfg.t_start_index + 2 * step;
        for (std::size_t q = j; q < j + 2; ++q) forcing.step(c1_field[q] * c1_field[q], c1_field[q + 1] * c1_field[q + 1]);
        const double t = static_cast<double>(step + 1) * cfg.dt_particle;
        bound[step + 1] = std::exp(-t / cfg.tau) * y0_squared + forcing.value() / cfg.tau;
    }
    return bound;
}

}  // namespace fracturb
