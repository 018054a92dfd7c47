#pragma once

// Stationary fractional Ornstein-Uhlenbeck (fOU) processes
//
//     Y_t = nu^H sqrt(lambda) * int_{-inf}^t exp(-(t-u) nu alpha) d beta^H_u
//
// exact covariance kernel (oscillatory spectral integral), closed-form
// variance, structure-function bounds, and exact sampling on a uniform time
// grid through a Cholesky factor of the Toeplitz covariance matrix.

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "quadrature.hpp"
#include "rng.hpp"

namespace fracturb {

/// Parameters (alpha, lambda, nu, H) of one fractional Langevin equation.
class FouParams {
  public:
    FouParams(double alpha, double lambda, double nu, double h) : alpha_(alpha), lambda_(lambda), nu_(nu), h_(h) {
        if (!(alpha > 0.0) || !std::isfinite(alpha)) throw std::invalid_argument("FouParams: alpha must be > 0");
        if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("FouParams: lambda must be >= 0");
        if (!(nu > 0.0) || !std::isfinite(nu)) throw std::invalid_argument("FouParams: nu must be > 0");
        if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("FouParams: H must lie in (0, 1)");
    }

    double alpha() const noexcept { return alpha_; }
    double lambda() const noexcept { return lambda_; }
    double nu() const noexcept { return nu_; }
    double h() const noexcept { return h_; }

    FouParams with_lambda(double lambda) const { return {alpha_, lambda, nu_, h_}; }

    std::string describe() const {
        std::ostringstream os;
        os.precision(17);
        os << "(alpha=" << alpha_ << ", lambda=" << lambda_ << ", nu=" << nu_ << ", H=" << h_ << ")";
        return os.str();
    }

  private:
    double alpha_, lambda_, nu_, h_;
};

/// Uniform time grid t0 + j*dt, j = 0..n-1.
class TimeGrid {
  public:
    TimeGrid(double t0, double dt, std::size_t n) : t0_(t0), dt_(dt), n_(n) {
        if (!std::isfinite(t0)) throw std::invalid_argument("TimeGrid: t0 must be finite");
        if (!(dt > 0.0) || !std::isfinite(dt)) throw std::invalid_argument("TimeGrid: dt must be > 0");
        if (n == 0) throw std::invalid_argument("TimeGrid: n must be >= 1");
    }

    double t0() const noexcept { return t0_; }
    double dt() const noexcept { return dt_; }
    std::size_t n() const noexcept { return n_; }
    double time(std::size_t j) const noexcept { return t0_ + static_cast<double>(j) * dt_; }
    double span() const noexcept { return static_cast<double>(n_ - 1) * dt_; }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

  private:
    double t0_, dt_;
    std::size_t n_;
};

/// Largest grid the exact (Cholesky) sampler accepts.
inline constexpr std::size_t kCholeskyCap = 8192;

/// C(H) = Gamma(2H+1) sin(pi H) / pi.
inline double fou_constant(double h) { return std::tgamma(2.0 * h + 1.0) * std::sin(std::numbers::pi * h) / std::numbers::pi; }

/// Var(Y_t) = lambda Gamma(2H) H / alpha^{2H}.
inline double fou_variance(const FouParams& p) {
    return p.lambda() * std::tgamma(2.0 * p.h()) * p.h() / std::pow(p.alpha(), 2.0 * p.h());
}

namespace detail {

// Relative/absolute targets for the spectral integral; the floor is taken
// relative to the zero-lag value so far-tail lags do not chase 1e-9 of ~0.
inline constexpr double kKernelRelTarget = 1e-9;
inline constexpr double kKernelFloor = 1e-13;
inline constexpr std::size_t kKernelPanelBudget = 1'000'000;

/// int_0^inf x^{1-2H} / (1 + x^2) dx = pi / (2 sin(pi H)).
inline double kernel_zero_lag_closed(double h) { return std::numbers::pi / (2.0 * std::sin(std::numbers::pi * h)); }

// int_0^a x^{1-2H} cos(w x) / (1 + x^2) dx for a <= pi/(2w) (or a <= 1 when w = 0).
// The two leading Taylor terms of cos(w x)/(1+x^2) = 1 - (1 + w^2/2) x^2 + O(x^4)
// are integrated against x^{1-2H} analytically; the O(x^{5-2H}) remainder is
// smooth enough for plain adaptive quadrature.
inline QuadResult kernel_near_origin(double h, double omega, double a, const AdaptiveOptions& opt) {
    const double p = 1.0 - 2.0 * h;
    const double g2 = -(1.0 + 0.5 * omega * omega);
    const double analytic = std::pow(a, p + 1.0) / (p + 1.0) + g2 * std::pow(a, p + 3.0) / (p + 3.0);
    auto remainder = [=](double x) {
        if (x == 0.0) return 0.0;
        const double x2 = x * x;
        const double g = std::cos(omega * x) / (1.0 + x2);
        return std::pow(x, p) * (g - 1.0 - g2 * x2);
    };
    QuadResult r = integrate_adaptive(remainder, 0.0, a, opt);
    r.value += analytic;
    return r;
}

}  // namespace detail

/// I(H, w) = int_0^inf cos(w x) x^{1-2H} / (1 + x^2) dx, w >= 0.
///
/// [0, min(1, pi/2w)] uses singularity subtraction; when the first zero of
/// cos(w x) lies beyond 1 the gap is covered by geometric blocks. From the
/// first zero on, half-period integrals form an alternating series summed with
/// Wynn's epsilon algorithm. Panels are never wider than pi/(4w).
inline QuadResult fou_spectral_integral(double h, double omega) {
    using detail::kKernelFloor;
    using detail::kKernelRelTarget;
    if (!(h > 0.0 && h < 1.0)) throw std::invalid_argument("fou_spectral_integral: H must lie in (0, 1)");
    omega = std::abs(omega);
    if (!std::isfinite(omega)) throw std::invalid_argument("fou_spectral_integral: lag must be finite");

    const double pi = std::numbers::pi;
    const double scale = detail::kernel_zero_lag_closed(h);
    const double p = 1.0 - 2.0 * h;
    auto integrand = [=](double x) { return std::cos(omega * x) * std::pow(x, p) / (1.0 + x * x); };

    AdaptiveOptions opt;
    opt.abs_tol = 1e-3 * kKernelFloor * scale;
    opt.rel_tol = 1e-12;
    opt.panel_budget = detail::kKernelPanelBudget;
    if (omega > 0.0) opt.max_panel_width = pi / (4.0 * omega);

    QuadResult total;
    auto add = [&](const QuadResult& r) {
        total.value += r.value;
        total.error += r.error;
        total.panels += r.panels;
        if (total.panels > detail::kKernelPanelBudget)
            throw QuadratureError("spectral integral exceeded its panel budget", total.error);
    };

    if (omega == 0.0) {
        AdaptiveOptions plain = opt;
        add(detail::kernel_near_origin(h, 0.0, 1.0, plain));
        add(integrate_adaptive(integrand, 1.0, 2.0, plain));
        // int_X^inf x^{1-2H}/(1+x^2) dx = sum_j (-1)^j X^{-2H-2j} / (2H + 2j), X = 2.
        double tail = 0.0;
        double term_scale = std::pow(2.0, -2.0 * h);
        for (int j = 0; j < 60; ++j) {
            const double term = term_scale / (2.0 * h + 2.0 * j);
            tail += (j % 2 == 0) ? term : -term;
            term_scale *= 0.25;
        }
        total.value += tail;
    } else {
        const double half_period = pi / omega;
        auto zero = [&](double j) { return (j + 0.5) * half_period; };
        const double first_zero = zero(0.0);
        const double a = std::min(1.0, first_zero);
        add(detail::kernel_near_origin(h, omega, a, opt));

        if (first_zero >= 1.0) {
            double lo = 1.0;
            while (lo < first_zero) {
                const double hi = std::min(2.0 * lo, first_zero);
                add(integrate_adaptive(integrand, lo, hi, opt));
                lo = hi;
            }
        }

        // Alternating tail.
        WynnEpsilon accel;
        double partial = 0.0;
        double tail_error = 0.0;
        constexpr int kMinTerms = 8;
        constexpr int kMaxTerms = 4000;
        bool converged = false;
        for (int m = 0; m < kMaxTerms; ++m) {
            const double lo = zero(m);
            const double hi = zero(m + 1.0);
            const QuadResult piece = integrate_adaptive(integrand, lo, hi, opt);
            partial += piece.value;
            tail_error += piece.error;
            total.panels += piece.panels;
            accel.push(partial);
            if (m + 1 >= kMinTerms) {
                const double target =
                    std::max(1e-2 * kKernelRelTarget * std::abs(total.value + accel.estimate()), 1e-2 * kKernelFloor * scale);
                if (accel.error() <= target) {
                    converged = true;
                    break;
                }
            }
            if (total.panels > detail::kKernelPanelBudget) break;
        }
        const double extrapolation_error = accel.error();
        total.value += accel.estimate();
        total.error += tail_error + extrapolation_error;
        if (!converged)
            throw QuadratureError("spectral integral tail did not converge for omega=" + std::to_string(omega), total.error);
    }

    const double target = std::max(kKernelRelTarget * std::abs(total.value), kKernelFloor * scale);
    if (!(total.error <= target))
        throw QuadratureError("spectral integral missed its tolerance for omega=" + std::to_string(omega), total.error);
    return total;
}

/// Cov(Y_t, Y_{t-s}) = C(H) lambda / alpha^{2H} * I(H, |s| nu alpha).
inline double fou_covariance(const FouParams& p, double s) {
    if (!std::isfinite(s)) throw std::invalid_argument("fou_covariance: lag must be finite");
    if (p.lambda() == 0.0) return 0.0;
    const double omega = std::abs(s) * p.nu() * p.alpha();
    const QuadResult r = fou_spectral_integral(p.h(), omega);
    return fou_constant(p.h()) * p.lambda() / std::pow(p.alpha(), 2.0 * p.h()) * r.value;
}

/// Bounds on E|Y_t - Y_s|^2 at lag s.
struct StructureBounds {
    std::optional<double> lower;  ///< only when a window [-T, T] containing the lag was supplied
    double upper = 0.0;
};

/// Upper bound E|Y_t - Y_s|^2 <= C2 lambda alpha^{2g-2H} |s|^{2g} for 0 < g <= H, and the
/// window-dependent lower bound proportional to |s|^{2H} on [-T, T].
///
/// g = H:  upper = 2 C(H) lambda (nu|s|)^{2H} int_0^inf (1 - cos z) z^{-1-2H} dz  (= lambda (nu|s|)^{2H}).
/// g < H:  upper = 4 C(H) lambda alpha^{2g-2H} (nu|s|/2)^{2g} int_0^inf x^{1+2g-2H} / (1+x^2) dx,
///         from sin^2(y) <= |y|^{2g}.
/// lower = 2 C(H) lambda (nu|s|)^{2H} int_0^inf (1 - cos z) z^{1-2H} / (b^2 + z^2) dz, b = 2 T nu alpha,
///       = 2 C(H) lambda (nu|s|)^{2H} b^{-2H} (I(H, 0) - I(H, b)).
inline StructureBounds structure_function_bounds(const FouParams& p, double s, double gamma,
                                                 std::optional<double> window = std::nullopt) {
    const double h = p.h();
    if (!(gamma > 0.0 && gamma <= h)) throw std::domain_error("structure_function_bounds: gamma must lie in (0, H]");
    if (!std::isfinite(s)) throw std::invalid_argument("structure_function_bounds: lag must be finite");
    const double pi = std::numbers::pi;
    const double c = fou_constant(h);
    const double lag = std::abs(s);

    StructureBounds out;
    if (gamma == h) {
        const double increment_integral = pi / (2.0 * std::tgamma(2.0 * h + 1.0) * std::sin(pi * h));
        out.upper = 2.0 * c * p.lambda() * std::pow(p.nu() * lag, 2.0 * h) * increment_integral;
    } else {
        const double moment = pi / (2.0 * std::sin(pi * (h - gamma)));
        out.upper = 4.0 * c * p.lambda() * std::pow(p.alpha(), 2.0 * gamma - 2.0 * h) *
                    std::pow(0.5 * p.nu() * lag, 2.0 * gamma) * moment;
    }

    if (window) {
        const double t_window = *window;
        if (!(t_window > 0.0)) throw std::invalid_argument("structure_function_bounds: window must be > 0");
        if (lag > 2.0 * t_window) throw std::domain_error("structure_function_bounds: lag outside the window");
        if (lag == 0.0 || p.lambda() == 0.0) {
            out.lower = 0.0;
        } else {
            const double b = 2.0 * t_window * p.nu() * p.alpha();
            const double damped = std::pow(b, -2.0 * h) *
                                  (fou_spectral_integral(h, 0.0).value - fou_spectral_integral(h, b).value);
            out.lower = 2.0 * c * p.lambda() * std::pow(p.nu() * lag, 2.0 * h) * damped;
        }
    }
    return out;
}

/// First row of the Toeplitz covariance matrix: Cov(Y_0, Y_{j dt}), j = 0..n-1.
inline std::vector<double> fou_covariance_row(const FouParams& p, const TimeGrid& grid) {
    std::vector<double> row(grid.n());
    for (std::size_t j = 0; j < grid.n(); ++j) row[j] = fou_covariance(p, static_cast<double>(j) * grid.dt());
    return row;
}

inline Eigen::MatrixXd toeplitz_from_row(const std::vector<double>& row) {
    const auto n = static_cast<Eigen::Index>(row.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index j = 0; j < n; ++j)
        for (Eigen::Index i = 0; i < n; ++i) m(i, j) = row[static_cast<std::size_t>(std::abs(i - j))];
    return m;
}

/// M[i][j] = fou_covariance(p, (i - j) dt); built from n kernel evaluations.
inline Eigen::MatrixXd fou_covariance_matrix(const FouParams& p, const TimeGrid& grid) {
    return toeplitz_from_row(fou_covariance_row(p, grid));
}

class FactorizationError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

class GridTooLargeError : public std::length_error {
  public:
    using std::length_error::length_error;
};

/// Lower Cholesky factor of the unit-lambda covariance matrix, stored packed by rows.
class CholeskyFactor {
  public:
    /// Jitter levels (fractions of the variance added to the diagonal) tried in order.
    static constexpr double kJitterLevels[4] = {0.0, 1e-12, 1e-10, 1e-8};

    CholeskyFactor(const FouParams& params, const TimeGrid& grid) : n_(grid.n()) {
        if (grid.n() > kCholeskyCap)
            throw GridTooLargeError("exact fOU sampling is limited to " + std::to_string(kCholeskyCap) +
                                    " grid points (requested " + std::to_string(grid.n()) +
                                    "); use a coarser or shorter grid");
        const FouParams unit = params.with_lambda(1.0);
        const std::vector<double> row = fou_covariance_row(unit, grid);
        const double variance = row[0];

        const auto n = static_cast<Eigen::Index>(n_);
        for (double eps : kJitterLevels) {
            Eigen::MatrixXd m = toeplitz_from_row(row);
            if (eps > 0.0) m.diagonal().array() += eps * variance;
            Eigen::LLT<Eigen::Ref<Eigen::MatrixXd>> llt(m);
            if (llt.info() != Eigen::Success) continue;
            jitter_ = eps;
            packed_.resize(n_ * (n_ + 1) / 2);
            std::size_t k = 0;
            for (Eigen::Index i = 0; i < n; ++i)
                for (Eigen::Index j = 0; j <= i; ++j) packed_[k++] = m(i, j);
            return;
        }
        throw FactorizationError("Cholesky factorization failed after maximal jitter for mode parameters " +
                                 unit.describe() + " on " + std::to_string(n_) + " points, dt=" +
                                 std::to_string(grid.dt()));
    }

    std::size_t size() const noexcept { return n_; }
    double jitter() const noexcept { return jitter_; }

    double at(std::size_t i, std::size_t j) const noexcept { return j > i ? 0.0 : packed_[i * (i + 1) / 2 + j]; }

    /// out = scale * L * xi.
    void apply(std::span<const double> xi, std::span<double> out, double scale) const {
        if (xi.size() != n_ || out.size() != n_) throw std::invalid_argument("CholeskyFactor::apply: size mismatch");
        const double* row = packed_.data();
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j <= i; ++j) acc += row[j] * xi[j];
            out[i] = scale * acc;
            row += i + 1;
        }
    }

  private:
    std::size_t n_;
    double jitter_ = 0.0;
    std::vector<double> packed_;
};

/// Shares Cholesky factors between callers; keyed by everything the unit-lambda
/// covariance depends on. Safe for concurrent use.
class FactorCache {
  public:
    std::shared_ptr<const CholeskyFactor> get(const FouParams& params, const TimeGrid& grid) {
        const Key key{params.alpha(), params.nu(), params.h(), grid.dt(), grid.n()};
        {
            std::lock_guard lock(mutex_);
            if (auto it = factors_.find(key); it != factors_.end()) return it->second;
        }
        auto built = std::make_shared<const CholeskyFactor>(params, grid);
        std::lock_guard lock(mutex_);
        auto [it, inserted] = factors_.emplace(key, std::move(built));
        return it->second;
    }

    std::size_t size() const {
        std::lock_guard lock(mutex_);
        return factors_.size();
    }

    void clear() {
        std::lock_guard lock(mutex_);
        factors_.clear();
    }

  private:
    using Key = std::tuple<double, double, double, double, std::size_t>;
    mutable std::mutex mutex_;
    std::map<Key, std::shared_ptr<const CholeskyFactor>> factors_;
};

/// One sampled path of a stationary fOU process.
struct RealFouPath {
    TimeGrid grid;
    std::vector<double> values;
    FouParams params;
    double variance_scale = 1.0;
    double jitter = 0.0;
};

namespace detail {

inline void check_variance_scale(double variance_scale) {
    if (variance_scale != 1.0 && variance_scale != 0.5)
        throw std::invalid_argument("variance_scale must be 1 (real process) or 1/2 (complex component)");
}

inline void check_cap(const TimeGrid& grid) {
    if (grid.n() > kCholeskyCap)
        throw GridTooLargeError("exact fOU sampling is limited to " + std::to_string(kCholeskyCap) +
                                " grid points (requested " + std::to_string(grid.n()) +
                                "); no approximate sampler is provided");
}

}  // namespace detail

/// Exact sample L xi sqrt(variance_scale lambda) using a precomputed unit-lambda factor.
inline RealFouPath sample_real_fou(const FouParams& params, const TimeGrid& grid, double variance_scale,
                                   CounterStream& stream, const CholeskyFactor& factor) {
    detail::check_variance_scale(variance_scale);
    detail::check_cap(grid);
    if (factor.size() != grid.n()) throw std::invalid_argument("sample_real_fou: factor does not match the grid");
    RealFouPath path{grid, std::vector<double>(grid.n(), 0.0), params, variance_scale, factor.jitter()};
    std::vector<double> xi(grid.n());
    for (double& v : xi) v = stream.normal();
    if (params.lambda() == 0.0) return path;
    factor.apply(xi, path.values, std::sqrt(variance_scale * params.lambda()));
    return path;
}

inline RealFouPath sample_real_fou(const FouParams& params, const TimeGrid& grid, double variance_scale,
                                   CounterStream& stream, FactorCache* cache = nullptr) {
    detail::check_variance_scale(variance_scale);
    detail::check_cap(grid);
    if (params.lambda() == 0.0) return {grid, std::vector<double>(grid.n(), 0.0), params, variance_scale, 0.0};
    if (cache) return sample_real_fou(params, grid, variance_scale, stream, *cache->get(params, grid));
    const CholeskyFactor factor(params, grid);
    return sample_real_fou(params, grid, variance_scale, stream, factor);
}

struct ComplexCoeffPath {
    RealFouPath re;
    RealFouPath im;
};

/// Real and imaginary parts of one complex Fourier coefficient: two independent
/// paths, each with half the variance, so that E|re + i im|^2 = fou_variance(params).
inline ComplexCoeffPath sample_complex_coeff_pair(const FouParams& params, const TimeGrid& grid, std::uint64_t seed,
                                                  std::uint32_t stream_index, FactorCache* cache = nullptr) {
    CounterStream re_stream({seed, stream_index, StreamTag::re});
    CounterStream im_stream({seed, stream_index, StreamTag::im});
    if (params.lambda() == 0.0)
        return {sample_real_fou(params, grid, 0.5, re_stream), sample_real_fou(params, grid, 0.5, im_stream)};
    detail::check_cap(grid);
    std::shared_ptr<const CholeskyFactor> factor =
        cache ? cache->get(params, grid) : std::make_shared<const CholeskyFactor>(params, grid);
    return {sample_real_fou(params, grid, 0.5, re_stream, *factor), sample_real_fou(params, grid, 0.5, im_stream, *factor)};
}

}  // namespace fracturb
