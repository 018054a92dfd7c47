#pragma once

// Adaptive Gauss-Kronrod quadrature and Wynn's epsilon accelerator. These are
// the building blocks for the oscillatory covariance integrals in fou.hpp.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <queue>
#include <stdexcept>
#include <string>
#include <vector>

namespace fracturb {

struct QuadResult {
    double value = 0.0;
    double error = 0.0;
    std::size_t panels = 0;
};

/// Thrown when an integral does not reach its tolerance within the panel budget.
class QuadratureError : public std::runtime_error {
  public:
    QuadratureError(const std::string& what, double achieved_error)
        : std::runtime_error(what + " (achieved error estimate " + std::to_string(achieved_error) + ")"),
          achieved_error_(achieved_error) {}
    double achieved_error() const noexcept { return achieved_error_; }

  private:
    double achieved_error_;
};

namespace detail {

// 21-point Kronrod rule with embedded 10-point Gauss rule (QUADPACK dqk21).
inline constexpr double kGkNodes[11] = {
    0.995657163025808080735527280689003, 0.973906528517171720077964012084452,
    0.930157491355708226001207180059508, 0.865063366688984510732096688423493,
    0.780817726586416897063717578345042, 0.679409568299024406234327365114874,
    0.562757134668604683339000099272694, 0.433395394129247190799265943165784,
    0.294392862701460198131126603103866, 0.148874338981631210884826001129720,
    0.0};
inline constexpr double kKronrodWeights[11] = {
    0.011694638867371874278064396062192, 0.032558162307964727478818972459390,
    0.054755896574351996031381300244580, 0.075039674810919952767043140916190,
    0.093125454583697605535065465083366, 0.109387158802297641899210590325805,
    0.123491976262065851077958109831074, 0.134709217311473325928054001771707,
    0.142775938577060080797094273138717, 0.147739104901338491374841515972068,
    0.149445554002916905664936468389821};
inline constexpr double kGaussWeights[5] = {
    0.066671344308688137593568809893332, 0.149451349150580593145776339657697,
    0.219086362515982043995534934228163, 0.269266719309996355091226921569469,
    0.295524224714752870173892994651338};

struct Panel {
    double a, b, value, error;
    bool operator<(const Panel& o) const noexcept { return error < o.error; }
};

template <class F>
Panel gauss_kronrod21(const F& f, double a, double b) {
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const double fc = f(centre);
    double kronrod = fc * kKronrodWeights[10];
    double gauss = 0.0;
    for (int j = 0; j < 10; ++j) {
        const double dx = half * kGkNodes[j];
        const double fsum = f(centre - dx) + f(centre + dx);
        kronrod += kKronrodWeights[j] * fsum;
        if (j % 2 == 1) gauss += kGaussWeights[j / 2] * fsum;
    }
    kronrod *= half;
    gauss *= half;
    return {a, b, kronrod, std::abs(kronrod - gauss)};
}

}  // namespace detail

struct AdaptiveOptions {
    double abs_tol = 1e-14;
    double rel_tol = 1e-12;
    /// Panels wider than this are split before any error test (0 = no cap).
    double max_panel_width = 0.0;
    std::size_t panel_budget = 1'000'000;
};

/// Globally adaptive 21-point Gauss-Kronrod quadrature of f over [a, b].
/// Throws QuadratureError if the budget is exhausted before the tolerance is met.
template <class F>
QuadResult integrate_adaptive(const F& f, double a, double b, const AdaptiveOptions& opt = {}) {
    if (!(b > a)) return {0.0, 0.0, 0};

    std::priority_queue<detail::Panel> queue;
    double total = 0.0;
    double err = 0.0;
    std::size_t panels = 0;

    auto push = [&](double lo, double hi) {
        auto p = detail::gauss_kronrod21(f, lo, hi);
        total += p.value;
        err += p.error;
        queue.push(p);
        ++panels;
    };

    std::size_t initial = 1;
    if (opt.max_panel_width > 0.0)
        initial = static_cast<std::size_t>(std::ceil((b - a) / opt.max_panel_width));
    initial = std::max<std::size_t>(initial, 1);
    if (initial > opt.panel_budget)
        throw QuadratureError("panel-width cap exceeds the panel budget", std::numeric_limits<double>::infinity());
    const double width = (b - a) / static_cast<double>(initial);
    for (std::size_t i = 0; i < initial; ++i) {
        const double lo = a + width * static_cast<double>(i);
        const double hi = (i + 1 == initial) ? b : a + width * static_cast<double>(i + 1);
        push(lo, hi);
    }

    while (err > std::max(opt.abs_tol, opt.rel_tol * std::abs(total))) {
        if (panels + 2 > opt.panel_budget) throw QuadratureError("adaptive quadrature budget exhausted", err);
        const detail::Panel worst = queue.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;  // cannot subdivide further in double precision
        queue.pop();
        total -= worst.value;
        err -= worst.error;
        push(worst.a, mid);
        push(mid, worst.b);
    }

    // Recompute the sum from the panels to shed accumulated cancellation.
    double value = 0.0;
    double error = 0.0;
    while (!queue.empty()) {
        value += queue.top().value;
        error += queue.top().error;
        queue.pop();
    }
    return {value, error, panels};
}

/// Wynn's epsilon algorithm applied incrementally to a sequence of partial sums.
/// After each push, estimate() returns the current best limit and error() the
/// difference between the last two extrapolated values.
class WynnEpsilon {
  public:
    void push(double partial_sum) {
        // Table row: e[k] holds eps_k for the anti-diagonal ending at the newest term.
        std::vector<double> next(std::min(row_.size() + 1, kMaxDepth));
        next[0] = partial_sum;
        for (std::size_t k = 1; k < next.size(); ++k) {
            const double prev_lower = (k >= 2) ? row_[k - 2] : 0.0;
            const double diff = next[k - 1] - row_[k - 1];
            if (diff == 0.0 || !std::isfinite(diff)) {
                next.resize(k);
                break;
            }
            next[k] = prev_lower + 1.0 / diff;
        }
        row_ = std::move(next);
        ++count_;

        // Even columns carry limit estimates; take the deepest one.
        const std::size_t deepest_even = (row_.size() - 1) & ~std::size_t{1};
        const double est = row_[deepest_even];
        if (std::isfinite(est)) {
            error_ = (count_ > 3) ? std::max(std::abs(est - estimate_), std::abs(est - previous_))
                                  : std::numeric_limits<double>::infinity();
            previous_ = estimate_;
            estimate_ = est;
        }
    }

    double estimate() const noexcept { return estimate_; }
    double error() const noexcept { return error_; }
    std::size_t terms() const noexcept { return count_; }

  private:
    static constexpr std::size_t kMaxDepth = 41;

    std::vector<double> row_;
    double estimate_ = 0.0;
    double previous_ = 0.0;
    double error_ = std::numeric_limits<double>::infinity();
    std::size_t count_ = 0;
};

}  // namespace fracturb
