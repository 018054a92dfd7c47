#pragma once

// One realization of the stream function psi(x, t) on the unit torus [0,1)^2
// and its velocity v = grad-perp psi = (d2 psi, -d1 psi).
//
// Only the K+ half of the coefficients is stored; psi_{-k} = conj(psi_k) is
// implied, so every evaluation is a real sum 2 Re(sum over K+).

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <map>
#include <memory>
#include <numbers>
#include <set>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fou.hpp"
#include "parallel.hpp"
#include "spectrum.hpp"
#include "vec2.hpp"

namespace fracturb {

using cplx = std::complex<double>;

struct FieldMetadata {
    std::uint64_t seed = 0;
    SpectrumConfig spectrum;
    std::vector<double> jitter;  ///< per K+ mode, Cholesky jitter used when sampling
};

class FieldPath {
  public:
    /// coeffs are mode-major: coeffs[m * grid.n() + j] for K+ mode m at time index j.
    FieldPath(SpectrumConfig spectrum, double nu, TimeGrid grid, std::uint64_t seed, std::vector<cplx> coeffs,
              std::vector<double> jitter = {})
        : grid_(grid), nu_(nu) {
        spectrum.validate();
        if (!(nu > 0.0)) throw std::invalid_argument("FieldPath: nu must be > 0");
        modes_ = mode_set(spectrum);
        half_ = positive_half(modes_);
        if (coeffs.size() != half_.size() * grid.n())
            throw std::invalid_argument("FieldPath: coefficient array does not match modes x grid");
        if (jitter.empty()) jitter.assign(half_.size(), 0.0);
        if (jitter.size() != half_.size()) throw std::invalid_argument("FieldPath: jitter record size mismatch");
        meta_ = {seed, std::move(spectrum), std::move(jitter)};

        // Stored time-major for evaluation: one contiguous block per time index.
        coeffs_.resize(coeffs.size());
        const std::size_t nh = half_.size();
        for (std::size_t m = 0; m < nh; ++m)
            for (std::size_t j = 0; j < grid.n(); ++j) coeffs_[j * nh + m] = coeffs[m * grid.n() + j];
        max_index_ = 0;
        for (const auto& w : half_) max_index_ = std::max({max_index_, std::abs(w.z1), std::abs(w.z2)});
    }

    const TimeGrid& grid() const noexcept { return grid_; }
    double nu() const noexcept { return nu_; }
    double h() const noexcept { return meta_.spectrum.h; }
    int cutoff() const noexcept { return meta_.spectrum.cutoff; }
    const FieldMetadata& metadata() const noexcept { return meta_; }
    const std::vector<WaveMode>& modes() const noexcept { return modes_; }
    const std::vector<WaveMode>& half_modes() const noexcept { return half_; }

    /// Coefficients of all K+ modes at time index j.
    std::span<const cplx> coeffs_at(std::size_t j) const {
        check_index(j);
        return {coeffs_.data() + j * half_.size(), half_.size()};
    }
    cplx coeff(std::size_t mode, std::size_t j) const { return coeffs_at(j)[mode]; }

    void check_index(std::size_t j) const {
        if (j >= grid_.n())
            throw std::out_of_range("field time index " + std::to_string(j) + " outside grid of " +
                                    std::to_string(grid_.n()) + " points");
    }

    int max_lattice_index() const noexcept { return max_index_; }

    friend bool operator==(const FieldPath& a, const FieldPath& b) {
        return a.grid_ == b.grid_ && a.nu_ == b.nu_ && a.meta_.seed == b.meta_.seed && a.coeffs_ == b.coeffs_ &&
               a.meta_.jitter == b.meta_.jitter && a.meta_.spectrum.c0 == b.meta_.spectrum.c0 &&
               a.meta_.spectrum.cutoff == b.meta_.spectrum.cutoff && a.meta_.spectrum.h == b.meta_.spectrum.h &&
               a.meta_.spectrum.kind_name() == b.meta_.spectrum.kind_name();
    }

  private:
    TimeGrid grid_;
    double nu_;
    FieldMetadata meta_;
    std::vector<WaveMode> modes_;
    std::vector<WaveMode> half_;
    std::vector<cplx> coeffs_;
    int max_index_ = 0;
};

struct SynthesisOptions {
    unsigned threads = 1;
    FactorCache* cache = nullptr;
};

/// Draws every K+ coefficient path psi_k = re + i im with FouParams(alpha_k, lambda_k, nu, H),
/// using the stream (seed, K+ index, re|im).
inline FieldPath synthesize(const SpectrumConfig& config, double nu, const TimeGrid& grid, std::uint64_t seed,
                            const SynthesisOptions& opt = {}) {
    config.validate();
    const std::vector<WaveMode> half = positive_half(mode_set(config));
    FactorCache local;
    FactorCache& cache = opt.cache ? *opt.cache : local;
    if (grid.n() > kCholeskyCap)
        throw GridTooLargeError("field grid of " + std::to_string(grid.n()) + " points exceeds the exact-sampler cap of " +
                                std::to_string(kCholeskyCap));

    // Factor each distinct alpha once before sampling.
    std::vector<double> alphas;
    for (const auto& m : half)
        if (m.lambda > 0.0) alphas.push_back(m.alpha);
    std::sort(alphas.begin(), alphas.end());
    alphas.erase(std::unique(alphas.begin(), alphas.end()), alphas.end());
    parallel_for(alphas.size(), opt.threads,
                 [&](std::size_t i) { cache.get(FouParams(alphas[i], 1.0, nu, config.h), grid); });

    const std::size_t n = grid.n();
    std::vector<cplx> coeffs(half.size() * n);
    std::vector<double> jitter(half.size(), 0.0);
    parallel_for(half.size(), opt.threads, [&](std::size_t m) {
        const FouParams params(half[m].alpha, half[m].lambda, nu, config.h);
        const auto pair = sample_complex_coeff_pair(params, grid, seed, static_cast<std::uint32_t>(m), &cache);
        for (std::size_t j = 0; j < n; ++j) coeffs[m * n + j] = {pair.re.values[j], pair.im.values[j]};
        jitter[m] = pair.re.jitter;
    });
    return FieldPath(config, nu, grid, seed, std::move(coeffs), std::move(jitter));
}

/// Field whose coefficients are the same at every time index (tests, frozen-flow studies).
inline FieldPath frozen_field(const SpectrumConfig& config, double nu, const TimeGrid& grid,
                              const std::vector<cplx>& half_coeffs) {
    const std::size_t nh = positive_half(mode_set(config)).size();
    if (half_coeffs.size() != nh) throw std::invalid_argument("frozen_field: need one coefficient per K+ mode");
    std::vector<cplx> coeffs(nh * grid.n());
    for (std::size_t m = 0; m < nh; ++m)
        for (std::size_t j = 0; j < grid.n(); ++j) coeffs[m * grid.n() + j] = half_coeffs[m];
    return FieldPath(config, nu, grid, 0, std::move(coeffs));
}

namespace detail {

// e^{2 pi i z x} for z in [-r, r], built from one sincos by repeated multiplication.
struct Phases {
    explicit Phases(int r) : r_(r), values_(2 * static_cast<std::size_t>(r) + 1) {}
    void set(double x) {
        const double angle = 2.0 * std::numbers::pi * x;
        const cplx unit(std::cos(angle), std::sin(angle));
        values_[r_] = 1.0;
        cplx acc = 1.0;
        for (int z = 1; z <= r_; ++z) {
            acc *= unit;
            values_[r_ + z] = acc;
            values_[r_ - z] = std::conj(acc);
        }
    }
    cplx operator[](int z) const { return values_[static_cast<std::size_t>(r_ + z)]; }

    int r_;
    std::vector<cplx> values_;
};

// sum over K+ of psi_k e_k(x), with and without the wave-vector weights.
struct HalfSums {
    double psi = 0.0;   // sum Re(w)
    double d1 = 0.0;    // sum -k1 Im(w)
    double d2 = 0.0;    // sum -k2 Im(w)
};

inline HalfSums half_sums(const FieldPath& field, Vec2 x, std::size_t j) {
    const int r = field.max_lattice_index();
    Phases p1(r), p2(r);
    p1.set(x.a);
    p2.set(x.b);
    const auto coeffs = field.coeffs_at(j);
    const auto& modes = field.half_modes();
    HalfSums s;
    for (std::size_t m = 0; m < modes.size(); ++m) {
        const cplx w = coeffs[m] * p1[modes[m].z1] * p2[modes[m].z2];
        s.psi += w.real();
        s.d1 -= modes[m].k1 * w.imag();
        s.d2 -= modes[m].k2 * w.imag();
    }
    return s;
}

}  // namespace detail

/// v(x, t_j) = sum over K+ of 2 Re[i (k2, -k1) psi_k(t_j) e^{i<k,x>}], direct summation.
inline Vec2 eval_velocity(const FieldPath& field, Vec2 x, std::size_t j) {
    const auto s = detail::half_sums(field, x, j);
    return {2.0 * s.d2, -2.0 * s.d1};
}

struct StreamSample {
    double psi = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

inline StreamSample eval_stream_and_gradient(const FieldPath& field, Vec2 x, std::size_t j) {
    const auto s = detail::half_sums(field, x, j);
    return {2.0 * s.psi, 2.0 * s.d1, 2.0 * s.d2};
}

/// psi and v sampled on the N x N grid x = (i1/N, i2/N); index [i1 * N + i2].
struct GridSample {
    int n = 0;
    std::vector<double> psi, v1, v2;
    double max_imag = 0.0;  ///< largest |Im| of the inverse transforms before it was discarded

    double at(const std::vector<double>& a, int i1, int i2) const { return a[static_cast<std::size_t>(i1 * n + i2)]; }
};

/// Inverse 2-D DFT of the full (conjugate-completed) coefficient set at time index j.
inline GridSample eval_grid_fft(const FieldPath& field, std::size_t j, int n) {
    const int r = field.cutoff();
    if (n < 2 * r + 2)
        throw std::invalid_argument("eval_grid_fft: N=" + std::to_string(n) + " aliases the cutoff band (need N >= " +
                                    std::to_string(2 * r + 2) + ")");
    const auto coeffs = field.coeffs_at(j);
    const auto& modes = field.half_modes();
    const auto nn = static_cast<std::size_t>(n);

    std::vector<cplx> psi(nn * nn), d1(nn * nn), d2(nn * nn);
    auto wrap = [n](int z) { return static_cast<std::size_t>(((z % n) + n) % n); };
    for (std::size_t m = 0; m < modes.size(); ++m) {
        const auto& k = modes[m];
        const cplx c = coeffs[m];
        const std::size_t pos = wrap(k.z1) * nn + wrap(k.z2);
        const std::size_t neg = wrap(-k.z1) * nn + wrap(-k.z2);
        psi[pos] = c;
        psi[neg] = std::conj(c);
        d1[pos] = cplx(0.0, k.k1) * c;
        d1[neg] = std::conj(d1[pos]);
        d2[pos] = cplx(0.0, k.k2) * c;
        d2[neg] = std::conj(d2[pos]);
    }

    Eigen::FFT<double> fft;
    fft.SetFlag(Eigen::FFT<double>::Unscaled);
    std::vector<cplx> line_in(nn), line_out(nn);
    auto inverse_2d = [&](std::vector<cplx>& a) {
        for (std::size_t i = 0; i < nn; ++i) {
            std::copy_n(a.begin() + static_cast<std::ptrdiff_t>(i * nn), nn, line_in.begin());
            fft.inv(line_out, line_in);
            std::copy_n(line_out.begin(), nn, a.begin() + static_cast<std::ptrdiff_t>(i * nn));
        }
        for (std::size_t c = 0; c < nn; ++c) {
            for (std::size_t i = 0; i < nn; ++i) line_in[i] = a[i * nn + c];
            fft.inv(line_out, line_in);
            for (std::size_t i = 0; i < nn; ++i) a[i * nn + c] = line_out[i];
        }
    };
    inverse_2d(psi);
    inverse_2d(d1);
    inverse_2d(d2);

    GridSample out;
    out.n = n;
    out.psi.resize(nn * nn);
    out.v1.resize(nn * nn);
    out.v2.resize(nn * nn);
    for (std::size_t i = 0; i < nn * nn; ++i) {
        out.psi[i] = psi[i].real();
        out.v1[i] = d2[i].real();
        out.v2[i] = -d1[i].real();
        out.max_imag = std::max({out.max_imag, std::abs(psi[i].imag()), std::abs(d1[i].imag()), std::abs(d2[i].imag())});
    }
    return out;
}

/// max over the M x M grid of sqrt(psi^2 + (d1 psi)^2 + (d2 psi)^2).
inline double c1_norm(const FieldPath& field, std::size_t j, int m = 64) {
    const GridSample g = eval_grid_fft(field, j, m);
    double best = 0.0;
    for (std::size_t i = 0; i < g.psi.size(); ++i)
        best = std::max(best, g.psi[i] * g.psi[i] + g.v1[i] * g.v1[i] + g.v2[i] * g.v2[i]);
    return std::sqrt(best);
}

/// c1_norm at every time index of the field grid.
inline std::vector<double> c1_norm_series(const FieldPath& field, int m = 64, unsigned threads = 1) {
    std::vector<double> out(field.grid().n());
    parallel_for(out.size(), threads, [&](std::size_t j) { out[j] = c1_norm(field, j, m); });
    return out;
}

}  // namespace fracturb
