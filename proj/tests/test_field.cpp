#include <gtest/gtest.h>

#include <cmath>
#include <complex>
#include <numbers>
#include <sstream>
#include <vector>

#include "fracturb/field.hpp"
#include "fracturb/io.hpp"

using namespace fracturb;

namespace {

constexpr double kPi = std::numbers::pi;

SpectrumConfig kolmogorov(int r, double c0 = 1.0) {
    SpectrumConfig c;
    c.cutoff = r;
    c.c0 = c0;
    return c;
}

// Full-lattice sum psi = sum_{k in K} psi_k e^{i<k,x>} with psi_{-k} = conj(psi_k), written
// without reference to the K+ bookkeeping used by the library.
struct Brute {
    std::complex<double> psi, v1, v2;
};

Brute brute_eval(const FieldPath& f, Vec2 x, std::size_t j) {
    Brute out{};
    const auto& half = f.half_modes();
    for (std::size_t m = 0; m < half.size(); ++m) {
        const cplx c = f.coeff(m, j);
        for (int sign : {1, -1}) {
            const double k1 = sign * half[m].k1, k2 = sign * half[m].k2;
            const cplx ck = sign == 1 ? c : std::conj(c);
            const cplx e = std::exp(cplx(0.0, k1 * x.a + k2 * x.b));
            out.psi += ck * e;
            out.v1 += cplx(0.0, k2) * ck * e;
            out.v2 += -cplx(0.0, k1) * ck * e;
        }
    }
    return out;
}

FieldPath sample_field(int r, std::uint64_t seed, std::size_t n = 8, unsigned threads = 1) {
    return synthesize(kolmogorov(r), 0.01, TimeGrid(0.0, 0.0625, n), seed, {threads, nullptr});
}

double max_divergence(const FieldPath& f, double h) {
    double worst = 0.0;
    for (int i = 0; i < 7; ++i)
        for (int l = 0; l < 7; ++l) {
            const Vec2 x{0.13 * i + 0.01, 0.11 * l + 0.02};
            const double d1v1 = (eval_velocity(f, {x.a + h, x.b}, 0).a - eval_velocity(f, {x.a - h, x.b}, 0).a) / (2 * h);
            const double d2v2 = (eval_velocity(f, {x.a, x.b + h}, 0).b - eval_velocity(f, {x.a, x.b - h}, 0).b) / (2 * h);
            worst = std::max(worst, std::abs(d1v1 + d2v2));
        }
    return worst;
}

}  // namespace

TEST(Field, HandTwoModeExample) {
    // K+ for R = 1 in lattice order is {(0,1), (1,0)}.
    const auto f = frozen_field(kolmogorov(1), 0.01, TimeGrid(0.0, 0.1, 2), {cplx(1.0, 0.0), cplx(0.0, 0.5)});
    ASSERT_EQ(f.half_modes()[0].z2, 1);
    ASSERT_EQ(f.half_modes()[1].z1, 1);
    for (const Vec2 x : {Vec2{0.1, 0.7}, Vec2{0.25, 0.0}, Vec2{0.9, 0.33}}) {
        const auto s = eval_stream_and_gradient(f, x, 1);
        EXPECT_NEAR(s.psi, 2.0 * std::cos(2 * kPi * x.b) - std::sin(2 * kPi * x.a), 1e-13);
        const Vec2 v = eval_velocity(f, x, 1);
        EXPECT_NEAR(v.a, -4.0 * kPi * std::sin(2 * kPi * x.b), 1e-12);
        EXPECT_NEAR(v.b, 2.0 * kPi * std::cos(2 * kPi * x.a), 1e-12);
    }
}

TEST(Field, MatchesFullLatticeSum) {
    const auto f = sample_field(4, 11);
    for (std::size_t j : {0u, 3u, 7u})
        for (const Vec2 x : {Vec2{0.0, 0.0}, Vec2{0.31, 0.77}, Vec2{0.999, 0.5}}) {
            const Brute b = brute_eval(f, x, j);
            const auto s = eval_stream_and_gradient(f, x, j);
            const Vec2 v = eval_velocity(f, x, j);
            EXPECT_NEAR(s.psi, b.psi.real(), 1e-13);
            EXPECT_NEAR(v.a, b.v1.real(), 1e-12);
            EXPECT_NEAR(v.b, b.v2.real(), 1e-12);
            EXPECT_LT(std::abs(b.psi.imag()), 1e-13);
        }
}

TEST(Field, GradientMatchesFiniteDifferences) {
    const auto f = sample_field(3, 5);
    const double h = 1e-5;
    const Vec2 x{0.42, 0.17};
    const auto s = eval_stream_and_gradient(f, x, 2);
    const double fd1 = (eval_stream_and_gradient(f, {x.a + h, x.b}, 2).psi - eval_stream_and_gradient(f, {x.a - h, x.b}, 2).psi) / (2 * h);
    const double fd2 = (eval_stream_and_gradient(f, {x.a, x.b + h}, 2).psi - eval_stream_and_gradient(f, {x.a, x.b - h}, 2).psi) / (2 * h);
    EXPECT_NEAR(s.d1, fd1, 1e-6 * (1.0 + std::abs(fd1)));
    EXPECT_NEAR(s.d2, fd2, 1e-6 * (1.0 + std::abs(fd2)));
}

TEST(Field, DivergenceFree) {
    // Every R = 2 mode has z1 = 0, z2 = 0 or |z1| = |z2|, for which centred differences cancel exactly.
    const auto f2 = sample_field(2, 8);
    EXPECT_LT(max_divergence(f2, 1e-3), 1e-9);
    // R = 3 adds (1, 2)-type modes; the centred-difference divergence then vanishes as O(h^2).
    const auto f3 = sample_field(3, 8);
    const double coarse = max_divergence(f3, 2e-3);
    const double fine = max_divergence(f3, 1e-3);
    EXPECT_GT(coarse, 1e-8);
    EXPECT_NEAR(coarse / fine, 4.0, 0.1);
}

TEST(Field, FftMatchesDirectSum) {
    const auto f = sample_field(5, 3);
    const int n = 16;
    const GridSample g = eval_grid_fft(f, 4, n);
    EXPECT_LT(g.max_imag, 1e-12);
    for (int i1 = 0; i1 < n; i1 += 3)
        for (int i2 = 0; i2 < n; i2 += 5) {
            const Vec2 x{static_cast<double>(i1) / n, static_cast<double>(i2) / n};
            const Vec2 v = eval_velocity(f, x, 4);
            EXPECT_NEAR(g.at(g.psi, i1, i2), eval_stream_and_gradient(f, x, 4).psi, 1e-13);
            EXPECT_NEAR(g.at(g.v1, i1, i2), v.a, 1e-12);
            EXPECT_NEAR(g.at(g.v2, i1, i2), v.b, 1e-12);
        }
    EXPECT_THROW(eval_grid_fft(f, 0, 11), std::invalid_argument);
    EXPECT_NO_THROW(eval_grid_fft(f, 0, 12));
}

TEST(Field, C1NormOfSingleMode) {
    SpectrumConfig table;
    table.kind = TableSpectrum{{{1, 1.0}}};
    table.cutoff = 1;
    const double c = 0.3;
    // Mode (1,0): psi = 2c cos(2 pi x1), |grad psi| = 4 pi c |sin(2 pi x1)|.
    const auto f = frozen_field(table, 0.01, TimeGrid(0.0, 0.1, 3), {cplx(0.0, 0.0), cplx(c, 0.0)});
    EXPECT_NEAR(c1_norm(f, 0, 64), 4.0 * kPi * c, 1e-12);
    const auto series = c1_norm_series(f, 64, 2);
    ASSERT_EQ(series.size(), 3u);
    for (double v : series) EXPECT_EQ(v, series[0]);
}

TEST(Field, C1NormDominatesPointValues) {
    const auto f = sample_field(3, 21);
    const double c1 = c1_norm(f, 1, 128);
    for (double a = 0.0; a < 1.0; a += 0.0371) {
        const auto s = eval_stream_and_gradient(f, {a, 1.0 - a}, 1);
        EXPECT_LE(std::sqrt(s.psi * s.psi + s.d1 * s.d1 + s.d2 * s.d2), c1 * 1.01);
    }
}

TEST(Field, DeterministicAcrossThreadCounts) {
    const auto a = sample_field(4, 77, 16, 1);
    const auto b = sample_field(4, 77, 16, 8);
    EXPECT_TRUE(a == b);
    const auto c = sample_field(4, 78, 16, 1);
    EXPECT_FALSE(a == c);
}

TEST(Field, SerializationRoundTrip) {
    SpectrumConfig power = kolmogorov(3, 0.5);
    power.kind = PowerLawSpectrum{2.25};
    for (const auto& f : {sample_field(3, 4), synthesize(power, 0.02, TimeGrid(-1.0, 0.05, 6), 9)}) {
        std::stringstream buf;
        write_field(buf, f);
        const FieldPath back = read_field(buf);
        EXPECT_TRUE(back == f);
        EXPECT_EQ(field_hash(back), field_hash(f));
    }
    std::stringstream bad("FRACTURB-FIELD 2\nend_header\n");
    EXPECT_THROW(read_field(bad), std::runtime_error);
}

TEST(Field, IndexAndShapeErrors) {
    const auto f = sample_field(2, 1, 4);
    EXPECT_THROW(f.coeffs_at(4), std::out_of_range);
    EXPECT_THROW(eval_velocity(f, {0.5, 0.5}, 9), std::out_of_range);
    EXPECT_THROW(FieldPath(kolmogorov(2), 0.01, TimeGrid(0.0, 0.1, 4), 0, std::vector<cplx>(5)), std::invalid_argument);
    EXPECT_THROW(synthesize(kolmogorov(2), 0.01, TimeGrid(0.0, 0.1, kCholeskyCap + 1), 1), GridTooLargeError);
}

TEST(Field, ZeroSpectrumGivesZeroField) {
    SpectrumConfig empty;
    empty.kind = TableSpectrum{};
    empty.cutoff = 2;
    const auto f = synthesize(empty, 0.01, TimeGrid(0.0, 0.1, 5), 3);
    EXPECT_EQ(c1_norm(f, 2, 16), 0.0);
    EXPECT_EQ(eval_velocity(f, {0.3, 0.3}, 4).norm(), 0.0);
}

TEST(Field, PointVarianceMatchesModeSum) {
    // E psi(x,t)^2 = 2 sum_{K+} Var(psi_k), E|v|^2 = 2 sum_{K+} alpha_k Var(psi_k).
    const SpectrumConfig spec = kolmogorov(2);
    const TimeGrid grid(0.0, 0.0625, 4);
    double psi_var = 0.0, vel_var = 0.0;
    for (const auto& m : positive_half(mode_set(spec))) {
        const double v = fou_variance(FouParams(m.alpha, m.lambda, 0.01, spec.h));
        psi_var += 2.0 * v;
        vel_var += 2.0 * m.alpha * v;
    }
    FactorCache cache;
    const int draws = 6000;
    double psi2 = 0.0, v2 = 0.0, psi_lag = 0.0;
    for (int d = 0; d < draws; ++d) {
        const auto f = synthesize(spec, 0.01, grid, derive_seed(2718, static_cast<std::uint64_t>(d)), {1, &cache});
        const auto s0 = eval_stream_and_gradient(f, {0.2, 0.6}, 0);
        const auto s3 = eval_stream_and_gradient(f, {0.2, 0.6}, 3);
        psi2 += s3.psi * s3.psi;
        v2 += s3.d1 * s3.d1 + s3.d2 * s3.d2;
        psi_lag += s0.psi * s3.psi;
    }
    EXPECT_NEAR(psi2 / draws, psi_var, 5.0 * psi_var * std::sqrt(2.0 / draws));
    EXPECT_NEAR(v2 / draws, vel_var, 5.0 * vel_var * std::sqrt(2.0 / draws));

    double lag_cov = 0.0;
    for (const auto& m : positive_half(mode_set(spec)))
        lag_cov += 2.0 * fou_covariance(FouParams(m.alpha, m.lambda, 0.01, spec.h), 3 * grid.dt());
    EXPECT_NEAR(psi_lag / draws, lag_cov, 5.0 * psi_var * std::sqrt(2.0 / draws));
}
