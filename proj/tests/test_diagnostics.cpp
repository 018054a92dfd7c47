#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "fracturb/diagnostics.hpp"
#include "fracturb/particles.hpp"

using namespace fracturb;

namespace {

FieldModel table_model(double lambda, double h, double nu) {
    FieldModel m;
    m.spectrum.kind = TableSpectrum{{{1, lambda}}};
    m.spectrum.cutoff = 1;
    m.spectrum.h = h;
    m.nu = nu;
    return m;
}

FieldModel kolmogorov_model(int r, double h = 1.0 / 3.0) {
    FieldModel m;
    m.spectrum.cutoff = r;
    m.spectrum.h = h;
    m.nu = 0.01;
    return m;
}

}  // namespace

TEST(Summaries, MeanAndStandardError) {
    const auto s = summarize({1.0, 2.0, 3.0, 4.0});
    EXPECT_DOUBLE_EQ(s.mean, 2.5);
    EXPECT_DOUBLE_EQ(s.std_error, std::sqrt(5.0 / 3.0 / 4.0));
    EXPECT_EQ(summarize({}).count, 0u);
}

TEST(Summaries, LogLogFitRecoversPowerLaw) {
    std::vector<double> x, y;
    for (double v = 0.1; v < 20.0; v *= 1.7) {
        x.push_back(v);
        y.push_back(3.0 * std::pow(v, -5.0 / 3.0));
    }
    const auto fit = loglog_fit(x, y);
    EXPECT_NEAR(fit.slope, -5.0 / 3.0, 1e-12);
    EXPECT_NEAR(fit.intercept, std::log(3.0), 1e-12);
    EXPECT_LT(fit.std_error, 1e-10);
    EXPECT_THROW(loglog_fit({1.0, 2.0}, {1.0, 2.0}), std::invalid_argument);
    EXPECT_THROW(loglog_fit({1.0, 2.0, 0.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST(Dispersion, AllInOneBox) {
    const std::vector<Vec2> pts(100, Vec2{0.1, 0.1});
    const auto c = dispersion_index(pts, 4);
    EXPECT_DOUBLE_EQ(c.dispersion_index, 93.75);
    EXPECT_EQ(c.n_particles, 100u);
    EXPECT_EQ(c.box_resolution, 4);
}

TEST(Dispersion, OnePerBoxIsZero) {
    std::vector<Vec2> pts;
    for (int i = 0; i < 10; ++i)
        for (int j = 0; j < 10; ++j) pts.push_back({(i + 0.5) / 10.0, (j + 0.5) / 10.0});
    const auto c = dispersion_index(pts, 10);
    EXPECT_EQ(c.dispersion_index, 0.0);
    EXPECT_TRUE(c.sparse);
}

TEST(Dispersion, UniformScatterAveragesToOne) {
    std::vector<double> indices;
    for (std::uint32_t trial = 0; trial < 100; ++trial) {
        CounterStream s({31337, trial, StreamTag::particles});
        const auto c = dispersion_index(uniform_torus_points(10000, s), 10);
        EXPECT_FALSE(c.sparse);
        indices.push_back(c.dispersion_index);
    }
    const auto sum = summarize(indices);
    EXPECT_NEAR(sum.mean, 1.0, 0.1);
    // Multinomial counts over M boxes: E[index] = 1 - 1/M exactly.
    EXPECT_NEAR(sum.mean, 0.99, 4.0 * sum.std_error + 1e-3);
}

TEST(Dispersion, Errors) {
    EXPECT_THROW(dispersion_index({}, 4), std::invalid_argument);
    EXPECT_THROW(dispersion_index({{0.5, 0.5}}, 0), std::invalid_argument);
    // Points on the upper edge are clamped into the last box.
    EXPECT_EQ(dispersion_index({{1.0, 1.0}, {0.99, 0.99}}, 2).dispersion_index, 1.5);
}

TEST(StructureFunction, OrnsteinUhlenbeckClosedForm) {
    // Four lattice modes, H = 1/2: E|dv|^2 = 4 lambda (1 - e^{-nu alpha s}).
    const double lambda = 2.0, nu = 0.05;
    const FieldModel model = table_model(lambda, 0.5, nu);
    const double alpha = 4.0 * std::numbers::pi * std::numbers::pi;
    for (double s : {0.0, 0.01, 0.3, 2.0})
        EXPECT_NEAR(structure_function_analytic(model, s), 4.0 * lambda * (1.0 - std::exp(-nu * alpha * s)), 1e-9 * lambda);

    const auto res = structure_function_time(model, {0.3, 0.8}, 0.02, {0, 1, 4, 16}, 4000, 55, 4);
    ASSERT_EQ(res.rows.size(), 4u);
    EXPECT_EQ(res.rows[0].estimate, 0.0);
    for (const auto& row : res.rows) {
        EXPECT_NEAR(row.estimate, row.analytic, 4.0 * row.std_error + 1e-15) << "lag " << row.lag;
        EXPECT_LE(row.analytic, row.upper * (1.0 + 1e-9) + 1e-12);
    }
    EXPECT_TRUE(res.fit.has_value());
}

TEST(StructureFunction, ThreadIndependentAndCacheAware) {
    const FieldModel model = kolmogorov_model(2);
    FactorCache cache;
    const auto a = structure_function_time(model, {0.3, 0.7}, 0.01, {1, 2, 4}, 50, 9, 1, &cache);
    const auto b = structure_function_time(model, {0.3, 0.7}, 0.01, {1, 2, 4}, 50, 9, 6);
    for (std::size_t i = 0; i < a.rows.size(); ++i) EXPECT_EQ(a.rows[i].estimate, b.rows[i].estimate);
    EXPECT_GT(cache.size(), 0u);
    EXPECT_THROW(structure_function_time(model, {0.3, 0.7}, 0.01, {}, 50, 9), std::invalid_argument);
    EXPECT_FALSE(structure_function_time(model, {0.3, 0.7}, 0.01, {0, 2}, 10, 9).fit.has_value());
}

TEST(StructureFunction, UpperBoundDominatesAnalytic) {
    for (double h : {1.0 / 3.0, 0.5, 0.7}) {
        const FieldModel model = kolmogorov_model(2, h);
        for (double s : {1e-3, 1e-2, 0.1, 1.0, 10.0})
            EXPECT_LE(structure_function_analytic(model, s), structure_function_upper(model, s) * (1.0 + 1e-9))
                << h << " " << s;
    }
}

TEST(EnergySpectrum, ZeroSpectrum) {
    FieldModel model;
    model.spectrum.kind = TableSpectrum{};
    model.spectrum.cutoff = 3;
    const auto res = energy_spectrum_estimate(model, 10, 1);
    for (const auto& m : res.modes) {
        EXPECT_EQ(m.measured, 0.0);
        EXPECT_EQ(m.analytic, 0.0);
    }
    EXPECT_FALSE(res.fit.has_value());
}

TEST(EnergySpectrum, MatchesModeEnergyAndKolmogorovSlope) {
    const FieldModel model = kolmogorov_model(6);
    const auto res = energy_spectrum_estimate(model, 3000, 17, 4);
    ASSERT_EQ(res.modes.size(), 56u);
    for (const auto& m : res.modes)
        EXPECT_NEAR(m.measured, m.analytic, 4.5 * m.std_error) << "(" << m.z1 << "," << m.z2 << ")";
    for (const auto& s : res.shells) EXPECT_NEAR(s.measured, s.analytic, 4.5 * s.std_error) << s.norm2;
    ASSERT_TRUE(res.fit.has_value());
    EXPECT_NEAR(res.fit->slope, -5.0 / 3.0, 0.1);
    EXPECT_THROW(energy_spectrum_estimate(model, 1, 17), std::invalid_argument);
}

TEST(Covariance, TraceIsTwiceTotalModeEnergy) {
    const FieldModel model = kolmogorov_model(4);
    double energy = 0.0;
    for (const auto& m : mode_set(model.spectrum)) energy += mode_energy(m, model.spectrum.h);
    const Eigen::Matrix2d r = velocity_autocovariance_analytic(model, {0.0, 0.0}, 0.0);
    EXPECT_NEAR(r.trace(), 2.0 * energy, 1e-9 * energy);
    EXPECT_NEAR(r(0, 1), r(1, 0), 1e-12);
    EXPECT_NEAR(r(0, 0), r(1, 1), 1e-9 * energy);
}

TEST(Covariance, TimeFactorAtHalfIsExponential) {
    const FieldModel model = table_model(1.0, 0.5, 0.1);
    const WaveMode m = mode_set(model.spectrum).front();
    for (double s : {0.0, 0.1, 1.0}) EXPECT_NEAR(mode_time_factor(model, m, s), std::exp(-0.1 * m.alpha * s), 1e-10);
}

TEST(Covariance, MonteCarloMatchesAnalytic) {
    const FieldModel model = kolmogorov_model(2);
    const Vec2 x{0.2, 0.3}, y{0.35, 0.1};
    const auto est = velocity_covariance_estimate(model, x, y, 0.05, 4, 6000, 3, 4);
    const Eigen::Matrix2d exact = velocity_autocovariance_analytic(model, {x.a - y.a, x.b - y.b}, 0.2);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            EXPECT_NEAR(est.mean(i, j), exact(i, j), 4.0 * est.std_error(i, j)) << i << j;
}
