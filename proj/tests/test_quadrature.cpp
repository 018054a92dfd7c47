#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fracturb/quadrature.hpp"

using namespace fracturb;

TEST(GaussKronrod, ExactForHighDegreePolynomials) {
    const auto p = detail::gauss_kronrod21([](double x) { return std::pow(x, 20); }, 0.0, 1.0);
    EXPECT_NEAR(p.value, 1.0 / 21.0, 1e-15);
}

TEST(Adaptive, SmoothAndEndpointSingular) {
    const auto s = integrate_adaptive([](double x) { return std::sin(x); }, 0.0, std::numbers::pi);
    EXPECT_NEAR(s.value, 2.0, 1e-13);

    const auto r = integrate_adaptive([](double x) { return std::sqrt(x); }, 0.0, 1.0);
    EXPECT_NEAR(r.value, 2.0 / 3.0, 1e-12);
    EXPECT_GT(r.panels, 1u);
}

TEST(Adaptive, EmptyIntervalIsZero) {
    EXPECT_EQ(integrate_adaptive([](double) { return 1.0; }, 1.0, 1.0).value, 0.0);
}

TEST(Adaptive, PanelCapSplitsUpFront) {
    AdaptiveOptions opt;
    opt.max_panel_width = 0.1;
    const auto r = integrate_adaptive([](double x) { return std::cos(40.0 * x); }, 0.0, 1.0, opt);
    EXPECT_GE(r.panels, 10u);
    EXPECT_NEAR(r.value, std::sin(40.0) / 40.0, 1e-13);
}

TEST(Adaptive, BudgetExhaustionReportsAchievedError) {
    AdaptiveOptions opt;
    opt.panel_budget = 8;
    opt.abs_tol = 1e-15;
    opt.rel_tol = 0.0;
    try {
        integrate_adaptive([](double x) { return std::sin(1.0 / x); }, 1e-4, 1.0, opt);
        FAIL() << "expected QuadratureError";
    } catch (const QuadratureError& e) {
        EXPECT_GT(e.achieved_error(), 0.0);
        EXPECT_NE(std::string(e.what()).find("achieved error"), std::string::npos);
    }
}

TEST(Wynn, AcceleratesAlternatingSeries) {
    WynnEpsilon w;
    double partial = 0.0;
    for (int k = 0; k < 20; ++k) {
        partial += (k % 2 == 0 ? 1.0 : -1.0) / (k + 1.0);
        w.push(partial);
    }
    EXPECT_NEAR(w.estimate(), std::log(2.0), 1e-12);
    EXPECT_LT(w.error(), 1e-10);
    EXPECT_EQ(w.terms(), 20u);
}

TEST(Wynn, ConstantSequenceIsItsOwnLimit) {
    WynnEpsilon w;
    for (int k = 0; k < 6; ++k) w.push(3.5);
    EXPECT_EQ(w.estimate(), 3.5);
}
