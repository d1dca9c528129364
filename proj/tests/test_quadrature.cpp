#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <vector>

#include "carousel/quadrature.hpp"

using namespace carousel;

TEST(GaussKronrod, ExactForHighDegreePolynomials)
{
    // 15-point Kronrod is exact to degree 22 and the embedded 7-point Gauss rule to degree 13.
    auto f22 = [](double x) { return std::pow(x, 22); };
    const auto p = detail::gauss_kronrod15(f22, 0.0, 1.0);
    EXPECT_NEAR(p.value, 1.0 / 23.0, 1e-15);

    auto f13 = [](double x) { return std::pow(x, 13) + 3.0 * x * x; };
    const auto q = detail::gauss_kronrod15(f13, -1.0, 2.0);
    const double exact = (std::pow(2.0, 14) - 1.0) / 14.0 + 9.0;
    EXPECT_NEAR(q.value, exact, 1e-11);
    EXPECT_LT(q.error, 1e-10); // Gauss is exact here too, so the estimate collapses
}

TEST(Integrate, SmoothFunctions)
{
    const auto r = integrate([](double x) { return std::exp(-x); }, 0.0, 30.0);
    EXPECT_NEAR(r.value, 1.0 - std::exp(-30.0), 1e-12);
    EXPECT_LE(r.abs_error_estimate, 1e-10);

    const auto s = integrate([](double x) { return std::sin(x) * std::sin(x); }, 0.0, std::numbers::pi);
    EXPECT_NEAR(s.value, std::numbers::pi / 2.0, 1e-12);
}

TEST(Integrate, EndpointSingularityConverges)
{
    QuadratureOptions opt;
    opt.abs_tol = 1e-9;
    const auto r = integrate([](double x) { return 1.0 / std::sqrt(x); }, 0.0, 1.0, opt);
    EXPECT_NEAR(r.value, 2.0, 1e-8);
}

TEST(Integrate, EmptyOrReversedIntervalIsZero)
{
    EXPECT_EQ(integrate([](double) { return 1.0; }, 1.0, 1.0).value, 0.0);
    EXPECT_EQ(integrate([](double) { return 1.0; }, 2.0, 1.0).value, 0.0);
}

TEST(Integrate, ThrowsWhenBudgetIsExhausted)
{
    QuadratureOptions opt;
    opt.abs_tol = 1e-14;
    opt.max_subdivisions = 5;
    auto wild = [](double x) { return std::sin(1.0 / x); };
    try {
        integrate(wild, 1e-4, 1.0, opt);
        FAIL() << "expected quadrature_error";
    } catch (const quadrature_error& e) {
        EXPECT_EQ(e.partial().subdivisions, 5u);
        EXPECT_GT(e.partial().abs_error_estimate, 1e-14);
    }
}

TEST(Integrate, DeterministicResult)
{
    auto f = [](double x) { return std::cos(10.0 * x) * std::exp(x); };
    const auto a = integrate(f, 0.0, 3.0);
    const auto b = integrate(f, 0.0, 3.0);
    EXPECT_EQ(a.value, b.value);
    EXPECT_EQ(a.subdivisions, b.subdivisions);
}

TEST(IntegratePiecewise, StepFunctionWithBreakpoints)
{
    // Exact once the jumps are breakpoints: each piece is constant.
    auto step = [](double x) { return x < 0.3 ? 1.0 : (x < 0.7 ? 5.0 : -2.0); };
    const std::vector<double> cuts{0.3, 0.7, 5.0};
    const auto r = integrate_piecewise(step, 0.0, 1.0, cuts);
    EXPECT_NEAR(r.value, 0.3 + 2.0 - 0.6, 1e-14);
    EXPECT_EQ(r.subdivisions, 0u);
}

TEST(IntegratePiecewise, KinkedIntegrand)
{
    auto kink = [](double x) { return std::abs(x - 1.0 / 3.0); };
    const std::vector<double> cuts{1.0 / 3.0};
    const auto r = integrate_piecewise(kink, 0.0, 1.0, cuts);
    EXPECT_NEAR(r.value, (1.0 / 9.0 + 4.0 / 9.0) / 2.0, 1e-14);
}
