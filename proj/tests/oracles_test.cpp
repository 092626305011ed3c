#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "ttclock/oracles.hpp"

using namespace ttclock;
using namespace ttclock::oracles;

namespace {

// Textbook forms with the energy difference in the denominator.
double transmission_above(double p, double q, double m, double L)
{
    const double e = p * p / (2.0 * m);
    const double s = std::sin(std::sqrt(2.0 * m * (e - q)) * L);
    return 1.0 / (1.0 + q * q * s * s / (4.0 * e * (e - q)));
}

double transmission_below(double p, double q, double m, double L)
{
    const double e = p * p / (2.0 * m);
    const double s = std::sinh(std::sqrt(2.0 * m * (q - e)) * L);
    return 1.0 / (1.0 + q * q * s * s / (4.0 * e * (q - e)));
}

} // namespace

TEST(FreeGaussianSpread, Values)
{
    EXPECT_DOUBLE_EQ(free_gaussian_spread(1.3, 2.0, 0.0).value, 1.3);
    EXPECT_NEAR(free_gaussian_spread(1.0, 1.0, 2.0).value, std::sqrt(2.0), 1e-15);
    const double s0 = 0.7, m = 2.5;
    const double t = 100.0 * m * s0 * s0;
    EXPECT_NEAR(free_gaussian_spread(s0, m, t).value / (t / (2.0 * m * s0)), 1.0, 0.01);
    EXPECT_THROW(free_gaussian_spread(0.0, 1.0, 1.0), Error);
}

TEST(StepBarrierTransmission, Examples)
{
    EXPECT_EQ(step_barrier_transmission(3.0, 0.0, 1.0, 2.0).value, 1.0);
    EXPECT_NEAR(step_barrier_transmission(1.0, 0.5, 1.0, 2.0).value, 0.5, 1e-15);
    // E = 5000 >> q = 1: 1 - T = O((q/E)^2)
    const double high = step_barrier_transmission(100.0, 1.0, 1.0, 3.0).value;
    EXPECT_LT(1.0 - high, 1e-6);
    EXPECT_GT(high, 0.0);
}

TEST(StepBarrierTransmission, MatchesTextbookBranches)
{
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> p(0.1, 15.0), q(-100.0, 100.0), L(0.05, 6.0), m(0.3, 3.0);
    for (int i = 0; i < 2000; ++i) {
        const double pp = p(rng), qq = q(rng), ll = L(rng), mm = m(rng);
        const double e = pp * pp / (2.0 * mm);
        if (std::abs(e - qq) < 1e-3 || qq == 0.0)
            continue;
        const double ref = e > qq ? transmission_above(pp, qq, mm, ll) : transmission_below(pp, qq, mm, ll);
        ASSERT_NEAR(step_barrier_transmission(pp, qq, mm, ll).value, ref, 1e-11 * std::max(1.0, ref));
    }
}

TEST(StepBarrierTransmission, BoundedOnGrid)
{
    for (int a = 1; a <= 10; ++a)
        for (int b = 0; b < 10; ++b)
            for (int c = 1; c <= 10; ++c) {
                const double t = step_barrier_transmission(0.7 * a, -30.0 + 7.0 * b, 1.0, 0.5 * c).value;
                ASSERT_TRUE(std::isfinite(t));
                ASSERT_GE(t, 0.0);
                ASSERT_LE(t, 1.0);
            }
}

TEST(StepBarrierTransmission, ContinuousAtThreshold)
{
    for (double L : {0.5, 2.0, 5.0}) {
        const double p = 3.0, m = 1.0, q = p * p / 2.0;
        const double at = step_barrier_transmission(p, q, m, L).value;
        EXPECT_NEAR(at, 1.0 / (1.0 + (p * L / 2.0) * (p * L / 2.0)), 1e-14);
        for (double h : {1e-8, 1e-10, 1e-12}) {
            EXPECT_NEAR(step_barrier_transmission(p, q - h, m, L).value, at, 1e-8);
            EXPECT_NEAR(step_barrier_transmission(p, q + h, m, L).value, at, 1e-8);
        }
    }
}

TEST(StepBarrierTransmission, OpaqueBarrierUnderflowsToZero)
{
    const double t = step_barrier_transmission(1.0, 1e6, 1.0, 10.0).value;
    EXPECT_TRUE(std::isfinite(t));
    EXPECT_EQ(t, 0.0);
}

TEST(ClassicalTimes, Examples)
{
    const auto t = classical_times(10.0, 1.0, -10.0, 0.0, 5.0);
    EXPECT_DOUBLE_EQ(t.t_enter, 1.0);
    EXPECT_DOUBLE_EQ(t.t_exit, 1.5);
    EXPECT_DOUBLE_EQ(t.t_F, 0.5);
    EXPECT_NEAR(classical_times(10.0, 1.0, -10.0, 0.0, 1e-12).t_F, 0.0, 1e-12);
    const auto heavy = classical_times(10.0, 2.0, -10.0, 0.0, 5.0);
    EXPECT_DOUBLE_EQ(heavy.t_enter, 2.0 * t.t_enter);
    EXPECT_DOUBLE_EQ(heavy.t_F, 2.0 * t.t_F);
}

TEST(ClassicalTimes, Errors)
{
    try {
        classical_times(0.0, 1.0, -10.0, 0.0, 5.0);
        FAIL() << "p0 = 0 accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::undefined_time);
    }
    EXPECT_THROW(classical_times(-1.0, 1.0, -10.0, 0.0, 5.0), Error);
    EXPECT_THROW(classical_times(1.0, 1.0, 1.0, 0.0, 5.0), Error);
}
