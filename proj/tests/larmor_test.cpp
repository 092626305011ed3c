#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "ttclock/larmor.hpp"

using namespace ttclock;

namespace {

SpatialGrid offset_grid(std::size_t n, double lo, double hi)
{
    const double dx = (hi - lo) / static_cast<double>(n);
    return make_grid(n, lo - 0.5 * dx, hi - 0.5 * dx);
}

struct LarmorFixture : ::testing::Test {
    SpatialGrid grid = offset_grid(2048, -64.0, 64.0);
    WaveFunction particle = init_gaussian(grid, -20.0, 10.0, 2.0);
    PotentialProfile region = PotentialProfile::box(0.0, 5.0, 1.0);
};

} // namespace

TEST(InitLarmorClock, BinomialWeights)
{
    for (double j : {0.5, 1.0, 2.5, 8.0}) {
        const auto c = init_larmor_clock(j, 0.3);
        const auto w = c.initial_weights();
        const auto q = c.q_values();
        ASSERT_EQ(w.size(), static_cast<std::size_t>(2.0 * j + 1.0));
        double norm = 0.0, jx = 0.0;
        for (std::size_t s = 0; s < w.size(); ++s) {
            norm += std::norm(w[s]);
            EXPECT_NEAR(q[s], 0.3 * (static_cast<double>(s) - j), 1e-14);
            if (s + 1 < w.size()) {
                const double m = static_cast<double>(s) - j;
                jx += std::sqrt(j * (j + 1.0) - m * (m + 1.0)) * (w[s + 1] * w[s]).real();
            }
        }
        EXPECT_NEAR(norm, 1.0, 1e-12);
        // prepared along +x: <J_+> = <J_x> = j
        EXPECT_NEAR(jx, j, 1e-12);
    }
    EXPECT_THROW(init_larmor_clock(0.0, 1.0), Error);
    EXPECT_THROW(init_larmor_clock(0.75, 1.0), Error);
}

TEST_F(LarmorFixture, WeakLimitReadsClassicalTime)
{
    for (auto method : {SectorMethod::split_operator, SectorMethod::stationary}) {
        const auto r = larmor_clock_run(particle, 0.5, 0.2, region, 5.0, 0.004, 1.0, {method, 1});
        EXPECT_NEAR(r.readout.mean_T / 0.5, 1.0, 0.05);
        EXPECT_NEAR(r.readout.mean_T, 0.5, 2e-3);
        EXPECT_TRUE(r.readout.conditioned);
        EXPECT_NEAR(r.phase, 0.2 * r.readout.mean_T, 1e-12);
        EXPECT_NEAR(std::atan2(r.j_y, r.j_x), r.phase, 1e-12);
    }
}

TEST_F(LarmorFixture, ZeroFrequencyLimit)
{
    const auto slow = larmor_clock_run(particle, 0.5, 1e-4, region, 5.0, 0.004, 1.0);
    const auto fast = larmor_clock_run(particle, 0.5, 0.1, region, 5.0, 0.004, 1.0);
    EXPECT_LT(std::abs(slow.phase), 1e-4);
    EXPECT_NEAR(slow.j_x, 0.5, 1e-8);
    EXPECT_GT(slow.readout.spread_T, 100.0 * fast.readout.spread_T);
}

TEST_F(LarmorFixture, SpreadFallsWithSpinAtFixedFrequency)
{
    // coherent spin state: angular spread 1/sqrt(2j), so spread_T = 1/(omega sqrt(2j))
    const double omega = 0.2;
    double previous = 1e300;
    for (double j : {0.5, 2.0, 8.0}) {
        const auto r = larmor_clock_run(particle, j, omega, region, 5.0, 0.004, 1.0, {SectorMethod::stationary, 1});
        EXPECT_LT(r.readout.spread_T, previous) << "j=" << j;
        EXPECT_NEAR(r.readout.spread_T * omega * std::sqrt(2.0 * j), 1.0, 1e-3) << "j=" << j;
        EXPECT_NEAR(r.readout.mean_T, 0.5, 2e-3);
        previous = r.readout.spread_T;
    }
}

TEST_F(LarmorFixture, SpreadGrowsWithSpinAtFixedProduct)
{
    // with omega j held fixed the same relation gives spread_T ~ sqrt(j)
    double previous = 0.0;
    for (double j : {0.5, 2.0, 8.0}) {
        const auto r =
            larmor_clock_run(particle, j, 0.1 / j, region, 5.0, 0.004, 1.0, {SectorMethod::stationary, 1});
        EXPECT_GT(r.readout.spread_T, previous) << "j=" << j;
        previous = r.readout.spread_T;
    }
}

TEST_F(LarmorFixture, PhaseWrappingIsAliasing)
{
    try {
        larmor_clock_run(particle, 2.0, 2.0, region, 5.0, 0.004, 1.0);
        FAIL() << "wrapping precession accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::aliasing);
    }
}

TEST_F(LarmorFixture, RoutesAgree)
{
    const auto a = larmor_clock_run(particle, 2.0, 0.5, region, 5.0, 0.004, 1.0, {SectorMethod::split_operator, 1});
    const auto b = larmor_clock_run(particle, 2.0, 0.5, region, 5.0, 0.004, 1.0, {SectorMethod::stationary, 1});
    EXPECT_NEAR(a.readout.mean_T, b.readout.mean_T, 1e-4);
    EXPECT_NEAR(a.readout.spread_T, b.readout.spread_T, 1e-4);
    EXPECT_NEAR(a.readout.transmitted_fraction, b.readout.transmitted_fraction, 1e-5);
}
