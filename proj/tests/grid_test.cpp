#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "ttclock/grid.hpp"

using namespace ttclock;

namespace {

// Grid whose nodes sit half a cell away from every integer multiple of 1/16,
// so region edges at such positions fall between nodes.
SpatialGrid offset_grid(std::size_t n, double half_width)
{
    const double dx = 2.0 * half_width / static_cast<double>(n);
    return make_grid(n, -half_width - 0.5 * dx, half_width - 0.5 * dx);
}

} // namespace

TEST(MakeGrid, SpacingAndMomentumLattice)
{
    const auto g = make_grid(16, 0.0, 16.0);
    EXPECT_DOUBLE_EQ(g.dx(), 1.0);
    EXPECT_DOUBLE_EQ(g.dk(), 2.0 * std::numbers::pi / 16.0);
    EXPECT_DOUBLE_EQ(g.k(8), -std::numbers::pi);
    EXPECT_DOUBLE_EQ(g.k(7), std::numbers::pi - g.dk());
    EXPECT_DOUBLE_EQ(g.k(0), 0.0);

    const auto h = make_grid(1024, -50.0, 50.0);
    EXPECT_NEAR(h.dx(), 0.09766, 1e-5);
}

TEST(MakeGrid, RejectsBadSizes)
{
    try {
        make_grid(10, 0.0, 1.0);
        FAIL() << "expected a configuration error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::configuration);
    }
    EXPECT_THROW(make_grid(8, 0.0, 1.0), Error);
    EXPECT_THROW(make_grid(64, 1.0, 1.0), Error);
    EXPECT_THROW(make_grid(64, 2.0, 1.0), Error);
}

TEST(InitGaussian, MinimumUncertaintyMoments)
{
    const auto g = make_grid(1024, -20.0, 20.0);
    const auto psi = init_gaussian(g, 0.0, 10.0, 1.0);
    const auto obs = observables(psi, 1.0);
    EXPECT_NEAR(obs.norm, 1.0, 1e-12);
    EXPECT_NEAR(obs.mean_x, 0.0, 1e-12);
    EXPECT_NEAR(obs.mean_p, 10.0, 1e-10);
    EXPECT_NEAR(obs.dx_spread, 1.0, 1e-10);
    EXPECT_NEAR(obs.dp_spread, 0.5, 1e-10);
    EXPECT_NEAR(obs.dx_spread * obs.dp_spread, 0.5, 1e-10);
}

TEST(InitGaussian, EnergyMomentsMatchDirectQuadrature)
{
    // Independent route: integrate the analytic momentum density
    // exp(-(p - p0)^2 / (2 sp^2)) with a plain Riemann sum.
    const double p0 = 10.0, sp = 0.5;
    double norm = 0.0, m2 = 0.0, m4 = 0.0;
    const double h = 1e-4;
    for (double p = p0 - 15.0 * sp; p <= p0 + 15.0 * sp; p += h) {
        const double w = std::exp(-(p - p0) * (p - p0) / (2.0 * sp * sp));
        norm += w;
        m2 += w * p * p;
        m4 += w * p * p * p * p;
    }
    const double mean_E_quad = m2 / norm / 2.0;
    const double mean_p4_quad = m4 / norm;
    EXPECT_NEAR(mean_E_quad, 50.125, 1e-9);
    EXPECT_NEAR(mean_p4_quad, 10150.1875, 1e-7);

    const auto psi = init_gaussian(make_grid(1024, -20.0, 20.0), 0.0, p0, 1.0);
    const auto obs = observables(psi, 1.0);
    EXPECT_NEAR(obs.mean_E, 50.125, 1e-9);
    EXPECT_NEAR(obs.mean_p4, 10150.1875, 1e-7);
    EXPECT_NEAR(obs.dE, std::sqrt(obs.mean_p4 / 4.0 - obs.mean_E * obs.mean_E), 1e-9);
    // (p0^2 + dp^2) / 2m
    EXPECT_NEAR(obs.mean_E, (p0 * p0 + obs.dp_spread * obs.dp_spread) / 2.0, 1e-9);
}

TEST(InitGaussian, ResolutionErrors)
{
    const auto g = make_grid(64, -10.0, 10.0);
    try {
        init_gaussian(g, 0.0, 0.0, 0.5);
        FAIL() << "narrow packet accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::resolution);
    }
    EXPECT_THROW(init_gaussian(make_grid(1024, -10.0, 10.0), 8.0, 0.0, 1.0), Error);
    EXPECT_THROW(init_gaussian(make_grid(256, -10.0, 10.0), 0.0, 50.0, 1.0), Error);
}

TEST(Observables, MomentInequalitiesHoldForRandomPackets)
{
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> x0(-5.0, 5.0), p0(-15.0, 15.0), sx(0.6, 3.0), mass(0.5, 4.0);
    const auto g = make_grid(2048, -40.0, 40.0);
    for (int trial = 0; trial < 25; ++trial) {
        const double m = mass(rng);
        const auto obs = observables(init_gaussian(g, x0(rng), p0(rng), sx(rng)), m);
        EXPECT_GE(obs.dx_spread, 0.0);
        EXPECT_GE(obs.dp_spread, 0.0);
        EXPECT_GE(obs.mean_p2, obs.mean_p * obs.mean_p);
        EXPECT_GE(obs.mean_p4, obs.mean_p2 * obs.mean_p2);
        EXPECT_NEAR(obs.dE * obs.dE, obs.mean_p4 / (4.0 * m * m) - obs.mean_E * obs.mean_E,
                    1e-9 * obs.mean_p4 / (m * m));
    }
}

TEST(Observables, RequireNormalizedState)
{
    auto psi = init_gaussian(make_grid(256, -10.0, 10.0), 0.0, 0.0, 1.0);
    for (auto& a : psi.amplitudes)
        a *= 2.0;
    EXPECT_THROW(observables(psi, 1.0), Error);
}

TEST(RegionProbability, InsideOutsideAndHalf)
{
    const auto g = offset_grid(2048, 32.0);
    const auto psi = init_gaussian(g, 10.0, 0.0, 1.0);
    EXPECT_NEAR(region_probability(psi, 0.0, 20.0), 1.0, 1e-12);
    EXPECT_LT(region_probability(psi, -30.0, -5.0), 1e-12);
    const auto centred = init_gaussian(g, 0.0, 0.0, 1.0);
    EXPECT_NEAR(region_probability(centred, 0.0, 20.0), 0.5, 1e-6);
}

TEST(RegionProbability, RejectsRegionOutsideGrid)
{
    const auto psi = init_gaussian(make_grid(256, -10.0, 10.0), 0.0, 0.0, 1.0);
    try {
        region_probability(psi, 0.0, 12.0);
        FAIL() << "region outside grid accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::configuration);
    }
    EXPECT_THROW(region_probability(psi, 2.0, 1.0), Error);
}

TEST(DwellTimeExpectation, TrapezoidRule)
{
    const std::vector<double> never(100, 0.0);
    EXPECT_NEAR(dwell_time_expectation(never, 0.01), 0.0, 1e-12);

    // triangle of height 1 and base 2
    std::vector<double> triangle;
    for (int i = 0; i <= 200; ++i)
        triangle.push_back(1.0 - std::abs(i - 100) / 100.0);
    EXPECT_NEAR(dwell_time_expectation(triangle, 0.01), 1.0, 1e-12);
}

TEST(DwellTimeExpectation, IncompleteTransit)
{
    const std::vector<double> stuck{0.0, 0.5, 0.5};
    try {
        dwell_time_expectation(stuck, 0.1);
        FAIL() << "truncated series accepted";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::incomplete_transit);
    }
}

TEST(PotentialProfile, BoxSamplingAndGeometry)
{
    auto v = PotentialProfile::box(0.0, 5.0, 2.0);
    EXPECT_EQ(v(0.0), 2.0);
    EXPECT_EQ(v(5.0), 2.0);
    EXPECT_EQ(v(5.0001), 0.0);
    EXPECT_EQ(v(-1e-9), 0.0);
    v.add_box(7.0, 8.0, 1.0);
    EXPECT_DOUBLE_EQ(v.total_length(), 6.0);
    EXPECT_DOUBLE_EQ(v.right(), 8.0);
    EXPECT_THROW(v.add_box(4.0, 6.0, 1.0), Error);
    EXPECT_TRUE(PotentialProfile::zero().is_zero());
}
