#pragma once

// Closed-form reference results. Nothing here touches the grid engine or the
// clock models; tests compare simulation output against these values.

#include <cmath>
#include <string>

#include "ttclock/errors.hpp"

namespace ttclock::oracles {

struct OracleResult {
    double value = 0.0;
    std::string validity_domain;
};

/// Width of a free Gaussian packet: sigma0 * sqrt(1 + (t / (2 m sigma0^2))^2).
inline OracleResult free_gaussian_spread(double sigma0, double mass, double t)
{
    require(sigma0 > 0.0, Errc::configuration, "sigma0 must be positive");
    const double tau = t / (2.0 * mass * sigma0 * sigma0);
    return {sigma0 * std::sqrt(1.0 + tau * tau), "free particle, minimum-uncertainty Gaussian at t = 0"};
}

/// Transmission probability of a rectangular barrier of height q and width L
/// for a plane wave of momentum p. Written with sinc/sinhc so the E = q point
/// needs no special branch:
///   T = 1 / (1 + m q^2 L^2 f^2 / (2E)),  f = sin(k'L)/(k'L) or sinh(kL)/(kL).
inline OracleResult step_barrier_transmission(double p, double q, double mass, double L)
{
    require(p > 0.0 && L > 0.0 && mass > 0.0, Errc::configuration, "transmission needs p, L, mass > 0");
    if (q == 0.0)
        return {1.0, "q = 0"};
    const double energy = p * p / (2.0 * mass);
    const double gap = energy - q;
    const double arg = std::sqrt(2.0 * mass * std::abs(gap)) * L;
    double f = 1.0;
    if (arg > 1e-6)
        f = gap > 0.0 ? std::sin(arg) / arg : std::sinh(arg) / arg;
    else
        f = gap > 0.0 ? 1.0 - arg * arg / 6.0 : 1.0 + arg * arg / 6.0;
    const double value = 1.0 / (1.0 + mass * q * q * L * L * f * f / (2.0 * energy));
    return {value, gap > 0.0 ? "E > q (over the barrier)" : (gap < 0.0 ? "E < q (tunnelling)" : "E = q")};
}

struct ClassicalTimes {
    double t_enter = 0.0;
    double t_exit = 0.0;
    double t_F = 0.0;
};

/// Entry, exit and traversal times of a free classical particle starting at x0.
inline ClassicalTimes classical_times(double p0, double mass, double x0, double x1, double x2)
{
    require(p0 > 0.0, Errc::undefined_time, "classical times need p0 > 0");
    require(x0 < x1 && x1 < x2, Errc::configuration, "classical times need x0 < x1 < x2");
    ClassicalTimes t;
    t.t_enter = mass * (x1 - x0) / p0;
    t.t_exit = mass * (x2 - x0) / p0;
    t.t_F = t.t_exit - t.t_enter;
    return t;
}

} // namespace ttclock::oracles
