#pragma once

// Larmor clock: a spin j with bounded Hamiltonian omega J_z switched on inside
// the region. The J_z eigenstates are clock sectors with coupling omega * m_z,
// so the spin prepared along +x precesses by omega * T while the particle is
// inside. The traversal time is read from the precession angle of the spin
// carried by the transmitted particle.

#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>

#include "ttclock/clock.hpp"
#include "ttclock/errors.hpp"
#include "ttclock/grid.hpp"

namespace ttclock {

struct SpinMoments {
    cplx j_plus{0.0, 0.0};
    cplx j_plus_sq{0.0, 0.0};
    double j_z = 0.0;
    double j_z_sq = 0.0;
    double probability = 0.0;
};

/// Spin moments of the transmitted part of the joint state, normalized to that
/// part.
inline SpinMoments transmitted_spin(const JointState& joint)
{
    require(joint.region.has_value(), Errc::configuration, "spin moments need an evolved joint state");
    require(joint.clock.kind == ClockKind::larmor, Errc::configuration, "spin moments need a Larmor clock");
    const double j = joint.clock.spin();
    const auto& sectors = joint.sectors;
    const std::size_t n = sectors.size();
    const SpatialGrid& grid = sectors.front().state.grid;

    auto ladder = [j](double m) { return std::sqrt(j * (j + 1.0) - m * (m + 1.0)); };
    auto overlap_right = [&](std::size_t a, std::size_t b) {
        cplx sum{0.0, 0.0};
        for (std::size_t i = 0; i < grid.n_points; ++i)
            if (is_transmitted(joint, i))
                sum += std::conj(sectors[a].state.amplitudes[i]) * sectors[b].state.amplitudes[i];
        return std::conj(sectors[a].weight) * sectors[b].weight * sum * grid.dx();
    };

    SpinMoments out;
    for (std::size_t s = 0; s < n; ++s) {
        const double m = static_cast<double>(s) - j;
        const double p = overlap_right(s, s).real();
        out.probability += p;
        out.j_z += m * p;
        out.j_z_sq += m * m * p;
        if (s + 1 < n)
            out.j_plus += ladder(m) * overlap_right(s + 1, s);
        if (s + 2 < n)
            out.j_plus_sq += ladder(m) * ladder(m + 1.0) * overlap_right(s + 2, s);
    }
    require(out.probability > kMinTransmitted, Errc::no_transmission, "no spin transmitted past the region");
    out.j_plus /= out.probability;
    out.j_plus_sq /= out.probability;
    out.j_z /= out.probability;
    out.j_z_sq /= out.probability;
    return out;
}

struct LarmorResult {
    ClockReadout readout;
    /// Precession angle arg <J_+> of the transmitted spin.
    double phase = 0.0;
    double j_x = 0.0;
    double j_y = 0.0;
    /// Spread of the spin component perpendicular to its mean in the x-y plane.
    double perpendicular_spread = 0.0;
    JointState joint;
};

/// Runs the Larmor clock on `particle` and reads T = phase / omega from the
/// transmitted spin; spread_T is the angular uncertainty of that spin divided
/// by omega.
inline LarmorResult larmor_clock_run(const WaveFunction& particle, double j, double omega,
                                     const PotentialProfile& region, double t_total, double dt, double mass,
                                     const EvolveOptions& options = {})
{
    const ClockSpec clock = init_larmor_clock(j, omega);
    require(!region.boxes.empty(), Errc::configuration, "Larmor clock needs a region");

    // No-wrapping precondition: omega * 2j * T_max < pi, with T_max the classical
    // traversal time of the slowest significant momentum in the slowest sector.
    const auto obs = observables(particle, mass);
    const double p_low = obs.mean_p - 4.0 * obs.dp_spread;
    const double inner = p_low * p_low - 2.0 * mass * omega * clock.spin();
    require(p_low > 0.0 && inner > 0.0, Errc::aliasing,
            "slowest sector is reflected; precession angle cannot be bounded");
    const double t_max = mass * region.total_length() / std::sqrt(inner);
    require(omega * clock.two_j * t_max < std::numbers::pi, Errc::aliasing,
            "omega * 2j * T_max = " + std::to_string(omega * clock.two_j * t_max) + " reaches pi");

    LarmorResult result;
    result.joint = evolve_joint(make_joint(clock, particle), region, t_total, dt, mass, options);
    const auto spin = transmitted_spin(result.joint);
    result.phase = std::arg(spin.j_plus);
    result.j_x = spin.j_plus.real();
    result.j_y = spin.j_plus.imag();
    const double length = std::abs(spin.j_plus);
    const double jj = clock.spin() * (clock.spin() + 1.0);
    const double perp_sq =
        0.5 * (jj - spin.j_z_sq) - 0.5 * (std::polar(1.0, -2.0 * result.phase) * spin.j_plus_sq).real();
    result.perpendicular_spread = std::sqrt(std::max(0.0, perp_sq));

    result.readout.conditioned = true;
    result.readout.transmitted_fraction = transmitted_fraction(result.joint);
    result.readout.mean_T = result.phase / omega;
    result.readout.spread_T = result.perpendicular_spread / (omega * length);
    return result;
}

} // namespace ttclock
