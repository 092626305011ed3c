#pragma once

// Traversal-distance measurement: the pointer couples to the particle position
// through impulsive kicks exp(-i q x) at t1 and exp(+i q x) at t2, so each
// sector picks up the phase q (x(t2) - x(t1)) and the pointer records the
// distance travelled. Between the kicks every sector moves with momentum p - q.

#include <cmath>
#include <complex>
#include <cstddef>
#include <utility>
#include <vector>

#include "ttclock/clock.hpp"
#include "ttclock/errors.hpp"
#include "ttclock/grid.hpp"
#include "ttclock/parallel.hpp"
#include "ttclock/propagator.hpp"

namespace ttclock {

/// Multiplies psi by exp(-i sign q x); shifts every momentum by -sign * q.
inline WaveFunction apply_position_kick(WaveFunction state, double q, int sign)
{
    require(sign == 1 || sign == -1, Errc::configuration, "kick sign must be +1 or -1");
    if (q == 0.0)
        return state;
    const double factor = -static_cast<double>(sign) * q;
    for (std::size_t j = 0; j < state.grid.n_points; ++j)
        state.amplitudes[j] *= std::polar(1.0, factor * state.grid.x(j));
    return state;
}

/// Kick times plus the pointer; clock.q values carry momentum units here and
/// the pointer reads a length.
struct KickSchedule {
    double t1 = 0.0;
    double t2 = 0.0;
    ClockSpec clock;
};

struct DistanceResult {
    double pointer_shift_mean = 0.0;
    double pointer_shift_spread = 0.0;
    /// (q, <p>) of each sector between the kicks.
    std::vector<std::pair<double, double>> per_sector_intermediate_p;
    /// <p> of each sector after the second kick.
    std::vector<double> per_sector_final_p;
    /// <p> of the particle before the first kick.
    double initial_p = 0.0;
    /// Position spread of each sector at t_total.
    std::vector<double> per_sector_final_dx;
    double initial_dx = 0.0;
    /// Kick times after snapping to the step lattice, and the snap offsets.
    double t1_snapped = 0.0;
    double t2_snapped = 0.0;
    double t1_snap_error = 0.0;
    double t2_snap_error = 0.0;
    PointerDistribution distribution;
};

/// m * shift / (t2 - t1): momentum between the kicks inferred from the pointer.
inline double infer_intermediate_momentum(double pointer_shift, double t1, double t2, double mass)
{
    require(t2 > t1, Errc::configuration, "t2 must exceed t1");
    return mass * pointer_shift / (t2 - t1);
}

/// Free evolution with the two kicks applied at the step times nearest to t1
/// and t2, then free evolution up to t_total.
inline DistanceResult run_traversal_distance(const WaveFunction& particle, const KickSchedule& schedule,
                                             double t_total, double dt, double mass, unsigned workers = 1)
{
    require(schedule.clock.kind == ClockKind::continuous, Errc::configuration,
            "traversal distance uses the continuous pointer");
    require(schedule.t1 >= 0.0 && schedule.t2 > schedule.t1, Errc::configuration, "kicks need 0 <= t1 < t2");
    require(dt > 0.0, Errc::step_size, "time step must be positive");

    DistanceResult result;
    const auto n1 = static_cast<std::size_t>(std::llround(schedule.t1 / dt));
    const auto n2 = static_cast<std::size_t>(std::llround(schedule.t2 / dt));
    require(n2 > n1, Errc::configuration, "kick times collapse onto the same step; reduce dt");
    result.t1_snapped = static_cast<double>(n1) * dt;
    result.t2_snapped = static_cast<double>(n2) * dt;
    result.t1_snap_error = result.t1_snapped - schedule.t1;
    result.t2_snap_error = result.t2_snapped - schedule.t2;
    require(t_total >= result.t2_snapped, Errc::configuration, "t_total must not precede the second kick");

    const auto free = PotentialProfile::zero();
    const auto before = observables(particle, mass);
    result.initial_p = before.mean_p;
    result.initial_dx = before.dx_spread;

    // Every sector is identical up to the first kick.
    const WaveFunction at_t1 = evolve(particle, free, result.t1_snapped, dt, mass);

    JointState joint = make_joint(schedule.clock, particle);
    const std::size_t n = joint.sectors.size();
    result.per_sector_intermediate_p.resize(n);
    result.per_sector_final_p.resize(n);
    result.per_sector_final_dx.resize(n);
    parallel_for(n, workers, [&](std::size_t s) {
        Sector& sector = joint.sectors[s];
        WaveFunction psi = apply_position_kick(at_t1, sector.q, +1);
        result.per_sector_intermediate_p[s] = {sector.q, observables(psi, mass).mean_p};
        psi = evolve(std::move(psi), free, result.t2_snapped - result.t1_snapped, dt, mass);
        psi = apply_position_kick(std::move(psi), sector.q, -1);
        psi = evolve(std::move(psi), free, t_total - result.t2_snapped, dt, mass);
        const auto after = observables(psi, mass);
        result.per_sector_final_p[s] = after.mean_p;
        result.per_sector_final_dx[s] = after.dx_spread;
        sector.state = std::move(psi);
    });

    // The accumulated phase is exp(+i q x_F), so the reading uses the reversed
    // orientation; centre the window on the classical displacement.
    const double expected = before.mean_p * (result.t2_snapped - result.t1_snapped) / mass;
    PointerOptions opts;
    opts.orientation = PointerOrientation::reversed;
    opts.window_start = expected - 0.5 * schedule.clock.pointer_period();
    result.distribution = pointer_distribution(joint, opts, workers);
    result.pointer_shift_mean = result.distribution.mean();
    result.pointer_shift_spread = result.distribution.spread();
    return result;
}

} // namespace ttclock
