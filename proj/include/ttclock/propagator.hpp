#pragma once

// Time evolution of a single particle under a static piecewise-constant
// potential. Two routes are provided:
//   * SplitOperatorPropagator: Strang splitting (kinetic-potential-kinetic) on
//     the periodic grid, the general-purpose time-domain engine.
//   * scatter_asymptotic: exact stationary scattering of an incoming packet,
//     giving the outgoing (t -> infinity) state expressed at a chosen time.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <functional>
#include <numeric>
#include <numbers>
#include <string>
#include <vector>

#include "ttclock/errors.hpp"
#include "ttclock/fft.hpp"
#include "ttclock/grid.hpp"

namespace ttclock {

inline constexpr double kPotentialPhaseLimit = 0.1;
inline constexpr double kKineticPhaseLimit = 0.5;

/// Largest kinetic energy the evolution can reach: the top of the occupied
/// momentum band of psi (all but 1e-12 of the probability lies inside it) plus
/// the depth of any attractive well.
inline double reachable_kinetic_energy(const WaveFunction& psi, const PotentialProfile& potential, double mass)
{
    const auto prob = momentum_probabilities(psi);
    std::vector<std::size_t> order(prob.size());
    for (std::size_t j = 0; j < order.size(); ++j)
        order[j] = j;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return std::abs(psi.grid.k(a)) > std::abs(psi.grid.k(b));
    });
    const double total = std::accumulate(prob.begin(), prob.end(), 0.0);
    double tail = 0.0;
    double k_max = 0.0;
    for (std::size_t j : order) {
        tail += prob[j];
        if (tail > 1e-12 * total) {
            k_max = std::abs(psi.grid.k(j));
            break;
        }
    }
    return k_max * k_max / (2.0 * mass) + std::max(0.0, -potential.min_value());
}

/// Step-size policy: dt*max|V| < 0.1 and dt*E_max < 0.5. A nonzero potential
/// also needs dt*(k_max^2/2m + max|V|) < 2 pi: the stepped map conserves energy
/// only modulo 2 pi/dt, and box edges otherwise feed grid modes one quasi-energy
/// period above the packet.
inline void check_step_policy(const WaveFunction& psi, const PotentialProfile& potential, double dt, double mass)
{
    require(dt > 0.0, Errc::step_size, "time step must be positive");
    require(mass > 0.0, Errc::configuration, "mass must be positive");
    const double v_phase = dt * potential.max_abs();
    require(v_phase < kPotentialPhaseLimit, Errc::step_size,
            "dt*max|V| = " + std::to_string(v_phase) + " violates the limit 0.1");
    const double k_phase = dt * reachable_kinetic_energy(psi, potential, mass);
    require(k_phase < kKineticPhaseLimit, Errc::step_size,
            "dt*E_max = " + std::to_string(k_phase) + " violates the limit 0.5");
    if (!potential.is_zero()) {
        const double k_max = psi.grid.k_max();
        const double band = dt * (k_max * k_max / (2.0 * mass) + potential.max_abs());
        require(band < 2.0 * std::numbers::pi, Errc::step_size,
                "dt*(grid kinetic band + max|V|) = " + std::to_string(band) + " reaches 2 pi; refine dt or coarsen dx");
    }
}

class SplitOperatorPropagator {
public:
    SplitOperatorPropagator(const SpatialGrid& grid, const PotentialProfile& potential, double dt, double mass)
        : grid_(grid), dt_(dt), kinetic_half_(grid.n_points), kinetic_full_(grid.n_points),
          potential_(grid.n_points)
    {
        const double inv_n = 1.0 / static_cast<double>(grid.n_points);
        for (std::size_t j = 0; j < grid.n_points; ++j) {
            const double energy = grid.k(j) * grid.k(j) / (2.0 * mass);
            kinetic_half_[j] = std::polar(inv_n, -0.5 * energy * dt);
            kinetic_full_[j] = std::polar(inv_n, -energy * dt);
            potential_[j] = std::polar(1.0, -potential(grid.x(j)) * dt);
        }
    }

    double dt() const { return dt_; }

    /// One Strang step: half kinetic, full potential, half kinetic.
    void step(WaveFunction& psi) const
    {
        auto& a = psi.amplitudes;
        kinetic(a, kinetic_half_);
        multiply(a, potential_);
        kinetic(a, kinetic_half_);
        guard(psi);
    }

    /// `steps` Strang steps with adjacent half kinetic factors merged.
    void advance(WaveFunction& psi, std::size_t steps) const
    {
        if (steps == 0)
            return;
        auto& a = psi.amplitudes;
        fft_forward(a);
        multiply(a, kinetic_half_);
        fft_backward(a);
        for (std::size_t s = 0; s < steps; ++s) {
            multiply(a, potential_);
            fft_forward(a);
            multiply(a, s + 1 == steps ? kinetic_half_ : kinetic_full_);
            fft_backward(a);
            guard(psi);
        }
    }

private:
    static void multiply(std::vector<cplx>& a, const std::vector<cplx>& phase)
    {
        for (std::size_t j = 0; j < a.size(); ++j)
            a[j] *= phase[j];
    }

    static void kinetic(std::vector<cplx>& a, const std::vector<cplx>& phase)
    {
        fft_forward(a);
        multiply(a, phase);
        fft_backward(a);
    }

    static void guard(const WaveFunction& psi)
    {
        const double edge = boundary_density(psi);
        if (edge > kBoundaryDensityLimit)
            throw Error(Errc::resolution, "density " + std::to_string(edge) + " reached the periodic boundary");
    }

    SpatialGrid grid_;
    double dt_;
    std::vector<cplx> kinetic_half_;
    std::vector<cplx> kinetic_full_;
    std::vector<cplx> potential_;
};

/// One Strang step of size dt under `potential`.
inline WaveFunction step_split_operator(WaveFunction state, const PotentialProfile& potential, double dt, double mass)
{
    check_step_policy(state, potential, dt, mass);
    SplitOperatorPropagator(state.grid, potential, dt, mass).step(state);
    return state;
}

namespace detail {

inline void check_norm(const WaveFunction& psi, double reference)
{
    const double drift = std::abs(psi.norm() - reference);
    require(drift < kNormTolerance, Errc::resolution, "norm drift " + std::to_string(drift) + " exceeds 1e-9");
}

struct StepPlan {
    std::size_t full_steps = 0;
    double remainder = 0.0;
};

inline StepPlan plan_steps(double t_total, double dt)
{
    require(t_total >= 0.0, Errc::configuration, "t_total must be non-negative");
    require(dt > 0.0, Errc::step_size, "time step must be positive");
    StepPlan plan;
    plan.full_steps = static_cast<std::size_t>(std::floor(t_total / dt));
    plan.remainder = t_total - static_cast<double>(plan.full_steps) * dt;
    if (plan.remainder < 1e-12 * dt)
        plan.remainder = 0.0;
    return plan;
}

} // namespace detail

/// Evolves for t_total using floor(t_total/dt) full steps and one final
/// fractional step for the remainder.
inline WaveFunction evolve(WaveFunction state, const PotentialProfile& potential, double t_total, double dt,
                           double mass)
{
    const auto plan = detail::plan_steps(t_total, dt);
    if (plan.full_steps == 0 && plan.remainder == 0.0)
        return state;
    check_step_policy(state, potential, dt, mass);
    const double reference = state.norm();
    SplitOperatorPropagator(state.grid, potential, dt, mass).advance(state, plan.full_steps);
    if (plan.remainder > 0.0)
        SplitOperatorPropagator(state.grid, potential, plan.remainder, mass).step(state);
    detail::check_norm(state, reference);
    return state;
}

/// Like evolve, but calls observer(time, state) at t = 0 and after every step.
inline WaveFunction evolve_observed(WaveFunction state, const PotentialProfile& potential, double t_total,
                                    double dt, double mass,
                                    const std::function<void(double, const WaveFunction&)>& observer)
{
    const auto plan = detail::plan_steps(t_total, dt);
    observer(0.0, state);
    if (plan.full_steps == 0 && plan.remainder == 0.0)
        return state;
    check_step_policy(state, potential, dt, mass);
    const double reference = state.norm();
    const SplitOperatorPropagator prop(state.grid, potential, dt, mass);
    for (std::size_t s = 0; s < plan.full_steps; ++s) {
        prop.step(state);
        observer(static_cast<double>(s + 1) * dt, state);
    }
    if (plan.remainder > 0.0) {
        SplitOperatorPropagator(state.grid, potential, plan.remainder, mass).step(state);
        observer(t_total, state);
    }
    detail::check_norm(state, reference);
    return state;
}

/// Region-probability series sampled every dt under free evolution, then its
/// time integral: the dwell-time expectation for [x1, x2].
inline double dwell_time(const WaveFunction& state, double x1, double x2, double t_total, double dt, double mass,
                         std::vector<double>* series = nullptr)
{
    std::vector<double> samples;
    samples.reserve(static_cast<std::size_t>(t_total / dt) + 2);
    evolve_observed(state, PotentialProfile::zero(), t_total, dt, mass,
                    [&](double, const WaveFunction& psi) { samples.push_back(region_probability(psi, x1, x2)); });
    // A trailing fractional step would break the uniform trapezoid rule.
    require(std::abs(static_cast<double>(samples.size() - 1) * dt - t_total) < 1e-9 * dt + 1e-12,
            Errc::configuration, "dwell time needs t_total to be a multiple of dt");
    if (series)
        *series = samples;
    return dwell_time_expectation(samples, dt);
}

/// Transmission and reflection amplitudes for a plane wave exp(ikx), k > 0,
/// incident from the left on a piecewise-constant potential. `transmission`
/// is relative to free propagation (1 for a vanishing potential) and
/// `reflection` is the coefficient of exp(-ikx) in the region left of the
/// potential.
struct ScatteringAmplitudes {
    cplx transmission{1.0, 0.0};
    cplx reflection{0.0, 0.0};
};

namespace detail {

// Transfer matrix for (psi, psi') across a constant-potential segment of
// length `len`, returned with a factor exp(-log_scale) divided out.
struct Transfer {
    double m11 = 1.0, m12 = 0.0, m21 = 0.0, m22 = 1.0;
    double log_scale = 0.0;
};

inline Transfer segment_transfer(double k_inner_sq, double len)
{
    Transfer t;
    if (k_inner_sq > 0.0) {
        const double kp = std::sqrt(k_inner_sq);
        const double phase = kp * len;
        const double c = std::cos(phase);
        const double s = phase > 1e-8 ? std::sin(phase) / kp : len * (1.0 - phase * phase / 6.0);
        t = {c, s, -k_inner_sq * s, c, 0.0};
    } else if (k_inner_sq < 0.0) {
        const double kappa = std::sqrt(-k_inner_sq);
        const double decay = kappa * len;
        if (decay < 1.0) {
            const double c = std::cosh(decay);
            const double s = decay > 1e-8 ? std::sinh(decay) / kappa : len * (1.0 + decay * decay / 6.0);
            t = {c, s, kappa * kappa * s, c, 0.0};
        } else {
            const double e = std::exp(-2.0 * decay);
            const double c = 0.5 * (1.0 + e);
            const double s = 0.5 * (1.0 - e) / kappa;
            t = {c, s, kappa * kappa * s, c, decay};
        }
    } else {
        t = {1.0, len, 0.0, 1.0, 0.0};
    }
    return t;
}

inline Transfer compose(const Transfer& later, const Transfer& earlier)
{
    Transfer r;
    r.m11 = later.m11 * earlier.m11 + later.m12 * earlier.m21;
    r.m12 = later.m11 * earlier.m12 + later.m12 * earlier.m22;
    r.m21 = later.m21 * earlier.m11 + later.m22 * earlier.m21;
    r.m22 = later.m21 * earlier.m12 + later.m22 * earlier.m22;
    r.log_scale = later.log_scale + earlier.log_scale;
    const double big = std::max({std::abs(r.m11), std::abs(r.m12), std::abs(r.m21), std::abs(r.m22)});
    if (big > 1e100 || (big < 1e-100 && big > 0.0)) {
        r.m11 /= big;
        r.m12 /= big;
        r.m21 /= big;
        r.m22 /= big;
        r.log_scale += std::log(big);
    }
    return r;
}

} // namespace detail

inline ScatteringAmplitudes scattering_amplitudes(double k, const PotentialProfile& potential, double mass)
{
    require(k > 0.0, Errc::configuration, "scattering amplitudes need k > 0");
    if (potential.boxes.empty())
        return {};
    detail::Transfer total;
    double x = potential.left();
    for (const auto& b : potential.boxes) {
        if (b.x1 > x)
            total = detail::compose(detail::segment_transfer(k * k, b.x1 - x), total);
        total = detail::compose(detail::segment_transfer(k * k - 2.0 * mass * b.height, b.length()), total);
        x = b.x2;
    }
    const double x_a = potential.left();
    const double x_b = potential.right();
    const cplx i{0.0, 1.0};
    // det M = 1, so tau = 2 / (M11 + M22 - ik M12 + i M21 / k).
    const cplx sigma = total.m11 + total.m22 - i * k * total.m12 + i * total.m21 / k;
    const cplx tau = 2.0 * std::exp(-total.log_scale) / sigma;
    const cplx r = 2.0 * (total.m22 - i * k * total.m12) / sigma - 1.0;
    ScatteringAmplitudes out;
    out.transmission = tau * std::polar(1.0, -k * (x_b - x_a));
    out.reflection = r * std::polar(1.0, 2.0 * k * x_a);
    return out;
}

/// Outgoing momentum amplitudes of a packet that starts entirely to the left
/// of the potential: each component k > 0 splits into transmission at k and
/// reflection at -k; components with k <= 0 never reach it. Scaled so that
/// sum |phi_j|^2 dx = 1, like position amplitudes on the same grid.
inline std::vector<cplx> scatter_outgoing_momentum(const WaveFunction& incoming, const PotentialProfile& potential,
                                                   double mass)
{
    const SpatialGrid& g = incoming.grid;
    require(mass > 0.0, Errc::configuration, "mass must be positive");
    if (!potential.boxes.empty()) {
        double inside = 0.0;
        for (std::size_t j = 0; j < g.n_points; ++j)
            if (g.x(j) >= potential.left())
                inside += incoming.density(j);
        require(inside * g.dx() < 1e-10, Errc::validation,
                "stationary scattering needs the packet to start left of the potential");
    }
    std::vector<cplx> phi = incoming.amplitudes;
    fft_forward(phi);
    const std::size_t n = g.n_points;
    const double scale = 1.0 / std::sqrt(static_cast<double>(n));
    std::vector<cplx> out(n, cplx{0.0, 0.0});
    for (std::size_t j = 0; j < n; ++j) {
        const double k = g.k(j);
        const cplx a = phi[j] * scale;
        if (k <= 0.0 || j == n / 2 || potential.is_zero()) {
            out[j] += a;
            continue;
        }
        const auto amp = scattering_amplitudes(k, potential, mass);
        out[j] += amp.transmission * a;
        out[n - j] += amp.reflection * a;
    }
    return out;
}

/// Outgoing state at time t_total: the outgoing momentum amplitudes propagated
/// freely and brought back to position space.
inline WaveFunction scatter_asymptotic(const WaveFunction& incoming, const PotentialProfile& potential,
                                       double t_total, double mass)
{
    const SpatialGrid& g = incoming.grid;
    std::vector<cplx> out = scatter_outgoing_momentum(incoming, potential, mass);
    const double scale = 1.0 / std::sqrt(static_cast<double>(g.n_points));
    for (std::size_t j = 0; j < g.n_points; ++j) {
        const double k = g.k(j);
        out[j] *= std::polar(scale, -k * k * t_total / (2.0 * mass));
    }
    fft_backward(out);
    WaveFunction psi(g, std::move(out));
    require(boundary_density(psi) < kBoundaryDensityLimit, Errc::resolution,
            "outgoing packet reaches the periodic boundary");
    return psi;
}

} // namespace ttclock
