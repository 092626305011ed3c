#pragma once

// Model clocks coupled to the particle through H = p^2/2m + V(x) Q. The
// coupling variable Q commutes with H, so the joint particle-clock state is a
// superposition of fixed-q sectors; each sector is an ordinary scattering
// problem with potential q V(x). The pointer P, conjugate to Q, is recovered by
// a Fourier transform over the sector amplitudes.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ttclock/errors.hpp"
#include "ttclock/fft.hpp"
#include "ttclock/grid.hpp"
#include "ttclock/parallel.hpp"
#include "ttclock/propagator.hpp"

namespace ttclock {

enum class ClockKind { continuous, larmor };

/// How each fixed-q sector is propagated.
enum class SectorMethod {
    split_operator, ///< time-domain Strang propagation on the grid
    stationary,     ///< exact outgoing state from transfer-matrix scattering
};

struct ClockSpec {
    ClockKind kind = ClockKind::continuous;

    // continuous pointer clock
    std::size_t n_sectors = 0;
    double q_max = 0.0;
    double dP0 = 0.0;

    // Larmor clock: spin j = two_j / 2 precessing at omega inside the region
    int two_j = 1;
    double omega = 0.0;

    /// Initial coupling-variable spread, dQ0 = 1 / (2 dP0).
    double dQ0() const { return 0.5 / dP0; }
    double spin() const { return 0.5 * two_j; }

    std::size_t size() const
    {
        return kind == ClockKind::continuous ? n_sectors : static_cast<std::size_t>(two_j + 1);
    }

    double q_spacing() const
    {
        return kind == ClockKind::continuous ? 2.0 * q_max / static_cast<double>(n_sectors - 1) : omega;
    }

    /// Period of the pointer lattice; readings are defined modulo this value.
    double pointer_period() const { return 2.0 * std::numbers::pi / q_spacing(); }

    /// Coupling value of every sector: a uniform grid on [-q_max, q_max], or
    /// omega * m_z for m_z = -j..j.
    std::vector<double> q_values() const
    {
        std::vector<double> q(size());
        for (std::size_t s = 0; s < q.size(); ++s) {
            if (kind == ClockKind::continuous)
                q[s] = -q_max + static_cast<double>(s) * q_spacing();
            else
                q[s] = omega * (static_cast<double>(s) - spin());
        }
        if (kind == ClockKind::continuous)
            q[(q.size() - 1) / 2] = 0.0;
        return q;
    }

    /// Sector amplitudes of the initial clock state, normalized to unit sum of
    /// squares. Continuous: minimum-uncertainty Gaussian in q with P and Q
    /// centred on zero. Larmor: spin coherent state along +x.
    std::vector<cplx> initial_weights() const
    {
        std::vector<cplx> w(size());
        if (kind == ClockKind::continuous) {
            const auto q = q_values();
            const double dq0 = dQ0();
            double sum = 0.0;
            for (std::size_t s = 0; s < w.size(); ++s) {
                const double a = std::exp(-q[s] * q[s] / (4.0 * dq0 * dq0));
                w[s] = a;
                sum += a * a;
            }
            for (auto& x : w)
                x /= std::sqrt(sum);
        } else {
            // |<m|j, x>|^2 = C(2j, j+m) / 2^(2j)
            for (std::size_t s = 0; s < w.size(); ++s) {
                const double log_binom = std::lgamma(two_j + 1.0) - std::lgamma(s + 1.0) -
                                         std::lgamma(two_j - static_cast<double>(s) + 1.0);
                w[s] = std::exp(0.5 * (log_binom - two_j * std::numbers::ln2));
            }
        }
        return w;
    }
};

inline constexpr std::size_t kMinSectors = 17;

inline ClockSpec init_continuous_clock(double dP0, std::size_t n_sectors, double q_max)
{
    require(dP0 > 0.0, Errc::configuration, "dP0 must be positive");
    require(n_sectors >= kMinSectors && n_sectors % 2 == 1, Errc::configuration,
            "n_sectors must be an odd integer >= 17");
    ClockSpec c;
    c.kind = ClockKind::continuous;
    c.dP0 = dP0;
    c.n_sectors = n_sectors;
    c.q_max = q_max;
    require(q_max >= 5.0 * c.dQ0() * (1.0 - 1e-12), Errc::configuration,
            "q_max must cover five Q spreads, 5/(2 dP0) = " + std::to_string(5.0 * c.dQ0()));
    return c;
}

/// Continuous clock whose pointer lattice spans at least `window` (time units),
/// with q_max = qmax_factor * dQ0.
inline ClockSpec continuous_clock_for_window(double dP0, double window, double qmax_factor = 8.0)
{
    require(dP0 > 0.0 && window > 0.0, Errc::configuration, "clock window and dP0 must be positive");
    const double q_max = qmax_factor * 0.5 / dP0;
    auto n = static_cast<std::size_t>(std::ceil(window * q_max / std::numbers::pi)) + 1;
    n = std::max(n, kMinSectors);
    if (n % 2 == 0)
        ++n;
    return init_continuous_clock(dP0, n, q_max);
}

inline ClockSpec init_larmor_clock(double j, double omega)
{
    const double twice = 2.0 * j;
    require(j >= 0.5 && std::abs(twice - std::round(twice)) < 1e-12, Errc::configuration,
            "spin j must be a positive half-integer");
    require(omega > 0.0, Errc::configuration, "Larmor frequency must be positive");
    ClockSpec c;
    c.kind = ClockKind::larmor;
    c.two_j = static_cast<int>(std::round(twice));
    c.omega = omega;
    return c;
}

struct Sector {
    double q = 0.0;
    cplx weight{1.0, 0.0};
    WaveFunction state;
};

/// Position amplitudes at the end of the evolution, or (stationary route)
/// outgoing momentum amplitudes of the t -> infinity state on the same grid.
enum class Representation { position, outgoing_momentum };

struct JointState {
    ClockSpec clock;
    std::vector<Sector> sectors;
    Representation representation = Representation::position;

    /// Clock region (unit-height boxes) once the state has been evolved.
    std::optional<PotentialProfile> region;
    /// Largest weighted region probability left in any sector after evolution;
    /// zero for the outgoing representation.
    double residual_region_probability = 0.0;
    /// Set when a sector had not finished its transit.
    std::optional<std::string> warning;

    bool transit_complete() const { return residual_region_probability < kTransitResidual; }

    /// sum_q |w_q|^2 <psi_q|psi_q>
    double total_probability() const
    {
        double sum = 0.0;
        for (const auto& s : sectors)
            sum += std::norm(s.weight) * s.state.norm();
        return sum;
    }
};

/// Product state: the particle in every sector, weighted by the clock amplitudes.
inline JointState make_joint(const ClockSpec& clock, const WaveFunction& particle)
{
    JointState joint;
    joint.clock = clock;
    const auto q = clock.q_values();
    const auto w = clock.initial_weights();
    joint.sectors.reserve(q.size());
    for (std::size_t s = 0; s < q.size(); ++s)
        joint.sectors.push_back({q[s], w[s], particle});
    return joint;
}

struct EvolveOptions {
    SectorMethod method = SectorMethod::split_operator;
    unsigned workers = 1;
};

/// Evolves every sector under the potential q * region(x). The region must be
/// made of unit-height boxes; the coupling strength lives in q. Sector weights
/// are untouched.
inline JointState evolve_joint(JointState joint, const PotentialProfile& region, double t_total, double dt,
                               double mass, const EvolveOptions& options = {})
{
    require(!region.boxes.empty(), Errc::configuration, "clock region is empty");
    for (const auto& b : region.boxes)
        require(b.height == 1.0, Errc::configuration, "clock region boxes must have unit height");

    require(joint.representation == Representation::position, Errc::configuration,
            "joint state has already been scattered");
    std::vector<double> residual(joint.sectors.size(), 0.0);
    const bool stationary = options.method == SectorMethod::stationary;
    parallel_for(joint.sectors.size(), options.workers, [&](std::size_t s) {
        Sector& sector = joint.sectors[s];
        const PotentialProfile v = region.scaled(sector.q);
        if (stationary) {
            sector.state.amplitudes = scatter_outgoing_momentum(sector.state, v, mass);
            return;
        }
        sector.state = evolve(std::move(sector.state), v, t_total, dt, mass);
        double inside = 0.0;
        for (const auto& b : region.boxes)
            inside += region_probability(sector.state, b.x1, b.x2);
        residual[s] = std::norm(sector.weight) * inside;
    });
    joint.region = region;
    if (stationary)
        joint.representation = Representation::outgoing_momentum;
    joint.residual_region_probability = *std::max_element(residual.begin(), residual.end());
    if (!joint.transit_complete())
        joint.warning = "incomplete transit: residual region probability " +
                        std::to_string(joint.residual_region_probability);
    return joint;
}

/// Grid index j belongs to the transmitted part: x_j beyond the region, or a
/// right-moving outgoing component.
inline bool is_transmitted(const JointState& joint, std::size_t j)
{
    const SpatialGrid& grid = joint.sectors.front().state.grid;
    if (joint.representation == Representation::outgoing_momentum)
        return grid.k(j) > 0.0;
    return grid.x(j) > joint.region->right();
}

enum class PointerOrientation {
    forward,  ///< reading P with sector phases exp(-i q P)
    reversed, ///< reading P with sector phases exp(+i q P)
};

struct PointerOptions {
    /// Lower edge of the reading window; defaults to -min(8 dP0 + period/25, period/2).
    std::optional<double> window_start;
    /// Lattice points per sector (rounded up to a power of two overall).
    std::size_t oversample = 8;
    /// Restrict the particle marginal to the transmitted part.
    bool transmitted_only = false;
    PointerOrientation orientation = PointerOrientation::forward;
};

struct PointerDistribution {
    std::vector<double> p_values;
    std::vector<double> probabilities;
    /// Probability captured before renormalization (1 unless restricted in x).
    double captured = 1.0;
    /// Probability within the outer 2% of the window at either end; large
    /// values mean the pointer spread exceeds the lattice period.
    double edge_mass = 0.0;
    PointerOptions options;

    double mean() const
    {
        double m = 0.0;
        for (std::size_t k = 0; k < p_values.size(); ++k)
            m += p_values[k] * probabilities[k];
        return m;
    }

    double spread() const
    {
        const double m = mean();
        double v = 0.0;
        for (std::size_t k = 0; k < p_values.size(); ++k)
            v += (p_values[k] - m) * (p_values[k] - m) * probabilities[k];
        return std::sqrt(v);
    }
};

inline double default_window_start(const ClockSpec& clock)
{
    const double half = 0.5 * clock.pointer_period();
    if (clock.kind == ClockKind::larmor)
        return -half;
    // the 2% edge band used by edge_mass stays below -8 dP0
    return -std::min(8.0 * clock.dP0 + 0.04 * clock.pointer_period(), half);
}

/// Pointer marginal of the joint state. At each grid point the amplitude
/// sum_q c_q(x) exp(i q P) is evaluated on a zero-padded lattice covering one
/// period, |.|^2 is accumulated over x, and the result is normalized.
inline PointerDistribution pointer_distribution(const JointState& joint, const PointerOptions& options = {},
                                                unsigned workers = 1)
{
    require(!joint.sectors.empty(), Errc::configuration, "joint state has no sectors");
    const std::size_t n_sectors = joint.sectors.size();
    const SpatialGrid& grid = joint.sectors.front().state.grid;
    const double dq = joint.clock.q_spacing();
    const double period = 2.0 * std::numbers::pi / dq;
    std::size_t lattice = 1;
    while (lattice < options.oversample * n_sectors)
        lattice <<= 1;
    const double start = options.window_start.value_or(default_window_start(joint.clock));
    const double sign = options.orientation == PointerOrientation::forward ? 1.0 : -1.0;

    // sum_s c_s exp(i sign q_s P_k) = exp(i sign q_0 P_k) * sum_s [c_s exp(i sign s dq P_lo)] exp(+-2 pi i s k / M)
    std::vector<cplx> twiddle(n_sectors);
    for (std::size_t s = 0; s < n_sectors; ++s)
        twiddle[s] = joint.sectors[s].weight * std::polar(1.0, sign * static_cast<double>(s) * dq * start);

    require(!options.transmitted_only || joint.region.has_value(), Errc::configuration,
            "restricting to the transmitted part needs an evolved joint state");
    std::vector<std::size_t> points;
    for (std::size_t j = 0; j < grid.n_points; ++j)
        if (!options.transmitted_only || is_transmitted(joint, j))
            points.push_back(j);

    const std::size_t n_chunks = std::min<std::size_t>(64, std::max<std::size_t>(1, points.size()));
    std::vector<std::vector<double>> partial(n_chunks);
    parallel_for(n_chunks, workers, [&](std::size_t c) {
        std::vector<double> acc(lattice, 0.0);
        std::vector<cplx> buffer(lattice);
        const std::size_t lo = c * points.size() / n_chunks;
        const std::size_t hi = (c + 1) * points.size() / n_chunks;
        for (std::size_t i = lo; i < hi; ++i) {
            const std::size_t j = points[i];
            double local = 0.0;
            std::fill(buffer.begin(), buffer.end(), cplx{0.0, 0.0});
            for (std::size_t s = 0; s < n_sectors; ++s) {
                buffer[s] = twiddle[s] * joint.sectors[s].state.amplitudes[j];
                local += std::norm(buffer[s]);
            }
            if (local < 1e-300)
                continue;
            if (sign > 0.0)
                fft_backward(buffer);
            else
                fft_forward(buffer);
            for (std::size_t k = 0; k < lattice; ++k)
                acc[k] += std::norm(buffer[k]);
        }
        partial[c] = std::move(acc);
    });

    PointerDistribution dist;
    dist.options = options;
    dist.options.window_start = start;
    dist.p_values.resize(lattice);
    dist.probabilities.assign(lattice, 0.0);
    for (std::size_t k = 0; k < lattice; ++k)
        dist.p_values[k] = start + static_cast<double>(k) * period / static_cast<double>(lattice);
    const double scale = grid.dx() / static_cast<double>(lattice);
    for (const auto& acc : partial)
        for (std::size_t k = 0; k < lattice; ++k)
            dist.probabilities[k] += acc[k] * scale;

    double total = 0.0;
    for (double p : dist.probabilities)
        total += p;
    dist.captured = total;
    if (total > 0.0)
        for (auto& p : dist.probabilities)
            p /= total;
    const std::size_t edge = std::max<std::size_t>(1, lattice / 50);
    for (std::size_t k = 0; k < edge; ++k)
        dist.edge_mass += dist.probabilities[k] + dist.probabilities[lattice - 1 - k];
    return dist;
}

struct ClockReadout {
    double mean_T = 0.0;
    double spread_T = 0.0;
    double transmitted_fraction = 0.0;
    bool conditioned = false;
};

/// sum_q |w_q|^2 * (probability in the transmitted part)
inline double transmitted_fraction(const JointState& joint)
{
    require(joint.region.has_value(), Errc::configuration, "joint state has not been evolved through a region");
    const SpatialGrid& grid = joint.sectors.front().state.grid;
    double sum = 0.0;
    for (const auto& s : joint.sectors) {
        double p = 0.0;
        for (std::size_t j = 0; j < grid.n_points; ++j)
            if (is_transmitted(joint, j))
                p += s.state.density(j);
        sum += std::norm(s.weight) * p * grid.dx();
    }
    return sum;
}

inline constexpr double kMinTransmitted = 1e-14;

/// Mean and spread of the pointer reading. When conditioned, only the part of
/// the particle found beyond the region contributes.
inline ClockReadout clock_readout(const PointerDistribution& dist, bool condition_on_transmission,
                                  const JointState& joint, unsigned workers = 1)
{
    ClockReadout r;
    r.conditioned = condition_on_transmission;
    r.transmitted_fraction = joint.region ? transmitted_fraction(joint) : 1.0;
    if (!condition_on_transmission) {
        r.mean_T = dist.mean();
        r.spread_T = dist.spread();
        return r;
    }
    require(joint.region.has_value(), Errc::configuration, "conditioning needs an evolved joint state");
    require(r.transmitted_fraction > kMinTransmitted, Errc::no_transmission,
            "no probability transmitted past the clock region");
    PointerOptions opts = dist.options;
    opts.transmitted_only = true;
    const auto restricted = pointer_distribution(joint, opts, workers);
    r.mean_T = restricted.mean();
    r.spread_T = restricted.spread();
    return r;
}

/// Momentum inside the region for a classically allowed crossing, sqrt(p^2 - 2 m q).
inline double disturbed_momentum(double p, double q, double mass)
{
    const double inner = p * p - 2.0 * mass * q;
    require(inner >= 0.0, Errc::classically_forbidden,
            "p^2 < 2 m q: the clock coupling reflects the particle");
    return std::sqrt(inner);
}

/// A single traversal-time clock experiment.
struct TraversalSetup {
    SpatialGrid grid;
    double x0 = 0.0;
    double p0 = 0.0;
    double sigma_x = 1.0;
    double mass = 1.0;
    PotentialProfile region;
    double dt = 1e-3;
    double t_total = 1.0;
    SectorMethod method = SectorMethod::split_operator;
    /// q_max in units of dQ0 when the sector count is chosen automatically.
    double qmax_factor = 8.0;
    /// Pointer window length; defaults to 8 m L / p0 + 16 dP0.
    std::optional<double> window;
    bool condition_on_transmission = false;
    unsigned workers = 1;

    double kinetic_energy() const { return p0 * p0 / (2.0 * mass); }
    double classical_time() const { return mass * region.total_length() / p0; }
    double default_window(double dP0) const { return window.value_or(8.0 * classical_time() + 16.0 * dP0); }
};

struct ClockRun {
    JointState joint;
    PointerDistribution distribution;
    ClockReadout readout;
};

inline ClockRun run_clock(const TraversalSetup& setup, const ClockSpec& clock)
{
    const WaveFunction particle = init_gaussian(setup.grid, setup.x0, setup.p0, setup.sigma_x);
    ClockRun run;
    run.joint = evolve_joint(make_joint(clock, particle), setup.region, setup.t_total, setup.dt, setup.mass,
                             {setup.method, setup.workers});
    run.distribution = pointer_distribution(run.joint, {}, setup.workers);
    run.readout = clock_readout(run.distribution, setup.condition_on_transmission, run.joint, setup.workers);
    return run;
}

struct AccuracyRow {
    double dP0 = 0.0;
    std::size_t n_sectors = 0;
    ClockReadout readout;
    double bias = 0.0;
    double total_error = 0.0;
    /// total_error * E_p, compared against the order-unity bound
    double error_times_energy = 0.0;
    double edge_mass = 0.0;
    double residual_region_probability = 0.0;
};

/// Runs the clock for each initial pointer spread and scores the readout
/// against the classical traversal time m L / p0:
/// total_error = sqrt(spread_T^2 + (mean_T - m L / p0)^2).
inline std::vector<AccuracyRow> accuracy_sweep(const TraversalSetup& setup, std::span<const double> dP0_values)
{
    require(!dP0_values.empty(), Errc::configuration, "accuracy sweep needs at least one dP0 value");
    for (std::size_t i = 0; i < dP0_values.size(); ++i) {
        require(dP0_values[i] > 0.0, Errc::configuration, "dP0 values must be positive");
        require(i == 0 || dP0_values[i] < dP0_values[i - 1], Errc::configuration,
                "dP0 values must be strictly descending");
    }
    std::vector<AccuracyRow> rows;
    for (double dP0 : dP0_values) {
        const auto clock = continuous_clock_for_window(dP0, setup.default_window(dP0), setup.qmax_factor);
        const auto run = run_clock(setup, clock);
        AccuracyRow row;
        row.dP0 = dP0;
        row.n_sectors = clock.n_sectors;
        row.readout = run.readout;
        row.bias = std::abs(run.readout.mean_T - setup.classical_time());
        row.total_error = std::hypot(run.readout.spread_T, row.bias);
        row.error_times_energy = row.total_error * setup.kinetic_energy();
        row.edge_mass = run.distribution.edge_mass;
        row.residual_region_probability = run.joint.residual_region_probability;
        rows.push_back(row);
    }
    return rows;
}

} // namespace ttclock
