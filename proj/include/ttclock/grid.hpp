#pragma once

// Periodic 1D grid, particle wave functions and their observables. Natural
// units throughout (hbar = 1).

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "ttclock/errors.hpp"
#include "ttclock/fft.hpp"

namespace ttclock {

/// Uniform periodic grid of n_points nodes x_j = x_min + j*dx, j in [0, n).
/// The node x_max itself is identified with x_min.
struct SpatialGrid {
    std::size_t n_points = 0;
    double x_min = 0.0;
    double x_max = 0.0;

    double length() const { return x_max - x_min; }
    double dx() const { return length() / static_cast<double>(n_points); }
    double x(std::size_t j) const { return x_min + static_cast<double>(j) * dx(); }
    double dk() const { return 2.0 * std::numbers::pi / length(); }
    double k_max() const { return std::numbers::pi / dx(); }

    /// Momentum of FFT bin j; the lattice spans [-pi/dx, pi/dx).
    double k(std::size_t j) const
    {
        const auto n = static_cast<std::ptrdiff_t>(n_points);
        auto i = static_cast<std::ptrdiff_t>(j);
        if (i >= n / 2)
            i -= n;
        return static_cast<double>(i) * dk();
    }

    bool contains(double x) const { return x >= x_min && x <= x_max; }

    bool operator==(const SpatialGrid&) const = default;
};

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline SpatialGrid make_grid(std::size_t n_points, double x_min, double x_max)
{
    require(n_points >= 16 && is_power_of_two(n_points), Errc::configuration,
            "grid size " + std::to_string(n_points) + " must be a power of two >= 16");
    require(std::isfinite(x_min) && std::isfinite(x_max) && x_max > x_min, Errc::configuration,
            "grid extent requires x_max > x_min");
    return SpatialGrid{n_points, x_min, x_max};
}

struct WaveFunction {
    SpatialGrid grid;
    std::vector<cplx> amplitudes;

    WaveFunction() = default;
    explicit WaveFunction(const SpatialGrid& g) : grid(g), amplitudes(g.n_points) {}
    WaveFunction(const SpatialGrid& g, std::vector<cplx> a) : grid(g), amplitudes(std::move(a)) {}

    double density(std::size_t j) const { return std::norm(amplitudes[j]); }

    double norm() const
    {
        double sum = 0.0;
        for (const auto& a : amplitudes)
            sum += std::norm(a);
        return sum * grid.dx();
    }

    void normalize()
    {
        const double scale = 1.0 / std::sqrt(norm());
        for (auto& a : amplitudes)
            a *= scale;
    }
};

/// <a|b> = sum conj(a_j) b_j dx.
inline cplx overlap(const WaveFunction& a, const WaveFunction& b)
{
    cplx sum = 0.0;
    for (std::size_t j = 0; j < a.amplitudes.size(); ++j)
        sum += std::conj(a.amplitudes[j]) * b.amplitudes[j];
    return sum * a.grid.dx();
}

/// Momentum-space probabilities |phi(k_j)|^2, normalized to sum to the state norm.
inline std::vector<double> momentum_probabilities(const WaveFunction& psi)
{
    std::vector<cplx> phi = psi.amplitudes;
    fft_forward(phi);
    std::vector<double> prob(phi.size());
    const double scale = psi.grid.dx() / static_cast<double>(phi.size());
    for (std::size_t j = 0; j < phi.size(); ++j)
        prob[j] = std::norm(phi[j]) * scale;
    return prob;
}

/// Largest density over the nodes adjacent to the periodic seam.
inline double boundary_density(const WaveFunction& psi, std::size_t width = 8)
{
    const std::size_t n = psi.amplitudes.size();
    width = std::min(width, n / 2);
    double worst = 0.0;
    for (std::size_t j = 0; j < width; ++j) {
        worst = std::max(worst, psi.density(j));
        worst = std::max(worst, psi.density(n - 1 - j));
    }
    return worst;
}

inline constexpr double kBoundaryDensityLimit = 1e-10;
inline constexpr double kNormTolerance = 1e-9;

/// Piecewise-constant potential built from non-overlapping boxes. A box equals
/// its height on the closed interval [x1, x2] and zero elsewhere; nodes are
/// sampled pointwise without smoothing.
struct PotentialProfile {
    struct Box {
        double x1 = 0.0;
        double x2 = 0.0;
        double height = 0.0;
        double length() const { return x2 - x1; }
    };

    std::vector<Box> boxes;

    static PotentialProfile zero() { return {}; }

    static PotentialProfile box(double x1, double x2, double height)
    {
        PotentialProfile v;
        return v.add_box(x1, x2, height);
    }

    PotentialProfile& add_box(double x1, double x2, double height)
    {
        require(x1 < x2, Errc::configuration, "box requires x1 < x2");
        for (const auto& b : boxes)
            require(x2 < b.x1 || x1 > b.x2, Errc::configuration, "boxes must not overlap");
        boxes.push_back({x1, x2, height});
        std::sort(boxes.begin(), boxes.end(), [](const Box& a, const Box& b) { return a.x1 < b.x1; });
        return *this;
    }

    bool is_zero() const
    {
        return std::all_of(boxes.begin(), boxes.end(), [](const Box& b) { return b.height == 0.0; });
    }

    /// Same geometry with every height multiplied by factor.
    PotentialProfile scaled(double factor) const
    {
        PotentialProfile v = *this;
        for (auto& b : v.boxes)
            b.height *= factor;
        return v;
    }

    double operator()(double x) const
    {
        for (const auto& b : boxes)
            if (x >= b.x1 && x <= b.x2)
                return b.height;
        return 0.0;
    }

    double max_abs() const
    {
        double m = 0.0;
        for (const auto& b : boxes)
            m = std::max(m, std::abs(b.height));
        return m;
    }

    double min_value() const
    {
        double m = 0.0;
        for (const auto& b : boxes)
            m = std::min(m, b.height);
        return m;
    }

    /// Leftmost and rightmost box edges.
    double left() const { return boxes.empty() ? 0.0 : boxes.front().x1; }
    double right() const { return boxes.empty() ? 0.0 : boxes.back().x2; }

    /// Summed box lengths (the clock region length L).
    double total_length() const
    {
        double l = 0.0;
        for (const auto& b : boxes)
            l += b.length();
        return l;
    }

    std::vector<double> sample(const SpatialGrid& grid) const
    {
        std::vector<double> v(grid.n_points);
        for (std::size_t j = 0; j < grid.n_points; ++j)
            v[j] = (*this)(grid.x(j));
        return v;
    }
};

/// Minimum-uncertainty Gaussian packet with <x> = x0, <p> = p0 and position spread sigma_x.
inline WaveFunction init_gaussian(const SpatialGrid& grid, double x0, double p0, double sigma_x)
{
    require(sigma_x > 3.0 * grid.dx(), Errc::resolution,
            "packet width " + std::to_string(sigma_x) + " must exceed 3 dx = " + std::to_string(3.0 * grid.dx()));
    const double sigma_p = 0.5 / sigma_x;
    require(std::abs(p0) + 8.0 * sigma_p < grid.k_max(), Errc::resolution,
            "packet momentum band exceeds the grid momentum range pi/dx");

    WaveFunction psi(grid);
    const double prefactor = std::pow(2.0 * std::numbers::pi * sigma_x * sigma_x, -0.25);
    for (std::size_t j = 0; j < grid.n_points; ++j) {
        const double u = grid.x(j) - x0;
        psi.amplitudes[j] = prefactor * std::exp(-u * u / (4.0 * sigma_x * sigma_x)) * std::polar(1.0, p0 * u);
    }
    require(boundary_density(psi) < 1e-12, Errc::resolution, "packet tails reach the grid boundary");
    psi.normalize();
    return psi;
}

struct ObservableReport {
    double norm = 0.0;
    double mean_x = 0.0;
    double mean_p = 0.0;
    double dx_spread = 0.0;
    double dp_spread = 0.0;
    double mean_E = 0.0;
    double mean_p2 = 0.0;
    double mean_p4 = 0.0;
    double dE = 0.0;
};

/// Kinematic moments of a state. Spreads are standard deviations; energies are
/// free-particle kinetic energies p^2/2m.
inline ObservableReport observables(const WaveFunction& psi, double mass)
{
    const SpatialGrid& g = psi.grid;
    ObservableReport r;
    r.norm = psi.norm();
    require(std::abs(r.norm - 1.0) < kNormTolerance, Errc::resolution,
            "observables require a normalized state (norm " + std::to_string(r.norm) + ")");

    double sx = 0.0, sx2 = 0.0;
    for (std::size_t j = 0; j < g.n_points; ++j) {
        const double w = psi.density(j) * g.dx();
        sx += w * g.x(j);
        sx2 += w * g.x(j) * g.x(j);
    }
    r.mean_x = sx / r.norm;
    r.dx_spread = std::sqrt(std::max(0.0, sx2 / r.norm - r.mean_x * r.mean_x));

    const auto prob = momentum_probabilities(psi);
    double total = 0.0, sp = 0.0, sp2 = 0.0, sp4 = 0.0;
    for (std::size_t j = 0; j < prob.size(); ++j) {
        const double k = g.k(j);
        const double k2 = k * k;
        total += prob[j];
        sp += prob[j] * k;
        sp2 += prob[j] * k2;
        sp4 += prob[j] * k2 * k2;
    }
    r.mean_p = sp / total;
    r.mean_p2 = sp2 / total;
    r.mean_p4 = sp4 / total;
    r.dp_spread = std::sqrt(std::max(0.0, r.mean_p2 - r.mean_p * r.mean_p));
    r.mean_E = r.mean_p2 / (2.0 * mass);
    r.dE = std::sqrt(std::max(0.0, r.mean_p4 / (4.0 * mass * mass) - r.mean_E * r.mean_E));
    return r;
}

/// Probability of presence in [x1, x2]: the expectation of the region projector.
inline double region_probability(const WaveFunction& psi, double x1, double x2)
{
    const SpatialGrid& g = psi.grid;
    require(x1 < x2, Errc::configuration, "region requires x1 < x2");
    require(g.contains(x1) && g.contains(x2), Errc::configuration, "region [x1, x2] lies outside the grid");
    double sum = 0.0;
    for (std::size_t j = 0; j < g.n_points; ++j) {
        const double x = g.x(j);
        if (x >= x1 && x <= x2)
            sum += psi.density(j);
    }
    return sum * g.dx();
}

/// Probability of presence strictly to the right of x.
inline double probability_right_of(const WaveFunction& psi, double x)
{
    double sum = 0.0;
    for (std::size_t j = 0; j < psi.grid.n_points; ++j)
        if (psi.grid.x(j) > x)
            sum += psi.density(j);
    return sum * psi.grid.dx();
}

inline constexpr double kTransitResidual = 1e-6;

/// Trapezoidal time integral of a region-probability series sampled every dt,
/// starting at t = 0. The last sample must show the packet has left the region.
inline double dwell_time_expectation(std::span<const double> probabilities, double dt)
{
    require(dt > 0.0, Errc::configuration, "dwell time requires dt > 0");
    require(probabilities.size() >= 2, Errc::incomplete_transit, "dwell series needs at least two samples");
    require(probabilities.back() < kTransitResidual, Errc::incomplete_transit,
            "region probability at the end of the series is " + std::to_string(probabilities.back()));
    double sum = 0.5 * (probabilities.front() + probabilities.back());
    for (std::size_t i = 1; i + 1 < probabilities.size(); ++i)
        sum += probabilities[i];
    return sum * dt;
}

} // namespace ttclock
