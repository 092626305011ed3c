#pragma once

// Statistics of a traversal-time detector with intrinsic inaccuracy. Each run
// reads T = m L / p + eps with eps drawn from the detector noise g, and the
// momentum inferred from the reading is p_M = m L p / (m L + p eps). The
// moments of p_M, the ensemble momentum spread and the position-momentum
// product bound the admissible detector inaccuracy from below.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <limits>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "ttclock/errors.hpp"
#include "ttclock/parallel.hpp"

namespace ttclock::ensemble {

/// Gaussian momentum distribution f(p), truncated below at p_min > 0.
struct MomentumDistribution {
    double mean_p = 10.0;
    double sigma_p = 0.1;
    double p_min = 0.0;

    /// Raw moments of the untruncated Gaussian.
    double moment1() const { return mean_p; }
    double moment2() const { return mean_p * mean_p + sigma_p * sigma_p; }
    double moment3() const { return mean_p * mean_p * mean_p + 3.0 * mean_p * sigma_p * sigma_p; }
    double moment4() const
    {
        const double m2 = mean_p * mean_p, s2 = sigma_p * sigma_p;
        return m2 * m2 + 6.0 * m2 * s2 + 3.0 * s2 * s2;
    }
    /// <p^4> - <p^2>^2 expanded so no large terms cancel.
    double moment4_excess() const
    {
        const double s2 = sigma_p * sigma_p;
        return 4.0 * mean_p * mean_p * s2 + 2.0 * s2 * s2;
    }
};

inline MomentumDistribution gaussian_momentum(double mean_p, double sigma_p)
{
    require(sigma_p > 0.0, Errc::configuration, "sigma_p must be positive");
    const double p_min = mean_p - 6.0 * sigma_p;
    require(p_min > 0.0, Errc::configuration, "momentum ensemble needs mean_p - 6 sigma_p > 0");
    return {mean_p, sigma_p, p_min};
}

/// Zero-mean Gaussian detector noise g(eps) with spread sigma_eps (the device
/// inaccuracy, equal to the initial pointer spread).
struct NoiseDistribution {
    double sigma_eps = 1e-3;
};

inline NoiseDistribution gaussian_noise(double sigma_eps)
{
    require(sigma_eps > 0.0, Errc::configuration, "sigma_eps must be positive");
    return {sigma_eps};
}

struct EnsembleSpec {
    MomentumDistribution f;
    NoiseDistribution g;
    double mass = 1.0;
    double L = 10.0;

    double mL() const { return mass * L; }

    /// Largest |eps| * p over +-6 sigma stays below 0.1 m L.
    bool small_eps() const { return 6.0 * g.sigma_eps * (f.mean_p + 6.0 * f.sigma_p) <= 0.1 * mL(); }

    /// Expansion parameter p_bar * sigma_eps / (m L).
    double expansion_parameter() const { return f.mean_p * g.sigma_eps / mL(); }
};

inline EnsembleSpec make_ensemble(double mean_p, double sigma_p, double sigma_eps, double mass, double L)
{
    require(mass > 0.0 && L > 0.0, Errc::configuration, "ensemble needs mass > 0 and L > 0");
    return {gaussian_momentum(mean_p, sigma_p), gaussian_noise(sigma_eps), mass, L};
}

/// m L p / (m L + p eps): momentum inferred from a reading T = m L / p + eps.
inline double measured_momentum(double p, double eps, double mass, double L)
{
    const double denominator = mass * L + p * eps;
    require(denominator > 0.0, Errc::regime_violation, "m L + p eps <= 0: the reading precedes zero time");
    return mass * L * p / denominator;
}

/// Classical traversal time m L / p.
inline double classical_traversal_time(double p, double mass, double L)
{
    require(p > 0.0, Errc::undefined_time, "traversal time is undefined for p <= 0");
    return mass * L / p;
}

namespace detail {

inline std::string short_number(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

} // namespace detail

struct MomentResult {
    double value = 0.0;
    double error_estimate = 0.0;
    bool small_eps = true;
};

/// <p_M^alpha> = int int (m L p / (m L + p eps))^alpha f(p) g(eps) dp deps by
/// nested adaptive Gauss-Kronrod quadrature over the truncated f and g on
/// +-12 sigma_eps.
inline MomentResult moment_exact(int alpha, const EnsembleSpec& spec, double tolerance = 1e-10)
{
    require(alpha >= 1, Errc::unsupported_order, "moment order must be a positive integer");
    using Quadrature = boost::math::quadrature::gauss_kronrod<double, 31>;
    const double mu = spec.f.mean_p, sp = spec.f.sigma_p, se = spec.g.sigma_eps, mL = spec.mL();
    const double u_lo = (spec.f.p_min - mu) / sp;
    const double u_hi = 12.0;
    const double z_lim = std::min(12.0, 0.999 * mL / (se * (mu + u_hi * sp)));
    const double inv_sqrt_2pi = 1.0 / std::sqrt(2.0 * std::numbers::pi);
    auto normal = [&](double z) { return inv_sqrt_2pi * std::exp(-0.5 * z * z); };
    // mass of the truncated domains, used to renormalize
    const double f_mass = 0.5 * std::erfc(u_lo / std::numbers::sqrt2) - 0.5 * std::erfc(u_hi / std::numbers::sqrt2);
    const double g_mass = std::erf(z_lim / std::numbers::sqrt2);

    const double scale = std::pow(mu + sp, alpha);
    const double relative = tolerance / scale;
    double inner_error = 0.0;
    auto inner = [&](double u) {
        const double p = mu + sp * u;
        auto integrand = [&](double z) {
            const double pm = mL * p / (mL + p * se * z);
            return std::pow(pm, alpha) * normal(z);
        };
        double err = 0.0;
        const double v = Quadrature::integrate(integrand, -z_lim, z_lim, 15, relative * 1e-2, &err);
        inner_error = std::max(inner_error, err);
        return v * normal(u);
    };
    double outer_error = 0.0;
    const double raw = Quadrature::integrate(inner, u_lo, u_hi, 15, relative * 1e-1, &outer_error);
    MomentResult r;
    r.value = raw / (f_mass * g_mass);
    // Boost reports absolute estimates; the inner weights integrate to at most one.
    r.error_estimate = outer_error / (f_mass * g_mass) + inner_error;
    r.small_eps = spec.small_eps();
    require(std::isfinite(r.value), Errc::quadrature, "moment quadrature produced a non-finite value");
    require(r.error_estimate <= std::max(tolerance, 1e-14 * std::abs(r.value)), Errc::quadrature,
            "moment quadrature did not converge (error estimate " + detail::short_number(r.error_estimate) + ")");
    return r;
}

/// First- and second-order moments from the small-eps expansion
/// (p - eps p^2 / m L)^alpha: <p_M> = <p> and <p_M^2> = <p^2> + <p^4><eps^2>/(m L)^2.
inline double moment_approx(int alpha, const EnsembleSpec& spec)
{
    require(alpha == 1 || alpha == 2, Errc::unsupported_order, "approximate moments exist for alpha in {1, 2}");
    if (alpha == 1)
        return spec.f.moment1();
    const double mL = spec.mL();
    const double eps2 = spec.g.sigma_eps * spec.g.sigma_eps;
    return spec.f.moment2() + spec.f.moment4() * eps2 / (mL * mL);
}

/// Ensemble spread of the measured momentum: <p^4> dT^2 / (m L)^2 + dp^2.
inline double delta_p_squared(const EnsembleSpec& spec)
{
    const double mL = spec.mL();
    const double dT = spec.g.sigma_eps;
    return spec.f.moment4() * dT * dT / (mL * mL) + spec.f.sigma_p * spec.f.sigma_p;
}

struct EnergyStats {
    double mean_E = 0.0;
    double dE = 0.0;
};

/// <E> = <p^2>/2m and dE^2 = <p^4>/(4 m^2) - <E>^2.
inline EnergyStats energy_stats(const EnsembleSpec& spec)
{
    EnergyStats e;
    e.mean_E = spec.f.moment2() / (2.0 * spec.mass);
    // <p^4>/4m^2 - (<p^2>/2m)^2
    const double var = spec.f.moment4_excess() / (4.0 * spec.mass * spec.mass);
    require(var >= -1e-12, Errc::quadrature, "negative energy variance " + std::to_string(var));
    e.dE = std::sqrt(std::max(0.0, var));
    return e;
}

/// (dx dp)^2 with dx = L/2: delta_T^2 (<E>^2 + dE^2) + L^2 dp^2 / 4.
inline double product_squared(double delta_T, double mean_E, double dE, double L, double dp)
{
    return delta_T * delta_T * (mean_E * mean_E + dE * dE) + 0.25 * L * L * dp * dp;
}

/// 1 / sqrt(<E>^2 + dE^2)
inline double bound_general(double mean_E, double dE) { return 1.0 / std::sqrt(mean_E * mean_E + dE * dE); }

/// Smallest delta_T keeping the product at 1: bound_general * sqrt(1 - L^2 dp^2 / 4).
inline double violation_threshold(double mean_E, double dE, double L, double dp)
{
    const double slack = 1.0 - 0.25 * L * L * dp * dp;
    return slack > 0.0 ? bound_general(mean_E, dE) * std::sqrt(slack) : 0.0;
}

struct BoundReport {
    double mean_pM = 0.0;
    double mean_pM2 = 0.0;
    double delta_p2 = 0.0;
    double mean_E = 0.0;
    double dE = 0.0;
    double product_squared = 0.0;
    double bound_general = 0.0;
    double bound_simple = 0.0;
    bool small_eps = true;
};

/// Uncertainty product of the ensemble measured with inaccuracy sigma_eps,
/// and the inaccuracy bounds implied by requiring the product to stay >= 1.
inline BoundReport uncertainty_product(const EnsembleSpec& spec)
{
    BoundReport r;
    r.small_eps = spec.small_eps();
    r.mean_pM = moment_approx(1, spec);
    r.mean_pM2 = moment_approx(2, spec);
    r.delta_p2 = delta_p_squared(spec);
    const auto e = energy_stats(spec);
    r.mean_E = e.mean_E;
    r.dE = e.dE;
    r.product_squared = product_squared(spec.g.sigma_eps, e.mean_E, e.dE, spec.L, spec.f.sigma_p);
    r.bound_general = bound_general(e.mean_E, e.dE);
    r.bound_simple = 1.0 / e.mean_E;
    return r;
}

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Uniform in (0, 1) from a hashed (seed, counter, lane) triple.
inline double counter_uniform(std::uint64_t seed, std::uint64_t counter, std::uint64_t lane)
{
    const std::uint64_t h = splitmix64(splitmix64(seed ^ splitmix64(counter)) + lane);
    return (static_cast<double>(h >> 11) + 0.5) * 0x1.0p-53;
}

/// Two independent standard normals for sample `counter` (Box-Muller).
inline std::pair<double, double> counter_normals(std::uint64_t seed, std::uint64_t counter, std::uint64_t round)
{
    const double u1 = counter_uniform(seed, counter, 2 * round);
    const double u2 = counter_uniform(seed, counter, 2 * round + 1);
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    return {radius * std::cos(angle), radius * std::sin(angle)};
}

} // namespace detail

struct MonteCarloMoments {
    double mean_pM = 0.0;
    double mean_pM2 = 0.0;
    double se_pM = 0.0;
    double se_pM2 = 0.0;
    std::size_t n_samples = 0;
    std::size_t violations = 0;
};

inline constexpr std::size_t kMonteCarloChunk = 1 << 16;

/// Sample moments of p_M from n_samples draws (p, eps). Sample i uses its own
/// counter-based random stream, and partial sums are combined in chunk order,
/// so the output depends only on (spec, n_samples, seed).
inline MonteCarloMoments monte_carlo_moments(const EnsembleSpec& spec, std::size_t n_samples, std::uint64_t seed,
                                             unsigned workers = 1)
{
    require(n_samples >= 10000, Errc::configuration, "Monte Carlo needs at least 1e4 samples");
    const std::size_t n_chunks = (n_samples + kMonteCarloChunk - 1) / kMonteCarloChunk;
    struct Partial {
        double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
        std::size_t count = 0, violations = 0;
    };
    std::vector<Partial> partial(n_chunks);
    const double mL = spec.mL();
    parallel_for(n_chunks, workers, [&](std::size_t c) {
        Partial acc;
        const std::size_t lo = c * kMonteCarloChunk;
        const std::size_t hi = std::min(n_samples, lo + kMonteCarloChunk);
        for (std::size_t i = lo; i < hi; ++i) {
            double p = 0.0, eps = 0.0;
            for (std::uint64_t round = 0;; ++round) {
                const auto [z1, z2] = detail::counter_normals(seed, i, round);
                p = spec.f.mean_p + spec.f.sigma_p * z1;
                eps = spec.g.sigma_eps * z2;
                if (p >= spec.f.p_min)
                    break;
            }
            const double denominator = mL + p * eps;
            if (denominator <= 0.0) {
                ++acc.violations;
                continue;
            }
            const double pm = mL * p / denominator;
            acc.s1 += pm;
            acc.s2 += pm * pm;
            acc.s3 += pm * pm * pm;
            acc.s4 += pm * pm * pm * pm;
            ++acc.count;
        }
        partial[c] = acc;
    });
    Partial total;
    for (const auto& p : partial) {
        total.s1 += p.s1;
        total.s2 += p.s2;
        total.s3 += p.s3;
        total.s4 += p.s4;
        total.count += p.count;
        total.violations += p.violations;
    }
    require(static_cast<double>(total.violations) <= 1e-3 * static_cast<double>(n_samples),
            Errc::regime_violation,
            std::to_string(total.violations) + " samples violate m L + p eps > 0 (limit 0.1%)");
    MonteCarloMoments r;
    const auto n = static_cast<double>(total.count);
    r.n_samples = total.count;
    r.violations = total.violations;
    r.mean_pM = total.s1 / n;
    r.mean_pM2 = total.s2 / n;
    const double var1 = std::max(0.0, total.s2 / n - r.mean_pM * r.mean_pM);
    const double var2 = std::max(0.0, total.s4 / n - r.mean_pM2 * r.mean_pM2);
    r.se_pM = std::sqrt(var1 / n);
    r.se_pM2 = std::sqrt(var2 / n);
    return r;
}

struct ViolationRow {
    double delta_T = 0.0;
    double product = 0.0;
    bool flagged = false;         ///< product < 1
    bool below_threshold = false; ///< delta_T < violation_threshold
};

struct ViolationTable {
    double L = 0.0;
    double mean_E = 0.0;
    double dE = 0.0;
    double bound_general = 0.0;
    double threshold_closed_form = 0.0;
    double threshold_root = 0.0;
    bool flags_match = true;
    std::vector<ViolationRow> rows;
};

/// Evaluates dx dp over a list of detector inaccuracies for the ensemble with
/// the region length chosen so that L dp = L_dp. Rows with a product below 1
/// are would-be violations of the uncertainty relation; the table also locates
/// the threshold by bisection and checks it against the closed form.
inline ViolationTable violation_search(const MomentumDistribution& f, double mass, double L_dp,
                                       std::span<const double> delta_T_values)
{
    require(L_dp > 0.0 && L_dp < 2.0, Errc::configuration, "L dp must lie in (0, 2)");
    EnsembleSpec spec{f, NoiseDistribution{1.0}, mass, L_dp / f.sigma_p};
    const auto e = energy_stats(spec);
    ViolationTable table;
    table.L = spec.L;
    table.mean_E = e.mean_E;
    table.dE = e.dE;
    table.bound_general = bound_general(e.mean_E, e.dE);
    table.threshold_closed_form = violation_threshold(e.mean_E, e.dE, spec.L, f.sigma_p);

    auto product = [&](double dT) { return std::sqrt(product_squared(dT, e.mean_E, e.dE, spec.L, f.sigma_p)); };
    double lo = 0.0, hi = table.bound_general;
    for (int it = 0; it < 200 && hi - lo > 0.0; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid == lo || mid == hi)
            break;
        (product(mid) < 1.0 ? lo : hi) = mid;
    }
    table.threshold_root = hi;

    for (double dT : delta_T_values) {
        require(dT >= 0.0, Errc::configuration, "delta_T values must be non-negative");
        ViolationRow row;
        row.delta_T = dT;
        row.product = product(dT);
        row.flagged = row.product < 1.0;
        row.below_threshold = dT < table.threshold_closed_form;
        const bool at_edge = std::abs(dT - table.threshold_closed_form) <= 1e-9 * table.threshold_closed_form;
        table.flags_match = table.flags_match && (row.flagged == row.below_threshold || at_edge);
        table.rows.push_back(row);
    }
    return table;
}

} // namespace ttclock::ensemble
