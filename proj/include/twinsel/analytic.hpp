#pragma once

#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <utility>
#include <vector>

#include "twinsel/distribution.hpp"
#include "twinsel/model.hpp"

// Closed-form photon statistics of the conditionally prepared signal state.
//
// The joint fluctuation density of (signal eps, idler x) is a centered
// bivariate Gaussian with Var(eps) = Var(x) = n' F' and correlation beta, so
// it factorizes both ways:
//
//   P(eps, x) = N(x; 0, n'F') N(eps; beta x, n'V_c)
//             = N(eps; 0, n'F') N(x; beta eps, n'V_c)
//
// Every operation below is an exact consequence of this joint density.

namespace twinsel {

constexpr int kDefaultGridPoints = 4001;   // uniform grid, odd for Simpson
constexpr double kGridHalfWidthSigmas = 8.0;

/// Moments of one (normalized) reduced state plus its preparation
/// probability.  fano is the variance in units of n_bar' (shot-noise units);
/// kurtosis is non-excess (Gaussian = 3).
struct ReducedStateReport {
    double mean_shift;  ///< mean of eps (photons)
    double fano;        ///< variance / n_bar'
    double skewness;    ///< third standardized moment
    double kurtosis;    ///< fourth standardized moment
    double prep_prob;   ///< fraction of events selected
};

namespace detail {

constexpr double kPi = 3.141592653589793238462643383279502884;

inline double gauss_pdf(double x, double var) {
    return std::exp(-x * x / (2.0 * var)) / std::sqrt(2.0 * kPi * var);
}

// 0.5*(erf(b) - erf(a)) for a <= b, evaluated through erfc when both
// arguments share a sign: the erf values saturate near +-1 there and their
// difference loses all significance, while erfc keeps the leading digits.
inline double half_erf_diff(double a, double b) {
    if (a >= 0.0) return 0.5 * (std::erfc(a) - std::erfc(b));
    if (b <= 0.0) return 0.5 * (std::erfc(-b) - std::erfc(-a));
    return 0.5 * (std::erf(b) - std::erf(a));
}

inline double require_bright(const DerivedParams& d) {
    if (!(d.n_bar_prime > 0.0))
        throw std::invalid_argument("analytic: n_bar_prime is zero (loss_r = 1); "
                                    "no photon distribution exists after full loss");
    return d.n_bar_prime;
}

// Uniform grid [lo, hi] with an odd number of points.
inline std::vector<double> make_grid(double lo, double hi, int points) {
    if (points < 3) points = 3;
    if (points % 2 == 0) ++points;
    std::vector<double> g(static_cast<std::size_t>(points));
    const double h = (hi - lo) / static_cast<double>(points - 1);
    for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = lo + h * i;
    g.back() = hi;
    return g;
}

inline PhotonDistribution tabulate(std::vector<double> grid, std::vector<double> density,
                                   double n_bar_prime) {
    PhotonDistribution d;
    d.grid = std::move(grid);
    d.density = std::move(density);
    d.support = PhotonDistribution::Support::continuous;
    d.n_bar_prime = n_bar_prime;
    d.mass = integrate_density(d);
    return d;
}

}  // namespace detail

/// Marginal photon distribution of one beam after the partition process:
/// Gaussian in eps with variance n' F'.
inline PhotonDistribution marginal_pdf(const TwinBeamModel& m, int points = kDefaultGridPoints) {
    const DerivedParams d = derive(m);
    const double np = detail::require_bright(d);
    const double var = np * d.fano_fprime;
    const double w = kGridHalfWidthSigmas * std::sqrt(var);
    auto grid = detail::make_grid(-w, w, points);
    std::vector<double> dens(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) dens[i] = detail::gauss_pdf(grid[i], var);
    return detail::tabulate(std::move(grid), std::move(dens), np);
}

/// State reduction by a single-value idler measurement at N = n_bar' + alpha.
/// The unnormalized density is
///
///   P(eps, alpha) = [N(alpha; 0, n'F')] * N(eps; beta alpha, n'V_c)
///
/// whose mass (the bracket) is the preparation probability factor.  The
/// normalized shape is Gaussian, so the report carries fano = V_c,
/// mean_shift = beta alpha, skewness 0, kurtosis 3 exactly.
inline std::pair<PhotonDistribution, ReducedStateReport> conditional_single_value(
    const TwinBeamModel& m, double alpha, int points = kDefaultGridPoints) {
    const DerivedParams d = derive(m);
    const double np = detail::require_bright(d);
    const double mass = detail::gauss_pdf(alpha, np * d.fano_fprime);
    const double mean = d.beta * alpha;
    const double cvar = np * d.cond_variance;

    ReducedStateReport rep{mean, d.cond_variance, 0.0, 3.0, mass};

    PhotonDistribution dist;
    if (cvar > 0.0) {
        const double w = kGridHalfWidthSigmas * std::sqrt(cvar);
        auto grid = detail::make_grid(mean - w, mean + w, points);
        std::vector<double> dens(grid.size());
        for (std::size_t i = 0; i < grid.size(); ++i)
            dens[i] = mass * detail::gauss_pdf(grid[i] - mean, cvar);
        dist = detail::tabulate(std::move(grid), std::move(dens), np);
        dist.mass = mass;  // exact first factor; quadrature agrees to grid tolerance
    } else {
        // Perfect correlation: the reduced state is a number state, a point
        // mass at eps = alpha.
        dist.grid = {mean};
        dist.density = {mass};
        dist.support = PhotonDistribution::Support::integer;
        dist.n_bar_prime = np;
        dist.mass = mass;
    }
    return {std::move(dist), rep};
}

/// Exact band-selected density at one point:
/// N(eps; 0, n'F') * 1/2 [erf((alpha + delta/2 - beta eps)/sqrt(2 n'V_c))
///                        - erf((alpha - delta/2 - beta eps)/sqrt(2 n'V_c))].
inline double band_density_exact(const DerivedParams& d, const SelectionBand& band, double eps) {
    const double np = d.n_bar_prime;
    const double cvar = np * d.cond_variance;
    const double s = std::sqrt(2.0 * cvar);
    double window;
    if (s > 0.0) {
        window = detail::half_erf_diff((band.lo() - d.beta * eps) / s,
                                       (band.hi() - d.beta * eps) / s);
    } else {
        // V_c = 0: the window degenerates to the indicator of the band.
        const double x = d.beta * eps;
        window = (x > band.lo() && x < band.hi()) ? 1.0
                 : (x == band.lo() || x == band.hi()) ? 0.5
                                                      : 0.0;
    }
    return detail::gauss_pdf(eps, np * d.fano_fprime) * window;
}

/// State reduction by a band selection of width delta around
/// N = n_bar' + alpha.  Exact erf form, tabulated; unnormalized, mass equals
/// the band preparation probability.
inline PhotonDistribution band_pdf_exact(const TwinBeamModel& m, const SelectionBand& band,
                                         int points = kDefaultGridPoints) {
    band.validate();
    if (band.delta == 0.0)
        throw std::invalid_argument(
            "band_pdf_exact: zero-width band is degenerate; use conditional_single_value");
    const DerivedParams d = derive(m);
    const double np = detail::require_bright(d);
    const double env_var = np * d.fano_fprime;
    const double cstd = std::sqrt(np * d.cond_variance);

    // The window transfers the band [lo, hi] to eps ~ [beta lo, beta hi]
    // smeared by the conditional width.  Clip where the envelope has fallen
    // 1e-9 below its maximum inside the window, never tighter than the
    // +-8 sigma core, so the discarded strip stays negligible relative to
    // the band mass even for far-tail bands.
    double glo = d.beta * band.lo() - kGridHalfWidthSigmas * cstd;
    double ghi = d.beta * band.hi() + kGridHalfWidthSigmas * cstd;
    const double env_w = kGridHalfWidthSigmas * std::sqrt(env_var);
    const double drop = 2.0 * env_var * std::log(1e9);
    if (ghi > env_w) {
        const double near = std::max(0.0, glo);  // envelope peak inside the window
        ghi = std::min(ghi, std::max(env_w, std::sqrt(near * near + drop)));
    }
    if (glo < -env_w) {
        const double near = std::min(0.0, ghi);
        glo = std::max(glo, std::min(-env_w, -std::sqrt(near * near + drop)));
    }

    auto grid = detail::make_grid(glo, ghi, points);
    std::vector<double> dens(grid.size());
    for (std::size_t i = 0; i < grid.size(); ++i) dens[i] = band_density_exact(d, band, grid[i]);
    return detail::tabulate(std::move(grid), std::move(dens), np);
}

/// Small-bandwidth expansion of the band-selected density in powers of
/// delta/sigma, through third order:
///
///   P(eps, band) = P(eps, alpha) * (delta + delta^3/(24 n'V_c)
///                                    * (-1 + (alpha - beta eps)^2 / (n'V_c)))
///
/// The leading term reproduces the single-value distribution scaled by the
/// bandwidth; at delta = 1 photon the two coincide.
inline PhotonDistribution band_pdf_expansion(const TwinBeamModel& m, const SelectionBand& band,
                                             int points = kDefaultGridPoints) {
    band.validate();
    const DerivedParams d = derive(m);
    const double np = detail::require_bright(d);
    if (band.delta > d.sigma)
        throw std::invalid_argument("band_pdf_expansion: delta exceeds sigma = sqrt(n_bar'); "
                                    "the expansion is not valid there, use band_pdf_exact");
    if (band.delta > 0.3 * d.sigma)
        std::fputs("band_pdf_expansion: warning: delta > 0.3 sigma, truncation error grows as "
                   "(delta/sigma)^2\n",
                   stderr);
    const double cvar = np * d.cond_variance;
    if (!(cvar > 0.0))
        throw std::invalid_argument("band_pdf_expansion: V_c = 0 has no continuous expansion; "
                                    "use band_pdf_exact");
    const double mass_factor = detail::gauss_pdf(band.alpha, np * d.fano_fprime);
    const double mean = d.beta * band.alpha;
    const double cstd = std::sqrt(cvar);
    const double w = kGridHalfWidthSigmas * cstd;

    auto grid = detail::make_grid(mean - w, mean + w, points);
    std::vector<double> dens(grid.size());
    const double d3 = band.delta * band.delta * band.delta;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        const double eps = grid[i];
        const double u = band.alpha - d.beta * eps;
        const double corr = band.delta + d3 / (24.0 * cvar) * (-1.0 + u * u / cvar);
        dens[i] = std::max(0.0, mass_factor * detail::gauss_pdf(eps - mean, cvar) * corr);
    }
    return detail::tabulate(std::move(grid), std::move(dens), np);
}

/// Normalize and compute mean, Fano (variance / n_bar'), skewness and
/// kurtosis by quadrature on the distribution's grid.
inline ReducedStateReport reduced_moments(const PhotonDistribution& dist) {
    if (!(dist.mass > 0.0))
        throw std::invalid_argument("reduced_moments: distribution has zero mass");
    const PhotonDistribution nd = normalize(dist);
    const std::size_t n = nd.size();

    std::vector<double> tmp(n);
    for (std::size_t i = 0; i < n; ++i) tmp[i] = nd.density[i] * nd.grid[i];
    const double mean = integrate(nd, tmp);

    double var, m3, m4;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = nd.grid[i] - mean;
        tmp[i] = nd.density[i] * c * c;
    }
    var = integrate(nd, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] *= (nd.grid[i] - mean);
    m3 = integrate(nd, tmp);
    for (std::size_t i = 0; i < n; ++i) tmp[i] *= (nd.grid[i] - mean);
    m4 = integrate(nd, tmp);

    ReducedStateReport rep{};
    rep.mean_shift = mean;
    rep.fano = var / nd.n_bar_prime;
    rep.skewness = var > 0.0 ? m3 / std::pow(var, 1.5) : 0.0;
    rep.kurtosis = var > 0.0 ? m4 / (var * var) : 3.0;
    rep.prep_prob = dist.mass;
    return rep;
}

/// Preparation probability of a band.  For delta <= sigma this is the
/// closed form (delta/sigma)/sqrt(2 pi F') exp(-(alpha/sigma)^2 / (2F'));
/// wider bands integrate the exact expression.
inline double prep_prob_band(const TwinBeamModel& m, const SelectionBand& band) {
    band.validate();
    const DerivedParams d = derive(m);
    detail::require_bright(d);
    if (band.delta == 0.0) return 0.0;
    if (band.delta <= d.sigma) {
        const double as = band.alpha / d.sigma;
        return (band.delta / d.sigma) / std::sqrt(2.0 * detail::kPi * d.fano_fprime) *
               std::exp(-as * as / (2.0 * d.fano_fprime));
    }
    return band_pdf_exact(m, band).mass;
}

/// Per-band reduced states plus the aggregate efficiency of a multi-band
/// selection.  Bands must be pairwise disjoint (touching edges allowed).
struct MultibandReport {
    std::vector<ReducedStateReport> bands;
    double aggregate_efficiency = 0.0;  ///< sum of per-band preparation probabilities
    double fano_spread = 0.0;           ///< max - min of per-band Fano
};

inline MultibandReport multiband_report(const TwinBeamModel& m,
                                        const std::vector<SelectionBand>& bands,
                                        int points = kDefaultGridPoints) {
    if (bands.empty()) throw std::invalid_argument("multiband_report: no bands");
    require_disjoint(bands);
    MultibandReport out;
    out.bands.reserve(bands.size());
    double fmin = 0.0, fmax = 0.0;
    for (std::size_t i = 0; i < bands.size(); ++i) {
        const auto dist = band_pdf_exact(m, bands[i], points);
        ReducedStateReport rep = reduced_moments(dist);
        out.aggregate_efficiency += rep.prep_prob;
        if (i == 0) {
            fmin = fmax = rep.fano;
        } else {
            fmin = std::min(fmin, rep.fano);
            fmax = std::max(fmax, rep.fano);
        }
        out.bands.push_back(rep);
    }
    out.fano_spread = fmax - fmin;
    return out;
}

}  // namespace twinsel
