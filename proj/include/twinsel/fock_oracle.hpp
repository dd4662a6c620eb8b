#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "twinsel/distribution.hpp"

// Exact finite sums in the Fock basis.  Everything here works on the
// diagonal photon-number coefficients only; photon-number observables of the
// partitioned state depend on nothing else.  All individual probabilities
// are formed in log space (lgamma-based binomials), so nothing overflows for
// photon numbers up to 1e6; accumulation uses pairwise summation with a
// fixed tree, independent of evaluation order.

namespace twinsel {

namespace detail {

// Pairwise (tree) summation: O(eps log n) worst-case relative error and a
// reproducible association order.
inline double pairwise_sum(const double* v, std::size_t n) {
    if (n <= 8) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const std::size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

// log of C(n, p) via lgamma lookups; `lg` holds lgamma(k+1) for k = 0..n.
inline double log_choose(const std::vector<double>& lg, std::int64_t n, std::int64_t p) {
    return lg[static_cast<std::size_t>(n)] - lg[static_cast<std::size_t>(p)] -
           lg[static_cast<std::size_t>(n - p)];
}

inline std::vector<double> lgamma_table(std::int64_t n_max) {
    std::vector<double> lg(static_cast<std::size_t>(n_max) + 1);
    for (std::int64_t k = 0; k <= n_max; ++k)
        lg[static_cast<std::size_t>(k)] = std::lgamma(static_cast<double>(k) + 1.0);
    return lg;
}

}  // namespace detail

/// Gaussian photon-number weights |c_n|^2 of the pre-loss twin-beam state,
/// tabulated in log space on a finite lattice and renormalized over it.
/// Cutoffs sit at n_bar +- 8 sqrt(F n_bar), clamped at 0, which bounds the
/// discarded tail below 1e-12 of the total.
struct FockLattice {
    std::int64_t n_min = 0;
    std::int64_t n_max = 0;
    std::vector<double> log_cn2;  ///< log |c_n|^2 for n in [n_min, n_max], sums to 1
    double n_bar = 0.0;           ///< build parameter, kept for reference
    double fano_f = 0.0;

    std::size_t size() const { return static_cast<std::size_t>(n_max - n_min + 1); }

    double weight(std::int64_t n) const {
        if (n < n_min || n > n_max) return 0.0;
        return std::exp(log_cn2[static_cast<std::size_t>(n - n_min)]);
    }

    static FockLattice build(double n_bar, double fano_f) {
        if (!(n_bar > 0.0) || !(fano_f > 0.0))
            throw std::invalid_argument("FockLattice: n_bar and fano_f must be > 0");
        FockLattice lat;
        lat.n_bar = n_bar;
        lat.fano_f = fano_f;
        const double span = 8.0 * std::sqrt(fano_f * n_bar);
        const std::int64_t center = std::llround(n_bar);
        const std::int64_t half = static_cast<std::int64_t>(std::ceil(span));
        lat.n_min = std::max<std::int64_t>(0, center - half);
        lat.n_max = center + half;
        lat.log_cn2.resize(lat.size());
        const double inv2v = 1.0 / (2.0 * fano_f * n_bar);
        for (std::int64_t n = lat.n_min; n <= lat.n_max; ++n) {
            const double d = static_cast<double>(n) - n_bar;
            lat.log_cn2[static_cast<std::size_t>(n - lat.n_min)] = -d * d * inv2v;
        }
        // renormalize: log Z by max-shifted pairwise sum
        double logmax = lat.log_cn2[0];
        for (double v : lat.log_cn2) logmax = std::max(logmax, v);
        std::vector<double> scaled(lat.size());
        for (std::size_t i = 0; i < lat.size(); ++i) scaled[i] = std::exp(lat.log_cn2[i] - logmax);
        const double log_z = logmax + std::log(detail::pairwise_sum(scaled));
        for (double& v : lat.log_cn2) v -= log_z;
        return lat;
    }
};

/// |A_{n,p}|^2 = C(n,p) T^(n-p) R^p, the binomial weight of finding p of n
/// photons in the reflected port of the loss beam-splitter.
inline double binomial_amp_sq(std::int64_t n, std::int64_t p, double loss_r) {
    if (n < 0 || p < 0 || p > n)
        throw std::invalid_argument("binomial_amp_sq: need 0 <= p <= n");
    if (!(loss_r >= 0.0 && loss_r <= 1.0))
        throw std::invalid_argument("binomial_amp_sq: loss_r must lie in [0, 1]");
    if (loss_r == 0.0) return p == 0 ? 1.0 : 0.0;
    if (loss_r == 1.0) return p == n ? 1.0 : 0.0;
    const double lg = std::lgamma(static_cast<double>(n) + 1.0) -
                      std::lgamma(static_cast<double>(p) + 1.0) -
                      std::lgamma(static_cast<double>(n - p) + 1.0);
    return std::exp(lg + static_cast<double>(p) * std::log(loss_r) +
                    static_cast<double>(n - p) * std::log1p(-loss_r));
}

/// Largest deviation (relative to the peak) between the exact binomial
/// |A_{n,p}|^2 and its Stirling/Gaussian form over all p.  Only meaningful
/// deep in the partition regime; requires n R T >= 25.
inline double stirling_check(std::int64_t n, double loss_r) {
    if (!(loss_r > 0.0 && loss_r < 1.0))
        throw std::invalid_argument("stirling_check: loss_r must lie strictly in (0, 1)");
    const double t = 1.0 - loss_r;
    const double nrt = static_cast<double>(n) * loss_r * t;
    if (!(nrt >= 25.0))
        throw std::invalid_argument("stirling_check: outside regime, need n R T >= 25 (got " +
                                    std::to_string(nrt) + ")");
    constexpr double kPi = 3.141592653589793238462643383279502884;
    const double peak = 1.0 / std::sqrt(2.0 * kPi * nrt);
    const double log_r = std::log(loss_r), log_t = std::log1p(-loss_r);
    const double lgn = std::lgamma(static_cast<double>(n) + 1.0);
    const double mean = static_cast<double>(n) * loss_r;
    double worst = 0.0;
    for (std::int64_t p = 0; p <= n; ++p) {
        const double pd = static_cast<double>(p);
        const double exact = std::exp(lgn - std::lgamma(pd + 1.0) -
                                      std::lgamma(static_cast<double>(n - p) + 1.0) + pd * log_r +
                                      static_cast<double>(n - p) * log_t);
        const double dev = pd - mean;
        const double gauss = peak * std::exp(-dev * dev / (2.0 * nrt));
        worst = std::max(worst, std::abs(exact - gauss));
    }
    return worst / peak;
}

/// Exact variance of the intensity difference I1 - I2.  The double binomial
/// sum reduces per n to sum_{p,p'} |A|^2 |A|^2 (p-p')^2 = 2 n R T (two
/// independent binomials), leaving 2 R T E[n] over the lattice.  E[n] is
/// accumulated as centered symmetric pairs about the lattice center, which
/// cancel exactly for an unclamped integer-centered lattice; the result is
/// then free of any F dependence down to the last bit.
inline double exact_intensity_diff_variance(const FockLattice& lat, double loss_r) {
    if (!(loss_r >= 0.0 && loss_r <= 1.0))
        throw std::invalid_argument("exact_intensity_diff_variance: loss_r must lie in [0, 1]");
    const std::size_t n = lat.size();
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = std::exp(lat.log_cn2[i]);
    const double wsum = detail::pairwise_sum(w);

    const std::int64_t center = std::min(
        lat.n_max, std::max(lat.n_min, static_cast<std::int64_t>(std::llround(lat.n_bar))));
    const std::size_t ci = static_cast<std::size_t>(center - lat.n_min);
    const std::int64_t reach = std::max(lat.n_max - center, center - lat.n_min);
    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(reach));
    for (std::int64_t j = 1; j <= reach; ++j) {
        const double wp = (center + j <= lat.n_max) ? w[ci + static_cast<std::size_t>(j)] : 0.0;
        const double wm = (center - j >= lat.n_min) ? w[ci - static_cast<std::size_t>(j)] : 0.0;
        terms.push_back(static_cast<double>(j) * (wp - wm));
    }
    const double mean_n = static_cast<double>(center) + detail::pairwise_sum(terms) / wsum;
    return 2.0 * loss_r * (1.0 - loss_r) * mean_n;
}

/// Literal O(n^2) evaluation of the same double sum, kept as the independent
/// oracle of the per-n reduction.  Small lattices only.
inline double intensity_diff_variance_brute(const FockLattice& lat, double loss_r) {
    if (lat.n_max > 2000)
        throw std::invalid_argument(
            "intensity_diff_variance_brute: O(n^2) route is for small lattices (n_max <= 2000)");
    if (loss_r == 0.0 || loss_r == 1.0) return 0.0;
    const auto lg = detail::lgamma_table(lat.n_max);
    const double log_r = std::log(loss_r), log_t = std::log1p(-loss_r);
    std::vector<double> outer;
    outer.reserve(lat.size());
    std::vector<double> row;
    for (std::int64_t n = lat.n_min; n <= lat.n_max; ++n) {
        row.resize(static_cast<std::size_t>(n) + 1);
        for (std::int64_t p = 0; p <= n; ++p)
            row[static_cast<std::size_t>(p)] =
                std::exp(detail::log_choose(lg, n, p) + static_cast<double>(p) * log_r +
                         static_cast<double>(n - p) * log_t);
        double acc = 0.0;
        for (std::int64_t p = 0; p <= n; ++p) {
            const double bp = row[static_cast<std::size_t>(p)];
            if (bp == 0.0) continue;
            for (std::int64_t q = 0; q <= n; ++q) {
                const double diff = static_cast<double>(p - q);
                acc += bp * row[static_cast<std::size_t>(q)] * diff * diff;
            }
        }
        outer.push_back(lat.weight(n) * acc);
    }
    return detail::pairwise_sum(outer);
}

/// Integer conditioning window on the idler photon number, inclusive ends.
struct IntegerBand {
    std::int64_t lo = 0;
    std::int64_t hi = 0;
};

namespace detail {

struct SupportRange {
    std::int64_t lo, hi;
};

inline SupportRange clamp_support(double center, double halfwidth, std::int64_t n_max) {
    SupportRange r{};
    r.lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(center - halfwidth)));
    r.hi = std::min(n_max, static_cast<std::int64_t>(std::ceil(center + halfwidth)));
    if (r.hi < r.lo) r.hi = r.lo;
    return r;
}

// Shared kernel: pmf(n1) = sum_n |c_n|^2 idler_weight(n) B(n, n - n1) over
// the given n1 support.  idler_weight is 1 for the plain marginal.
inline PhotonDistribution conditioned_pmf(const FockLattice& lat, double loss_r,
                                          const std::vector<double>& idler_weight,
                                          SupportRange support, double n_bar_prime,
                                          double total_mass) {
    const auto lg = lgamma_table(lat.n_max);
    const bool edge = (loss_r == 0.0 || loss_r == 1.0);
    const double log_r = edge ? 0.0 : std::log(loss_r);
    const double log_t = edge ? 0.0 : std::log1p(-loss_r);

    PhotonDistribution out;
    out.support = PhotonDistribution::Support::integer;
    out.n_bar_prime = n_bar_prime;
    out.mass = total_mass;
    const std::size_t width = static_cast<std::size_t>(support.hi - support.lo + 1);
    out.grid.resize(width);
    out.density.resize(width);

    std::vector<double> terms;
    terms.reserve(lat.size());
    for (std::size_t i = 0; i < width; ++i) {
        const std::int64_t n1 = support.lo + static_cast<std::int64_t>(i);
        out.grid[i] = static_cast<double>(n1) - n_bar_prime;
        terms.clear();
        for (std::int64_t n = std::max(lat.n_min, n1); n <= lat.n_max; ++n) {
            const double iw = idler_weight[static_cast<std::size_t>(n - lat.n_min)];
            if (iw == 0.0) continue;
            const std::int64_t p = n - n1;  // photons lost from the signal
            double b;
            if (loss_r == 0.0)
                b = (p == 0) ? 1.0 : 0.0;
            else if (loss_r == 1.0)
                b = (p == n) ? 1.0 : 0.0;
            else
                b = std::exp(log_choose(lg, n, p) + static_cast<double>(p) * log_r +
                             static_cast<double>(n - p) * log_t);
            if (b == 0.0) continue;
            terms.push_back(lat.weight(n) * iw * b);
        }
        out.density[i] = pairwise_sum(terms);
    }
    return out;
}

// Idler pmf value Pr[n2] for each lattice n, summed over n2 in [lo, hi].
inline std::vector<double> band_idler_weights(const FockLattice& lat, double loss_r,
                                              std::int64_t lo, std::int64_t hi) {
    const auto lg = lgamma_table(lat.n_max);
    const bool edge = (loss_r == 0.0 || loss_r == 1.0);
    const double log_r = edge ? 0.0 : std::log(loss_r);
    const double log_t = edge ? 0.0 : std::log1p(-loss_r);
    std::vector<double> w(lat.size(), 0.0);
    std::vector<double> terms;
    for (std::int64_t n = lat.n_min; n <= lat.n_max; ++n) {
        const std::int64_t a = std::max<std::int64_t>(0, lo);
        const std::int64_t b = std::min(n, hi);
        terms.clear();
        for (std::int64_t n2 = a; n2 <= b; ++n2) {
            const std::int64_t p = n - n2;
            if (loss_r == 0.0) {
                if (p == 0) terms.push_back(1.0);
            } else if (loss_r == 1.0) {
                if (p == n) terms.push_back(1.0);
            } else {
                terms.push_back(std::exp(log_choose(lg, n, p) + static_cast<double>(p) * log_r +
                                         static_cast<double>(n - p) * log_t));
            }
        }
        w[static_cast<std::size_t>(n - lat.n_min)] = pairwise_sum(terms);
    }
    return w;
}

}  // namespace detail

/// Exact pmf of the signal photon number n1 after the partition process,
/// P(n1) = sum_n |c_n|^2 |A_{n,n-n1}|^2, on integer support around n_bar'.
inline PhotonDistribution exact_marginal(const FockLattice& lat, double loss_r) {
    const double t = 1.0 - loss_r;
    const double n_bar_prime = t * lat.n_bar;
    const double fano_prime = loss_r + lat.fano_f * t;
    const double halfwidth = 8.5 * std::sqrt(fano_prime * n_bar_prime + 1.0) + 2.0;
    const auto support = detail::clamp_support(n_bar_prime, halfwidth, lat.n_max);
    std::vector<double> ones(lat.size(), 1.0);
    auto out = detail::conditioned_pmf(lat, loss_r, ones, support, n_bar_prime, 1.0);
    out.mass = integrate_density(out);  // 1 up to the truncated tail
    return out;
}

/// Exact conditioned pmf P(n1, n2 = N) = sum_n |c_n|^2 |A_{n,n-n1}|^2
/// |A_{n,n-N}|^2.  Unnormalized: mass is the preparation probability
/// Pr[n2 = N].
inline PhotonDistribution exact_joint_conditional(const FockLattice& lat, double loss_r,
                                                  std::int64_t trigger_n) {
    if (trigger_n < 0)
        throw std::invalid_argument("exact_joint_conditional: trigger photon number must be >= 0");
    const double t = 1.0 - loss_r;
    const double n_bar_prime = t * lat.n_bar;
    const double fano_prime = loss_r + lat.fano_f * t;
    const double gem = loss_r;
    const double beta = 1.0 - gem / fano_prime;
    const double cond_var = (2.0 * gem - gem * gem / fano_prime) * n_bar_prime;

    const auto weights = detail::band_idler_weights(lat, loss_r, trigger_n, trigger_n);
    std::vector<double> mass_terms(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        mass_terms[i] = std::exp(lat.log_cn2[i]) * weights[i];
    const double mass = detail::pairwise_sum(mass_terms);

    const double center = n_bar_prime + beta * (static_cast<double>(trigger_n) - n_bar_prime);
    const double halfwidth = 8.5 * std::sqrt(std::max(cond_var, 1.0)) + 2.0;
    const auto support = detail::clamp_support(center, halfwidth, lat.n_max);
    return detail::conditioned_pmf(lat, loss_r, weights, support, n_bar_prime, mass);
}

/// Exact band-conditioned pmf: sum of exact_joint_conditional over all
/// trigger values inside the integer band.  Mass is Pr[n2 in band].
inline PhotonDistribution exact_band_conditional(const FockLattice& lat, double loss_r,
                                                 IntegerBand band) {
    if (band.hi < band.lo)
        throw std::invalid_argument("exact_band_conditional: empty band");
    const double t = 1.0 - loss_r;
    const double n_bar_prime = t * lat.n_bar;
    const double fano_prime = loss_r + lat.fano_f * t;
    const double gem = loss_r;
    const double beta = 1.0 - gem / fano_prime;
    const double cond_var = (2.0 * gem - gem * gem / fano_prime) * n_bar_prime;

    const auto weights = detail::band_idler_weights(lat, loss_r, band.lo, band.hi);
    std::vector<double> mass_terms(weights.size());
    for (std::size_t i = 0; i < weights.size(); ++i)
        mass_terms[i] = std::exp(lat.log_cn2[i]) * weights[i];
    const double mass = detail::pairwise_sum(mass_terms);

    const double c_lo = n_bar_prime + beta * (static_cast<double>(band.lo) - n_bar_prime);
    const double c_hi = n_bar_prime + beta * (static_cast<double>(band.hi) - n_bar_prime);
    const double margin = 8.5 * std::sqrt(std::max(cond_var, 1.0)) + 2.0;
    detail::SupportRange support{};
    support.lo = std::max<std::int64_t>(0, static_cast<std::int64_t>(std::floor(c_lo - margin)));
    support.hi = std::min(lat.n_max, static_cast<std::int64_t>(std::ceil(c_hi + margin)));
    if (support.hi < support.lo) support.hi = support.lo;
    return detail::conditioned_pmf(lat, loss_r, weights, support, n_bar_prime, mass);
}

}  // namespace twinsel
