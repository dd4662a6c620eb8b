#pragma once

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace twinsel {

/// Tabulated probability mass/density over the photon-number offset
/// eps = n1 - n_bar'.  Continuous support uses a uniform grid with composite
/// Simpson quadrature; integer support holds an exact pmf summed directly.
struct PhotonDistribution {
    enum class Support { continuous, integer };

    std::vector<double> grid;     ///< strictly increasing sample points in eps (photons)
    std::vector<double> density;  ///< >= 0; 1/photons (continuous) or pmf (integer)
    double mass = 0.0;            ///< total integrated probability
    bool normalized = false;      ///< density divided by mass?
    Support support = Support::continuous;
    double n_bar_prime = 0.0;     ///< offset reference; Fano normalization uses this

    std::size_t size() const { return grid.size(); }
};

namespace detail {

// Composite Simpson on a uniform grid (odd point count >= 3).
inline double simpson_uniform(const std::vector<double>& f, double h) {
    const std::size_t n = f.size();
    if (n < 3 || n % 2 == 0)
        throw std::invalid_argument("simpson_uniform: need an odd number of points >= 3");
    double s4 = 0.0, s2 = 0.0;
    for (std::size_t i = 1; i + 1 < n; i += 2) s4 += f[i];
    for (std::size_t i = 2; i + 1 < n; i += 2) s2 += f[i];
    return h / 3.0 * (f.front() + f.back() + 4.0 * s4 + 2.0 * s2);
}

}  // namespace detail

/// Integrate a function of the grid against the distribution's own quadrature
/// rule.  `values` must be sampled on the distribution's grid.
inline double integrate(const PhotonDistribution& d, const std::vector<double>& values) {
    if (values.size() != d.grid.size())
        throw std::invalid_argument("integrate: values/grid size mismatch");
    if (d.support == PhotonDistribution::Support::integer) {
        double s = 0.0;
        for (double v : values) s += v;
        return s;
    }
    const double h = (d.grid.back() - d.grid.front()) / static_cast<double>(d.grid.size() - 1);
    return detail::simpson_uniform(values, h);
}

/// Quadrature of the stored density itself.
inline double integrate_density(const PhotonDistribution& d) { return integrate(d, d.density); }

/// Return a copy with density scaled to unit mass.  The mass field keeps the
/// original integrated probability (the preparation probability for
/// conditioned distributions).
inline PhotonDistribution normalize(const PhotonDistribution& d) {
    if (!(d.mass > 0.0)) throw std::invalid_argument("normalize: distribution has zero mass");
    if (d.normalized) return d;
    PhotonDistribution out = d;
    for (double& v : out.density) v /= d.mass;
    out.normalized = true;
    return out;
}

/// Scale density to 1 at its maximum.  Plot output only; moments are always
/// computed from the probability-normalized form.
inline PhotonDistribution peak_normalize(const PhotonDistribution& d) {
    PhotonDistribution out = d;
    double peak = 0.0;
    for (double v : d.density) peak = std::max(peak, v);
    if (peak > 0.0)
        for (double& v : out.density) v /= peak;
    out.normalized = false;
    return out;
}

}  // namespace twinsel
