#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace twinsel {

/// Physical parameters of an intensity-correlated twin-beam source with
/// symmetric linear losses modelled as a beam-splitter partition process.
struct TwinBeamModel {
    double n_bar;   ///< mean photon number of each mode before loss, > 0
    double fano_f;  ///< Fano factor F of each beam before loss, > 0
    double loss_r;  ///< loss / partition coefficient R in [0, 1]

    void validate() const {
        if (!(n_bar > 0.0) || !std::isfinite(n_bar))
            throw std::invalid_argument("TwinBeamModel: n_bar must be finite and > 0, got " +
                                        std::to_string(n_bar));
        if (!(fano_f > 0.0) || !std::isfinite(fano_f))
            throw std::invalid_argument("TwinBeamModel: fano_f must be finite and > 0, got " +
                                        std::to_string(fano_f));
        if (!(loss_r >= 0.0 && loss_r <= 1.0))
            throw std::invalid_argument("TwinBeamModel: loss_r must lie in [0, 1], got " +
                                        std::to_string(loss_r));
    }
};

/// Scalars derived from a TwinBeamModel.  Every layer (closed-form, Fock
/// oracle, Monte-Carlo) reads these from here so they are computed once,
/// identically.
struct DerivedParams {
    double transmission;   ///< T = 1 - R
    double n_bar_prime;    ///< mean photon number after the beam-splitter, T n_bar
    double fano_fprime;    ///< F' = R + F T
    double gemellity;      ///< G, intensity-difference noise / shot noise; equals R here
    double beta;           ///< recentering coefficient 1 - G/F'
    double cond_variance;  ///< V_c = 2G - G^2/F', conditional variance in Fano units
    double sigma;          ///< sqrt(n_bar_prime), width of the Poissonian of same mean
};

/// Evaluate all derived quantities.  Pure: equal inputs give bit-identical
/// outputs.
inline DerivedParams derive(const TwinBeamModel& m) {
    m.validate();
    DerivedParams d{};
    d.transmission = 1.0 - m.loss_r;
    d.n_bar_prime = d.transmission * m.n_bar;
    d.fano_fprime = m.loss_r + m.fano_f * d.transmission;
    d.gemellity = m.loss_r;
    d.beta = 1.0 - d.gemellity / d.fano_fprime;
    d.cond_variance = 2.0 * d.gemellity - d.gemellity * d.gemellity / d.fano_fprime;
    d.sigma = std::sqrt(d.n_bar_prime);
    return d;
}

/// Invert (n_bar', F', G) into the source parameterization.  Users quote
/// measured pairs (F', G); the inversion is R = G, T = 1 - G, F = (F'-R)/T.
inline TwinBeamModel model_from_observables(double n_bar_prime, double fano_fprime,
                                            double gemellity_g) {
    if (!(n_bar_prime > 0.0) || !std::isfinite(n_bar_prime))
        throw std::invalid_argument("model_from_observables: n_bar_prime must be > 0, got " +
                                    std::to_string(n_bar_prime));
    if (!(gemellity_g >= 0.0 && gemellity_g <= 1.0))
        throw std::invalid_argument("model_from_observables: gemellity_g must lie in [0, 1], got " +
                                    std::to_string(gemellity_g));
    if (!(fano_fprime >= gemellity_g))
        throw std::invalid_argument("model_from_observables: fano_fprime must be >= gemellity_g");
    if (gemellity_g == 1.0)
        throw std::invalid_argument(
            "model_from_observables: gemellity_g = 1 makes T = 0 and fano_f indeterminate");
    if (fano_fprime == gemellity_g)
        throw std::invalid_argument(
            "model_from_observables: fano_fprime = gemellity_g forces fano_f = 0, outside fano_f > 0");
    TwinBeamModel m{};
    m.loss_r = gemellity_g;
    const double t = 1.0 - gemellity_g;
    m.fano_f = (fano_fprime - gemellity_g) / t;
    m.n_bar = n_bar_prime / t;
    m.validate();
    return m;
}

/// Conditioning window on the idler photon number: band center at
/// n_bar' + alpha, width delta.  Both in photons; delta = 0 denotes the
/// single-value limit.
struct SelectionBand {
    double alpha;  ///< band-center offset from n_bar' (photons, any sign)
    double delta;  ///< band width (photons, >= 0)

    double lo() const { return alpha - 0.5 * delta; }
    double hi() const { return alpha + 0.5 * delta; }

    double alpha_sigma(const DerivedParams& d) const { return alpha / d.sigma; }
    double delta_sigma(const DerivedParams& d) const { return delta / d.sigma; }

    void validate() const {
        if (!(delta >= 0.0))
            throw std::invalid_argument("SelectionBand: delta must be >= 0, got " +
                                        std::to_string(delta));
    }
};

/// Figure captions quote band centers and widths in units of
/// sigma = sqrt(n_bar'); convert once at the boundary.
inline SelectionBand band_from_sigma_units(double alpha_sigma, double delta_sigma,
                                           const DerivedParams& d) {
    SelectionBand b{alpha_sigma * d.sigma, delta_sigma * d.sigma};
    b.validate();
    return b;
}

/// Multi-band selections require pairwise disjoint windows; bands sharing an
/// edge are allowed.
inline void require_disjoint(const std::vector<SelectionBand>& bands) {
    for (std::size_t i = 0; i < bands.size(); ++i)
        for (std::size_t j = i + 1; j < bands.size(); ++j)
            if (bands[i].lo() < bands[j].hi() && bands[j].lo() < bands[i].hi())
                throw std::invalid_argument("selection bands overlap");
}

}  // namespace twinsel
