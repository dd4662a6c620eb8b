#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <vector>

#include "twinsel/analytic.hpp"
#include "twinsel/fock_oracle.hpp"

using namespace twinsel;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("binomial partition weights", "[fock]") {
    CHECK(binomial_amp_sq(5, 0, 0.0) == 1.0);
    CHECK(binomial_amp_sq(5, 3, 0.0) == 0.0);
    CHECK(binomial_amp_sq(7, 7, 1.0) == 1.0);
    CHECK_THAT(binomial_amp_sq(2, 1, 0.5), WithinRel(0.5, 1e-13));
    CHECK_THROWS_AS(binomial_amp_sq(5, 6, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(binomial_amp_sq(5, -1, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(binomial_amp_sq(5, 2, 1.5), std::invalid_argument);

    // normalization over p at n = 500
    std::vector<double> terms;
    for (std::int64_t p = 0; p <= 500; ++p) terms.push_back(binomial_amp_sq(500, p, 0.18));
    CHECK_THAT(detail::pairwise_sum(terms), WithinAbs(1.0, 1e-12));
}

TEST_CASE("log-space evaluation survives n = 1e6", "[fock]") {
    const std::int64_t n = 1'000'000;
    // peak value matches the Stirling form, no overflow anywhere
    const double peak = binomial_amp_sq(n, n / 2, 0.5);
    CHECK(std::isfinite(peak));
    CHECK_THAT(peak, WithinRel(1.0 / std::sqrt(2.0 * 3.14159265358979324 * n * 0.25), 1e-3));

    std::vector<double> terms;
    terms.reserve(static_cast<std::size_t>(n) + 1);
    for (std::int64_t p = 0; p <= n; ++p) terms.push_back(binomial_amp_sq(n, p, 0.5));
    CHECK_THAT(detail::pairwise_sum(terms), WithinAbs(1.0, 1e-9));

    const auto lat = FockLattice::build(1e6, 4.0);
    std::vector<double> w(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) {
        w[i] = std::exp(lat.log_cn2[i]);
        REQUIRE(std::isfinite(lat.log_cn2[i]));
    }
    CHECK_THAT(detail::pairwise_sum(w), WithinAbs(1.0, 1e-10));
}

TEST_CASE("lattice normalization and tail bound", "[fock]") {
    const double n_bar = 400.0, fano = 4.0;
    const auto lat = FockLattice::build(n_bar, fano);
    std::vector<double> w(lat.size());
    for (std::size_t i = 0; i < lat.size(); ++i) w[i] = std::exp(lat.log_cn2[i]);
    const double total = detail::pairwise_sum(w);
    CHECK(total <= 1.0 + 1e-12);
    CHECK(total >= 1.0 - 1e-10);

    // raw Gaussian mass outside the cutoffs, relative to the total inside
    const double inv2v = 1.0 / (2.0 * fano * n_bar);
    double inside = 0.0, outside = 0.0;
    const std::int64_t far = lat.n_max + 10 * (lat.n_max - lat.n_min);
    for (std::int64_t n = 0; n <= far; ++n) {
        const double d = static_cast<double>(n) - n_bar;
        const double v = std::exp(-d * d * inv2v);
        if (n >= lat.n_min && n <= lat.n_max)
            inside += v;
        else
            outside += v;
    }
    CHECK(outside / (inside + outside) < 1e-12);
}

TEST_CASE("Stirling approximation of the partition weights", "[fock]") {
    const double dev4 = stirling_check(10'000, 0.5);
    CHECK(dev4 < 1e-2);
    const double dev6 = stirling_check(1'000'000, 0.5);
    CHECK(dev6 < dev4);  // refines monotonically with n

    CHECK_THROWS_AS(stirling_check(100, 0.001), std::invalid_argument);  // nRT ~ 0.1
    CHECK_THROWS_AS(stirling_check(1000, 0.01), std::invalid_argument);
    CHECK_THROWS_AS(stirling_check(1000, 0.0), std::invalid_argument);
}

TEST_CASE("intensity-difference variance: closed per-n identity", "[fock]") {
    // 2 R n_bar T at the oracle point
    const auto lat = FockLattice::build(400.0, 4.0);
    const double v = exact_intensity_diff_variance(lat, 0.2);
    CHECK_THAT(v, WithinRel(128.0, 1e-9));

    // perfect twins: no residual noise
    CHECK(exact_intensity_diff_variance(lat, 0.0) == 0.0);

    // independent of F: bit-equal while the lattices stay unclamped
    const auto lat2 = FockLattice::build(400.0, 2.0);
    CHECK(exact_intensity_diff_variance(lat2, 0.2) == v);
    // F = 8 clamps the lattice at n = 0, which shifts the truncated mean by
    // a sliver; still F-independent to 1e-12 relative
    const auto lat8 = FockLattice::build(400.0, 8.0);
    CHECK_THAT(exact_intensity_diff_variance(lat8, 0.2), WithinRel(v, 1e-12));
}

TEST_CASE("brute-force double sum validates the reduction", "[fock]") {
    const auto lat = FockLattice::build(150.0, 3.0);
    const double closed = exact_intensity_diff_variance(lat, 0.3);
    const double brute = intensity_diff_variance_brute(lat, 0.3);
    CHECK_THAT(brute, WithinRel(closed, 1e-9));
    CHECK_THAT(brute, WithinRel(2.0 * 0.3 * 150.0 * 0.7, 1e-9));

    CHECK_THROWS_AS(intensity_diff_variance_brute(FockLattice::build(5000.0, 4.0), 0.3),
                    std::invalid_argument);
}

TEST_CASE("exact marginal: identity channel and moments", "[fock]") {
    const auto lat = FockLattice::build(400.0, 4.0);

    // R = 0 resamples |c_n|^2 unchanged
    const auto ident = exact_marginal(lat, 0.0);
    for (std::size_t i = 0; i < ident.size(); ++i) {
        const std::int64_t n1 = std::llround(ident.grid[i] + ident.n_bar_prime);
        CHECK_THAT(ident.density[i], WithinRel(lat.weight(n1), 1e-12));
    }

    const auto marg = exact_marginal(lat, 0.2);
    CHECK_THAT(marg.mass, WithinAbs(1.0, 1e-10));
    const auto rep = reduced_moments(marg);
    CHECK_THAT(rep.fano, WithinRel(3.4, 0.02));
    CHECK_THAT(rep.mean_shift, WithinAbs(0.0, 0.5));
}

TEST_CASE("oracle marginal approaches the Gaussian as n_bar grows", "[fock]") {
    auto tv_vs_gauss = [](double n_bar) {
        const auto lat = FockLattice::build(n_bar, 4.0);
        const auto marg = exact_marginal(lat, 0.2);
        const double var = 0.8 * n_bar * 3.4;
        double tv = 0.0;
        for (std::size_t i = 0; i < marg.size(); ++i)
            tv += std::abs(marg.density[i] -
                           std::exp(-marg.grid[i] * marg.grid[i] / (2.0 * var)) /
                               std::sqrt(2.0 * 3.14159265358979324 * var));
        return 0.5 * tv;
    };
    const double tv100 = tv_vs_gauss(100.0);
    const double tv400 = tv_vs_gauss(400.0);
    CHECK(tv400 < tv100);
}

TEST_CASE("exact conditioning on a single trigger value", "[fock]") {
    // perfect twins give a number state
    const auto lat0 = FockLattice::build(400.0, 4.0);
    const auto point = exact_joint_conditional(lat0, 0.0, 420);
    double best = 0.0;
    std::int64_t best_n1 = -1;
    for (std::size_t i = 0; i < point.size(); ++i)
        if (point.density[i] > best) {
            best = point.density[i];
            best_n1 = std::llround(point.grid[i] + point.n_bar_prime);
        }
    CHECK(best_n1 == 420);
    CHECK_THAT(best, WithinRel(point.mass, 1e-12));  // all mass in one cell

    // losses: conditional Fano matches V_c, mean shift matches beta
    const double n_bar = 400.0, R = 0.2, F = 4.0;
    const double T = 1.0 - R, npb = T * n_bar, fp = R + F * T;
    const double vc = 2.0 * R - R * R / fp;
    const double beta = 1.0 - R / fp;
    const auto lat = FockLattice::build(n_bar, F);

    const auto center = exact_joint_conditional(lat, R, std::llround(npb));
    const auto crep = reduced_moments(center);
    CHECK_THAT(crep.fano, WithinRel(vc, 0.05));
    CHECK(std::abs(crep.mean_shift) < 1.0);  // within discretization error

    const std::int64_t trig = std::llround(npb + 2.0 * std::sqrt(npb));
    const auto off = exact_joint_conditional(lat, R, trig);
    const auto orep = reduced_moments(off);
    CHECK_THAT(orep.mean_shift, WithinRel(beta * (static_cast<double>(trig) - npb), 0.05));

    CHECK_THROWS_AS(exact_joint_conditional(lat, R, -1), std::invalid_argument);
}

TEST_CASE("exact band conditioning", "[fock]") {
    const double n_bar = 400.0, R = 0.2, F = 4.0;
    const double T = 1.0 - R, npb = T * n_bar, fp = R + F * T;
    const auto lat = FockLattice::build(n_bar, F);

    // full-support band recovers the marginal
    const auto all = exact_band_conditional(lat, R, IntegerBand{0, lat.n_max});
    CHECK_THAT(all.mass, WithinAbs(1.0, 1e-10));
    const auto marg = exact_marginal(lat, R);
    for (std::size_t i = 0; i < marg.size(); ++i) {
        const std::int64_t n1 = std::llround(marg.grid[i] + npb);
        // find the same photon number in the band-conditioned support
        const std::int64_t j = n1 - std::llround(all.grid[0] + npb);
        REQUIRE(j >= 0);
        REQUIRE(j < static_cast<std::int64_t>(all.size()));
        if (marg.density[i] > 1e-300)
            CHECK_THAT(all.density[static_cast<std::size_t>(j)],
                       WithinRel(marg.density[i], 1e-10));
    }

    // five-photon band at the center matches the closed-form efficiency
    const std::int64_t c = std::llround(npb);
    const auto band5 = exact_band_conditional(lat, R, IntegerBand{c - 2, c + 2});
    const double eq28 = 5.0 / std::sqrt(npb) / std::sqrt(2.0 * 3.14159265358979324 * fp);
    CHECK_THAT(band5.mass, WithinRel(eq28, 0.05));

    // disjoint bands tiling the support: masses sum to one
    double total = 0.0;
    const std::int64_t width = 40;
    for (std::int64_t lo = 0; lo <= lat.n_max; lo += width)
        total +=
            exact_band_conditional(lat, R, IntegerBand{lo, std::min(lo + width - 1, lat.n_max)})
                .mass;
    CHECK_THAT(total, WithinAbs(1.0, 1e-10));

    CHECK_THROWS_AS(exact_band_conditional(lat, R, IntegerBand{10, 5}), std::invalid_argument);
}
