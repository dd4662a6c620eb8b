// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure.  Desk scale; every tolerance is pinned in code.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>

#include "twinsel/analytic.hpp"
#include "twinsel/fock_oracle.hpp"
#include "twinsel/montecarlo.hpp"

using namespace twinsel;

namespace {

int g_failures = 0;
std::vector<std::string> g_notes;

void note(const char* fmt, ...) {
    char buf[256];
    va_list ap;
    va_start(ap, fmt);
    std::vsnprintf(buf, sizeof buf, fmt, ap);
    va_end(ap);
    g_notes.push_back(buf);
}

bool expect(bool ok, const char* what) {
    if (!ok) {
        g_notes.push_back(std::string("FAILED: ") + what);
        return false;
    }
    return true;
}

class Criterion {
  public:
    Criterion(int id, const char* title, double budget_s)
        : id_(id), title_(title), budget_s_(budget_s),
          start_(std::chrono::steady_clock::now()) {
        g_notes.clear();
        ok_ = true;
    }
    void check(bool ok, const char* what) { ok_ = expect(ok, what) && ok_; }
    ~Criterion() {
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        if (elapsed >= budget_s_) {
            ok_ = false;
            note("runtime %.2f s exceeded budget %.0f s", elapsed, budget_s_);
        }
        std::printf("[%s] criterion %d: %s (%.2f s)\n", ok_ ? "PASS" : "FAIL", id_, title_,
                    elapsed);
        for (const auto& n : g_notes) std::printf("        %s\n", n.c_str());
        if (!ok_) ++g_failures;
    }

  private:
    int id_;
    const char* title_;
    double budget_s_;
    std::chrono::steady_clock::time_point start_;
    bool ok_;
};

bool close_rel(double got, double expected, double rel) {
    return std::isfinite(got) && std::abs(got - expected) <= rel * std::abs(expected);
}

bool close_abs(double got, double expected, double abs_tol) {
    return std::isfinite(got) && std::abs(got - expected) <= abs_tol;
}

const TwinBeamModel kExpModel = model_from_observables(1e6, 100.0, 0.18);
const DerivedParams kExpD = derive(kExpModel);

// --------------------------------------------------------------------------

void criterion1_conditional_variance_law() {
    Criterion c(1, "conditional-variance law V_c = 2G - G^2/F'", 1.0);
    c.check(close_abs(kExpD.cond_variance, 0.359676, 1e-9), "V_c(F'=100, G=0.18) = 0.359676");

    bool grid_ok = true;
    for (int gi = 1; gi <= 20 && grid_ok; ++gi) {
        for (int fi = 1; fi <= 20 && grid_ok; ++fi) {
            const double g = 0.0475 * gi;
            const double fp = g + 0.5 * fi * fi;
            const auto d = derive(model_from_observables(1e6, fp, g));
            const double gap = std::abs(d.cond_variance - 2.0 * g);
            const double limit =
                g * g / fp + 4.0 * std::numeric_limits<double>::epsilon() * 2.0 * g;
            grid_ok = gap <= limit;
        }
    }
    c.check(grid_ok, "|V_c - 2G| <= G^2/F' across the 20x20 (G, F') grid");
}

void criterion2_band_efficiency() {
    Criterion c(2, "band efficiency 0.4% at delta = 0.1 sigma", 30.0);
    const SelectionBand band = band_from_sigma_units(0.0, 0.1, kExpD);
    const double closed = prep_prob_band(kExpModel, band);
    c.check(close_rel(closed, 0.003989, 0.01), "closed form = 0.003989 within 1%");

    const std::size_t n = 10'000'000;
    const auto batch = generate(kExpModel, n, 1303, 2);
    const auto sel = select(batch, band);
    note("mc prep_prob = %.6g +- %.2g (analytic %.6g)", sel.prep_prob.value,
         sel.prep_prob.std_error, closed);
    c.check(close_abs(sel.prep_prob.value, closed, 3.0 * sel.prep_prob.std_error),
            "Monte-Carlo n=1e7 within 3 binomial standard errors");
}

void criterion3_single_value_efficiency() {
    Criterion c(3, "single-value efficiency ~5e-10 at 1 mW, 1064 nm, F=100", 1.0);
    const double h = 6.62607015e-34, light = 299792458.0;
    const double n_bar = 1e-3 * 1064e-9 / (h * light);  // photons per 1 s window
    const auto rep = conditional_single_value(TwinBeamModel{n_bar, 100.0, 0.0}, 0.0).second;
    note("n_bar = %.4g photons, maximal mass = %.4g", n_bar, rep.prep_prob);
    c.check(close_rel(rep.prep_prob, 5e-10, 0.15), "1/sqrt(2 pi F n_bar) within 15% of 5e-10");
}

void criterion4_oracle_equivalence() {
    Criterion c(4, "Fock oracle equivalence at n_bar=1600, F=4, R=0.2", 60.0);
    const double n_bar = 1600.0, F = 4.0, R = 0.2;
    const double T = 1.0 - R, npb = T * n_bar, fp = R + F * T;
    const double vc = 2.0 * R - R * R / fp, beta = 1.0 - R / fp;
    const auto lat = FockLattice::build(n_bar, F);

    // exact marginal vs the Gaussian F' marginal, total variation
    const auto marg = exact_marginal(lat, R);
    const double var = npb * fp;
    double tv = 0.0;
    for (std::size_t i = 0; i < marg.size(); ++i)
        tv += std::abs(marg.density[i] - std::exp(-marg.grid[i] * marg.grid[i] / (2.0 * var)) /
                                             std::sqrt(2.0 * 3.14159265358979324 * var));
    tv *= 0.5;
    note("TV(exact marginal, Gaussian) = %.4g", tv);
    c.check(tv < 1e-2, "TV distance < 1e-2");

    const auto cond = reduced_moments(exact_joint_conditional(lat, R, std::llround(npb)));
    note("conditional fano = %.5f (V_c = %.5f)", cond.fano, vc);
    c.check(close_rel(cond.fano, vc, 0.05), "conditional Fano within 5% of V_c");

    const std::int64_t trig = std::llround(npb + 2.0 * std::sqrt(npb));
    const auto off = reduced_moments(exact_joint_conditional(lat, R, trig));
    c.check(close_rel(off.mean_shift, beta * (static_cast<double>(trig) - npb), 0.05),
            "mean shift within 5% of beta (N - n_bar')");

    const double v = exact_intensity_diff_variance(lat, R);
    c.check(close_rel(v, 2.0 * R * n_bar * T, 1e-9), "Var(I1-I2) = 2 R n_bar T to 1e-9");
    const double v2 = exact_intensity_diff_variance(FockLattice::build(n_bar, 2.0), R);
    const double v8 = exact_intensity_diff_variance(FockLattice::build(n_bar, 8.0), R);
    note("Var(I1-I2): F=2 -> %.17g, F=8 -> %.17g", v2, v8);
    c.check(v2 == v8, "bit-equal across F in {2, 8}");
}

void criterion5_shape_statistics() {
    Criterion c(5, "shape statistics of the reduced state", 10.0);
    // delta -> 0 routes to the single-value Gaussian
    const auto sv = reduced_moments(conditional_single_value(kExpModel, 0.0).first);
    note("delta->0: skewness = %.2g, kurtosis - 3 = %.2g", sv.skewness, sv.kurtosis - 3.0);
    c.check(std::abs(sv.skewness) < 1e-10, "skewness < 1e-10 at alpha = 0");
    c.check(close_abs(sv.kurtosis, 3.0, 1e-6), "kurtosis = 3 +- 1e-6");

    double prev = std::numeric_limits<double>::infinity();
    bool decreasing = true;
    for (double ds : {1.0, 2.0, 5.0, 10.0}) {
        const auto rep =
            reduced_moments(band_pdf_exact(kExpModel, band_from_sigma_units(0.0, ds, kExpD)));
        decreasing = decreasing && rep.kurtosis < prev;
        prev = rep.kurtosis;
    }
    c.check(decreasing, "kurtosis strictly decreasing over delta in {1, 2, 5, 10} sigma");

    const auto skew =
        reduced_moments(band_pdf_exact(kExpModel, band_from_sigma_units(10.0, 10.0, kExpD)));
    note("alpha=10s, delta=10s: skewness = %.4f", skew.skewness);
    c.check(std::abs(skew.skewness) > 1e-3, "off-center band has nonzero skewness");
}

void criterion6_multiband_constancy() {
    Criterion c(6, "multi-band constancy at the Fig. 8b layout", 60.0);
    std::vector<SelectionBand> bands;
    for (double as = -10.0; as <= 10.0 + 1e-9; as += 2.0)
        bands.push_back(band_from_sigma_units(as, 0.2, kExpD));

    const auto mb = multiband_report(kExpModel, bands);
    bool within = true;
    for (const auto& rep : mb.bands)
        within = within && close_rel(rep.fano, kExpD.cond_variance, 0.02);
    note("per-band analytic fano spread = %.4g, aggregate efficiency = %.4g", mb.fano_spread,
         mb.aggregate_efficiency);
    c.check(within, "per-band analytic Fano within 2% of V_c");

    const auto batch = generate(kExpModel, 10'000'000, 1306, 2);
    const auto sels = select(batch, bands);
    bool mc_within = true;
    for (std::size_t i = 0; i < sels.size(); ++i) {
        const auto rep = estimate_reduced(sels[i], kExpModel, batch.seed);
        if (!rep.sufficient || !close_abs(rep.fano, mb.bands[i].fano, 3.0 * rep.fano_se))
            mc_within = false;
    }
    c.check(mc_within, "MC per-band Fano within 3 sigma at n = 1e7");

    // disjoint unit-sigma tiles across +-10 sigma sqrt(F') hold all the mass
    const double half_span = 10.0 * kExpD.sigma * std::sqrt(kExpD.fano_fprime);
    const int n_tiles = static_cast<int>(std::llround(2.0 * half_span / kExpD.sigma));
    double total = 0.0;
    for (int i = 0; i < n_tiles; ++i)
        total += prep_prob_band(kExpModel,
                                SelectionBand{-half_span + (i + 0.5) * kExpD.sigma, kExpD.sigma});
    note("tiling mass = %.6f over %d bands", total, n_tiles);
    c.check(total > 0.999, "tiling bands sum to mass > 0.999");
}

void criterion7_mc_statistical_soundness() {
    Criterion c(7, "Monte-Carlo statistical soundness", 120.0);
    const SelectionBand band = band_from_sigma_units(0.0, 0.1, kExpD);
    const double true_prep = band_pdf_exact(kExpModel, band).mass;

    // n^(-1/2) convergence of the mean absolute error, 20 seeds per n
    const std::vector<std::size_t> ns{10'000, 100'000, 1'000'000};
    std::vector<double> err_prep, err_fano, err_gem;
    for (std::size_t n : ns) {
        double ep = 0.0, ef = 0.0, eg = 0.0;
        const int n_seeds = 20;
        for (int s = 0; s < n_seeds; ++s) {
            const auto batch = generate(kExpModel, n, 9000 + static_cast<std::uint64_t>(s), 2);
            ep += std::abs(select(batch, band).prep_prob.value - true_prep);
            ef += std::abs(estimate_fano(batch, BeamSide::signal, kExpModel).value - 100.0);
            eg += std::abs(estimate_gemellity(batch, kExpModel).value - 0.18);
        }
        err_prep.push_back(ep / n_seeds);
        err_fano.push_back(ef / n_seeds);
        err_gem.push_back(eg / n_seeds);
    }
    auto slope = [&](const std::vector<double>& errs) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const auto k = static_cast<double>(ns.size());
        for (std::size_t i = 0; i < ns.size(); ++i) {
            const double x = std::log(static_cast<double>(ns[i])), y = std::log(errs[i]);
            sx += x; sy += y; sxx += x * x; sxy += x * y;
        }
        return (k * sxy - sx * sy) / (k * sxx - sx * sx);
    };
    const double sp = slope(err_prep), sf = slope(err_fano), sg = slope(err_gem);
    note("log-log slopes: prep %.3f, fano %.3f, gemellity %.3f", sp, sf, sg);
    c.check(std::abs(sp + 0.5) <= 0.15, "prep_prob error slope -0.5 +- 0.15");
    c.check(std::abs(sf + 0.5) <= 0.15, "fano error slope -0.5 +- 0.15");
    c.check(std::abs(sg + 0.5) <= 0.15, "gemellity error slope -0.5 +- 0.15");

    // 2-standard-error coverage across 50 seeds
    int cov_prep = 0, cov_fano = 0, cov_gem = 0;
    const int n_seeds = 50;
    const std::size_t n_cov = 200'000;
    for (int s = 0; s < n_seeds; ++s) {
        const auto batch = generate(kExpModel, n_cov, 40'000 + static_cast<std::uint64_t>(s), 2);
        const auto sel = select(batch, band);
        if (std::abs(sel.prep_prob.value - true_prep) <= 2.0 * sel.prep_prob.std_error)
            ++cov_prep;
        const auto fano = estimate_fano(batch, BeamSide::signal, kExpModel);
        if (std::abs(fano.value - 100.0) <= 2.0 * fano.std_error) ++cov_fano;
        const auto gem = estimate_gemellity(batch, kExpModel);
        if (std::abs(gem.value - 0.18) <= 2.0 * gem.std_error) ++cov_gem;
    }
    note("coverage/50: prep %d, fano %d, gemellity %d", cov_prep, cov_fano, cov_gem);
    c.check(cov_prep >= 45, "prep_prob coverage >= 90%");
    c.check(cov_fano >= 45, "fano coverage >= 90%");
    c.check(cov_gem >= 45, "gemellity coverage >= 90%");

    // bit-identical across worker counts
    const auto w1 = generate(kExpModel, 100'000, 77, 1);
    const auto w4 = generate(kExpModel, 100'000, 77, 4);
    const auto w16 = generate(kExpModel, 100'000, 77, 16);
    const bool same = w1.signal == w4.signal && w4.signal == w16.signal &&
                      w1.idler == w4.idler && w4.idler == w16.idler;
    c.check(same, "batches bit-identical across worker counts {1, 4, 16}");
    const auto e1 = estimate_fano(w1, BeamSide::signal, kExpModel);
    const auto e16 = estimate_fano(w16, BeamSide::signal, kExpModel);
    c.check(e1.value == e16.value, "estimates bit-identical across worker counts");
}

}  // namespace

int main() {
    criterion1_conditional_variance_law();
    criterion2_band_efficiency();
    criterion3_single_value_efficiency();
    criterion4_oracle_equivalence();
    criterion5_shape_statistics();
    criterion6_multiband_constancy();
    criterion7_mc_statistical_soundness();

    if (g_failures == 0) {
        std::printf("all 7 acceptance criteria passed\n");
        return 0;
    }
    std::printf("%d acceptance criteria FAILED\n", g_failures);
    return 1;
}
