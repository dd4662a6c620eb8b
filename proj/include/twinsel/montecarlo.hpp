#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "twinsel/model.hpp"
#include "twinsel/rng.hpp"

// Monte-Carlo reproduction of the conditional protocol: correlated
// super-Poissonian sample pairs, post-selection on the idler, moment
// estimates with error bars.
//
// Sampling works in the fluctuation picture.  Three independent Gaussian
// arrays are mixed per the partition process,
//
//   A = sqrt(R) X + sqrt(1-R) C,   B = sqrt(R) Y + sqrt(1-R) C,
//
// with Var(X) = Var(Y) = n_bar (shot-noise scale) and Var(C) = F n_bar.
// Output fluctuations are rescaled by sqrt(T) so they live on the post-loss
// scale: the measured Fano factor is F' = R + F T and the measured
// gemellity Var(e1-e2)/(2 n_bar') is exactly R, matching the closed-form
// layer beam for beam.

namespace twinsel {

inline constexpr const char* kGeneratorId = "splitmix64-icdf/v1";
inline constexpr int kBootstrapResamples = 200;

/// Paired signal/idler fluctuation samples about n_bar'.
struct SampleBatch {
    std::vector<double> signal;  ///< eps1 (photons)
    std::vector<double> idler;   ///< eps2 (photons)
    std::uint64_t seed = 0;
    std::string generator_id = kGeneratorId;

    std::size_t n_samples() const { return signal.size(); }
};

struct EstimateWithError {
    double value = 0.0;
    double std_error = 0.0;
    std::size_t n_used = 0;
    bool degenerate = false;  ///< zero sample variance
};

namespace detail {

// Neumaier-compensated accumulation; order-stable and accurate for 1e7+ terms.
class CompensatedSum {
  public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }
    double value() const { return sum_ + comp_; }

  private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // unbiased (n-1)
};

inline MeanVar mean_var(const std::vector<double>& v) {
    MeanVar mv;
    const std::size_t n = v.size();
    if (n == 0) return mv;
    CompensatedSum s;
    for (double x : v) s.add(x);
    mv.mean = s.value() / static_cast<double>(n);
    if (n < 2) return mv;
    CompensatedSum q;
    for (double x : v) {
        const double c = x - mv.mean;
        q.add(c * c);
    }
    mv.var = q.value() / static_cast<double>(n - 1);
    return mv;
}

// Central moments 2..4 (population normalization, used for shape statistics).
struct ShapeMoments {
    double mean = 0.0, m2 = 0.0, m3 = 0.0, m4 = 0.0;
};

inline ShapeMoments shape_moments(const double* v, std::size_t n) {
    ShapeMoments sm;
    if (n == 0) return sm;
    CompensatedSum s;
    for (std::size_t i = 0; i < n; ++i) s.add(v[i]);
    sm.mean = s.value() / static_cast<double>(n);
    CompensatedSum q2, q3, q4;
    for (std::size_t i = 0; i < n; ++i) {
        const double c = v[i] - sm.mean;
        const double c2 = c * c;
        q2.add(c2);
        q3.add(c2 * c);
        q4.add(c2 * c2);
    }
    sm.m2 = q2.value() / static_cast<double>(n);
    sm.m3 = q3.value() / static_cast<double>(n);
    sm.m4 = q4.value() / static_cast<double>(n);
    return sm;
}

}  // namespace detail

/// Generate n correlated fluctuation pairs.  Bit-identical for equal
/// (model, n, seed, generator_id) regardless of worker count: sample i is a
/// pure function of (seed, i).
inline SampleBatch generate(const TwinBeamModel& m, std::size_t n, std::uint64_t seed,
                            int n_workers = 1) {
    m.validate();
    if (n < 1) throw std::invalid_argument("generate: n_samples must be >= 1");
    if (n_workers < 1) n_workers = 1;

    const double sqrt_r = std::sqrt(m.loss_r);
    const double sqrt_t = std::sqrt(1.0 - m.loss_r);
    const double shot = std::sqrt(m.n_bar);            // std of X, Y
    const double excess = std::sqrt(m.fano_f * m.n_bar);  // std of C

    SampleBatch batch;
    batch.seed = seed;
    batch.signal.resize(n);
    batch.idler.resize(n);

    const CounterRng rng_x(seed, 0), rng_y(seed, 1), rng_c(seed, 2);
    auto fill = [&](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) {
            const double x = shot * rng_x.normal(i);
            const double y = shot * rng_y.normal(i);
            const double c = excess * rng_c.normal(i);
            batch.signal[i] = sqrt_t * (sqrt_r * x + sqrt_t * c);
            batch.idler[i] = sqrt_t * (sqrt_r * y + sqrt_t * c);
        }
    };

    if (n_workers == 1 || n < 2 * static_cast<std::size_t>(n_workers)) {
        fill(0, n);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(n_workers));
        const std::size_t chunk = (n + static_cast<std::size_t>(n_workers) - 1) /
                                  static_cast<std::size_t>(n_workers);
        for (int w = 0; w < n_workers; ++w) {
            const std::size_t lo = static_cast<std::size_t>(w) * chunk;
            const std::size_t hi = std::min(n, lo + chunk);
            if (lo >= hi) break;
            pool.emplace_back(fill, lo, hi);
        }
        for (auto& th : pool) th.join();
    }
    return batch;
}

/// Gemellity estimator: Var(e1 - e2) / (2 n_bar'), unbiased sample variance,
/// with the Gaussian asymptotic standard error of a variance.
inline EstimateWithError estimate_gemellity(const SampleBatch& batch, const TwinBeamModel& m) {
    const std::size_t n = batch.n_samples();
    if (n < 100) throw std::invalid_argument("estimate_gemellity: need at least 100 samples");
    const DerivedParams d = derive(m);
    if (!(d.n_bar_prime > 0.0))
        throw std::invalid_argument("estimate_gemellity: n_bar_prime is zero");
    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = batch.signal[i] - batch.idler[i];
    const auto mv = detail::mean_var(diff);
    EstimateWithError e;
    e.value = mv.var / (2.0 * d.n_bar_prime);
    e.std_error = e.value * std::sqrt(2.0 / static_cast<double>(n - 1));
    e.n_used = n;
    e.degenerate = (mv.var == 0.0);
    return e;
}

enum class BeamSide { signal, idler };

/// Fano-factor estimator of one beam: Var(eps) / n_bar'.
inline EstimateWithError estimate_fano(const SampleBatch& batch, BeamSide side,
                                       const TwinBeamModel& m) {
    const std::size_t n = batch.n_samples();
    if (n < 100) throw std::invalid_argument("estimate_fano: need at least 100 samples");
    const DerivedParams d = derive(m);
    if (!(d.n_bar_prime > 0.0))
        throw std::invalid_argument("estimate_fano: n_bar_prime is zero");
    const auto& v = side == BeamSide::signal ? batch.signal : batch.idler;
    const auto mv = detail::mean_var(v);
    EstimateWithError e;
    e.value = mv.var / d.n_bar_prime;
    e.std_error = e.value * std::sqrt(2.0 / static_cast<double>(n - 1));
    e.n_used = n;
    e.degenerate = (mv.var == 0.0);
    return e;
}

/// Signal samples surviving one band's post-selection, with the
/// preparation-probability estimate (binomial standard error).
struct Selection {
    SelectionBand band{};
    std::vector<double> signal;
    EstimateWithError prep_prob;
};

inline Selection select(const SampleBatch& batch, const SelectionBand& band) {
    band.validate();
    const std::size_t n = batch.n_samples();
    Selection sel;
    sel.band = band;
    const double lo = band.lo(), hi = band.hi();
    for (std::size_t i = 0; i < n; ++i)
        if (batch.idler[i] >= lo && batch.idler[i] <= hi) sel.signal.push_back(batch.signal[i]);
    const double p = static_cast<double>(sel.signal.size()) / static_cast<double>(n);
    sel.prep_prob.value = p;
    sel.prep_prob.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(n));
    sel.prep_prob.n_used = sel.signal.size();
    sel.prep_prob.degenerate = sel.signal.empty();
    return sel;
}

inline std::vector<Selection> select(const SampleBatch& batch,
                                     const std::vector<SelectionBand>& bands) {
    require_disjoint(bands);
    std::vector<Selection> out;
    out.reserve(bands.size());
    for (const auto& b : bands) out.push_back(select(batch, b));
    return out;
}

/// Reduced-state statistics of a selection, with bootstrap standard errors
/// (fixed resample count, seeded from the batch seed).
struct McReducedReport {
    double mean_shift = 0.0, mean_shift_se = 0.0;
    double fano = 0.0, fano_se = 0.0;
    double skewness = 0.0, skewness_se = 0.0;
    double kurtosis = 0.0, kurtosis_se = 0.0;
    double prep_prob = 0.0, prep_prob_se = 0.0;
    std::size_t n_used = 0;
    bool sufficient = false;  ///< n_used >= 100
};

namespace detail {

struct FourStats {
    double mean, fano, skew, kurt;
};

inline FourStats four_stats(const double* v, std::size_t n, double n_bar_prime) {
    const ShapeMoments sm = shape_moments(v, n);
    FourStats fs{};
    fs.mean = sm.mean;
    // unbiased variance for the Fano estimate, population moments for shape
    fs.fano = n > 1 ? sm.m2 * static_cast<double>(n) / static_cast<double>(n - 1) / n_bar_prime
                    : 0.0;
    fs.skew = sm.m2 > 0.0 ? sm.m3 / std::pow(sm.m2, 1.5) : 0.0;
    fs.kurt = sm.m2 > 0.0 ? sm.m4 / (sm.m2 * sm.m2) : 0.0;
    return fs;
}

}  // namespace detail

inline McReducedReport estimate_reduced(const Selection& sel, const TwinBeamModel& m,
                                        std::uint64_t batch_seed) {
    const DerivedParams d = derive(m);
    if (!(d.n_bar_prime > 0.0))
        throw std::invalid_argument("estimate_reduced: n_bar_prime is zero");
    McReducedReport rep;
    rep.n_used = sel.signal.size();
    rep.prep_prob = sel.prep_prob.value;
    rep.prep_prob_se = sel.prep_prob.std_error;
    rep.sufficient = rep.n_used >= 100;
    if (rep.n_used < 4) {
        const double nan = std::numeric_limits<double>::quiet_NaN();
        rep.mean_shift = rep.fano = rep.skewness = rep.kurtosis = nan;
        rep.mean_shift_se = rep.fano_se = rep.skewness_se = rep.kurtosis_se = nan;
        return rep;
    }

    const std::size_t n = rep.n_used;
    const auto point = detail::four_stats(sel.signal.data(), n, d.n_bar_prime);
    rep.mean_shift = point.mean;
    rep.fano = point.fano;
    rep.skewness = point.skew;
    rep.kurtosis = point.kurt;

    const CounterRng rng(batch_seed, 0xB007);
    std::vector<double> resample(n);
    std::vector<detail::FourStats> stats(kBootstrapResamples);
    std::uint64_t ctr = 0;
    for (int b = 0; b < kBootstrapResamples; ++b) {
        for (std::size_t j = 0; j < n; ++j) {
            const std::size_t idx =
                static_cast<std::size_t>(rng.u01(ctr++) * static_cast<double>(n));
            resample[j] = sel.signal[idx < n ? idx : n - 1];
        }
        stats[static_cast<std::size_t>(b)] = detail::four_stats(resample.data(), n, d.n_bar_prime);
    }
    auto sd_of = [&](auto member) {
        std::vector<double> vals(stats.size());
        for (std::size_t i = 0; i < stats.size(); ++i) vals[i] = stats[i].*member;
        return std::sqrt(detail::mean_var(vals).var);
    };
    rep.mean_shift_se = sd_of(&detail::FourStats::mean);
    rep.fano_se = sd_of(&detail::FourStats::fano);
    rep.skewness_se = sd_of(&detail::FourStats::skew);
    rep.kurtosis_se = sd_of(&detail::FourStats::kurt);
    return rep;
}

// ---------------------------------------------------------------------------
// Batch export: CSV of (signal, idler) columns behind a comment header that
// carries the model parameters and seed.  Recorded experimental data in the
// same format goes through the identical post-selection path.

inline void write_batch_csv(const SampleBatch& batch, const TwinBeamModel& m, std::ostream& os) {
    char buf[64];
    auto put = [&](const char* key, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        os << "# " << key << " = " << buf << "\n";
    };
    os << "# twinsel batch v1\n";
    put("n_bar", m.n_bar);
    put("fano_f", m.fano_f);
    put("loss_r", m.loss_r);
    os << "# seed = " << batch.seed << "\n";
    os << "# generator_id = " << batch.generator_id << "\n";
    os << "# n_samples = " << batch.n_samples() << "\n";
    os << "signal,idler\n";
    for (std::size_t i = 0; i < batch.n_samples(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", batch.signal[i]);
        os << buf << ",";
        std::snprintf(buf, sizeof buf, "%.17g", batch.idler[i]);
        os << buf << "\n";
    }
}

inline SampleBatch read_batch_csv(std::istream& is, TwinBeamModel* model_out = nullptr) {
    SampleBatch batch;
    TwinBeamModel m{};
    std::string line;
    bool saw_header = false;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto eq = line.find('=');
            if (eq == std::string::npos) continue;
            std::string key = line.substr(1, eq - 1);
            key.erase(0, key.find_first_not_of(" \t"));
            key.erase(key.find_last_not_of(" \t") + 1);
            const std::string val = line.substr(eq + 1);
            if (key == "n_bar") m.n_bar = std::stod(val);
            else if (key == "fano_f") m.fano_f = std::stod(val);
            else if (key == "loss_r") m.loss_r = std::stod(val);
            else if (key == "seed") batch.seed = std::stoull(val);
            else if (key == "generator_id") {
                batch.generator_id = val;
                batch.generator_id.erase(0, batch.generator_id.find_first_not_of(" \t"));
            }
            continue;
        }
        if (!saw_header) {  // column header row
            saw_header = true;
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::runtime_error("read_batch_csv: malformed data row: " + line);
        batch.signal.push_back(std::stod(line.substr(0, comma)));
        batch.idler.push_back(std::stod(line.substr(comma + 1)));
    }
    if (model_out) *model_out = m;
    return batch;
}

}  // namespace twinsel
