// twinsel: sweep harness over the twin-beam conditional-preparation engine.
//
// Subcommands
//   figure      tidy tables behind the standard plots (3..8)
//   crosscheck  oracle-vs-analytic and MC-vs-analytic validation report
//   simulate    sample batch export + per-band reduced-state estimates
//   sweep       generic parameter sweep of derived quantities and bands
//
// Exit codes: 0 success, 1 check failure, 2 configuration error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "twinsel/analytic.hpp"
#include "twinsel/config.hpp"
#include "twinsel/crosscheck.hpp"
#include "twinsel/io.hpp"
#include "twinsel/montecarlo.hpp"

namespace {

using namespace twinsel;

struct CliOptions {
    std::string config_path;
    std::string out;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> format;
    int fig = 0;
};

RunConfig load_config(const CliOptions& opt) {
    RunConfig cfg;
    if (!opt.config_path.empty()) {
        std::ifstream is(opt.config_path);
        if (!is) throw ConfigError("cannot open config file: " + opt.config_path);
        cfg = parse_config(is);
    }
    if (opt.seed) cfg.seed = *opt.seed;
    if (opt.format) {
        if (*opt.format == "csv") cfg.format = OutputFormat::csv;
        else if (*opt.format == "json") cfg.format = OutputFormat::json;
        else throw ConfigError("unknown format '" + *opt.format + "'");
    }
    if (!opt.out.empty()) cfg.out = opt.out;
    return cfg;
}

std::string config_echo(const CliOptions& opt) {
    if (opt.config_path.empty()) return "(defaults)";
    std::ifstream is(opt.config_path);
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

// Default output location: the name goes under $TWINSEL_OUT_DIR when set.
std::string default_out(const std::string& name) {
    if (const char* dir = std::getenv("TWINSEL_OUT_DIR"); dir && *dir)
        return std::string(dir) + "/" + name;
    return name;
}

std::string effective_out(const RunConfig& cfg, const std::string& fallback_name) {
    return cfg.out.empty() ? default_out(fallback_name) : cfg.out;
}

std::string replace_extension(const std::string& path, const std::string& suffix) {
    const auto slash = path.find_last_of('/');
    const auto dot = path.find_last_of('.');
    if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
        return path + suffix;
    return path.substr(0, dot) + suffix;
}

std::vector<double> linspace(double lo, double hi, int steps) {
    std::vector<double> v(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (steps - 1);
    return v;
}

// Sweep range for a figure axis: the config sweep when it names this
// parameter, the figure's standard range otherwise.
std::vector<double> figure_axis(const RunConfig& cfg, const std::string& param, double lo,
                                double hi, int steps) {
    if (!cfg.sweep) return linspace(lo, hi, steps);
    if (cfg.sweep->param != param)
        throw ConfigError("this figure sweeps '" + param + "', config sweeps '" +
                          cfg.sweep->param + "'");
    return linspace(cfg.sweep->min, cfg.sweep->max, cfg.sweep->steps);
}

ReducedStateReport analytic_band_report(const TwinBeamModel& m, const SelectionBand& band) {
    if (band.delta == 0.0) return conditional_single_value(m, band.alpha).second;
    return reduced_moments(band_pdf_exact(m, band));
}

int cmd_figure(const CliOptions& opt) {
    const RunConfig cfg = load_config(opt);
    const TwinBeamModel model = resolve_model(cfg);
    const DerivedParams d = derive(model);
    Table t;

    switch (opt.fig) {
        case 3: {
            // conditional variance vs the source Fano factor, one curve per G
            const std::vector<double> gs{0.1, 0.18, 0.5};
            t.columns = {"fano_f", "vc_g0.1", "vc_g0.18", "vc_g0.5"};
            for (double f : figure_axis(cfg, "fano_f", 1.0, 200.0, 200)) {
                std::vector<double> row{f};
                for (double g : gs)
                    row.push_back(derive(TwinBeamModel{model.n_bar, f, g}).cond_variance);
                t.add_row(std::move(row));
            }
            break;
        }
        case 4: {
            // band-selected distributions, peak-normalized, common eps axis
            const std::vector<SelectionBand> cases{
                band_from_sigma_units(0.0, 0.1, d), band_from_sigma_units(0.0, 10.0, d),
                band_from_sigma_units(10.0, 0.1, d), band_from_sigma_units(10.0, 10.0, d)};
            t.columns = {"eps_sigma", "case_a", "case_b", "case_c", "case_d",
                         "initial",  "coherent"};
            const double span = 4.5 * std::sqrt(d.fano_fprime);
            std::vector<std::vector<double>> cols(cases.size());
            const auto axis = figure_axis(cfg, "alpha_sigma", -span, span, 1201);
            for (std::size_t c = 0; c < cases.size(); ++c) {
                double peak = 0.0;
                auto& col = cols[c];
                col.reserve(axis.size());
                for (double x : axis) {
                    col.push_back(band_density_exact(d, cases[c], x * d.sigma));
                    peak = std::max(peak, col.back());
                }
                for (double& v : col) v /= peak;
            }
            for (std::size_t i = 0; i < axis.size(); ++i) {
                const double x = axis[i];
                t.add_row({x, cols[0][i], cols[1][i], cols[2][i], cols[3][i],
                           std::exp(-x * x / (2.0 * d.fano_fprime)), std::exp(-x * x / 2.0)});
            }
            break;
        }
        case 5: {
            t.columns = {"delta_sigma", "kurtosis"};
            for (double ds : figure_axis(cfg, "delta_sigma", 0.1, 12.0, 120)) {
                const auto rep = analytic_band_report(model, band_from_sigma_units(0.0, ds, d));
                t.add_row({ds, rep.kurtosis});
            }
            break;
        }
        case 6: {
            t.columns = {"delta_sigma", "fano", "prep_prob"};
            for (double ds : figure_axis(cfg, "delta_sigma", 0.01, 2.0, 100)) {
                const SelectionBand band = band_from_sigma_units(0.0, ds, d);
                const auto rep = analytic_band_report(model, band);
                t.add_row({ds, rep.fano, prep_prob_band(model, band)});
            }
            break;
        }
        case 7: {
            const double ds = cfg.bands.empty() ? 0.1 : cfg.bands.front().delta_sigma;
            t.columns = {"alpha_sigma", "prep_prob"};
            for (double as : figure_axis(cfg, "alpha_sigma", -40.0, 40.0, 161))
                t.add_row({as, prep_prob_band(model, band_from_sigma_units(as, ds, d))});
            break;
        }
        case 8: {
            // multi-band selection; default is the 2-sigma spacing layout
            std::vector<SelectionBand> bands;
            if (!cfg.bands.empty()) {
                for (const auto& b : cfg.bands)
                    bands.push_back(band_from_sigma_units(b.alpha_sigma, b.delta_sigma, d));
            } else {
                for (double as = -10.0; as <= 10.0 + 1e-9; as += 2.0)
                    bands.push_back(band_from_sigma_units(as, 0.2, d));
            }
            const auto mb = multiband_report(model, bands);
            const bool with_mc = cfg.layer == Layer::montecarlo;
            t.columns = {"alpha_sigma", "delta_sigma", "fano", "prep_prob",
                         "aggregate_efficiency"};
            std::vector<McReducedReport> mc;
            if (with_mc) {
                const auto batch = generate(model, cfg.mc_samples, cfg.seed, cfg.workers);
                for (const auto& sel : select(batch, bands))
                    mc.push_back(estimate_reduced(sel, model, batch.seed));
                t.columns.insert(t.columns.end(),
                                 {"mc_fano", "mc_fano_se", "mc_prep_prob", "mc_prep_prob_se"});
            }
            for (std::size_t i = 0; i < bands.size(); ++i) {
                std::vector<double> row{bands[i].alpha_sigma(d), bands[i].delta_sigma(d),
                                        mb.bands[i].fano, mb.bands[i].prep_prob,
                                        mb.aggregate_efficiency};
                if (with_mc)
                    row.insert(row.end(), {mc[i].fano, mc[i].fano_se, mc[i].prep_prob,
                                           mc[i].prep_prob_se});
                t.add_row(std::move(row));
            }
            break;
        }
        default:
            throw ConfigError("unknown figure id " + std::to_string(opt.fig) +
                              " (supported: 3..8)");
    }

    const std::string ext = cfg.format == OutputFormat::csv ? ".csv" : ".json";
    const std::string out = effective_out(cfg, "figure" + std::to_string(opt.fig) + ext);
    write_table_file(t, out, cfg.format, config_echo(opt));
    std::cout << "wrote " << out << " (" << t.rows.size() << " rows)\n";
    return 0;
}

int cmd_crosscheck(const CliOptions& opt) {
    const RunConfig cfg = load_config(opt);
    CrosscheckConfig cc;
    cc.oracle_nbars = cfg.oracle_nbars;
    cc.mc_samples = cfg.mc_samples;
    cc.seed = cfg.seed;
    const DerivedParams d = derive(resolve_model(cfg));
    cc.n_bar_prime = d.n_bar_prime;
    cc.fano_prime = d.fano_fprime;
    cc.gemellity = d.gemellity;

    const auto results = run_crosschecks(cc);

    std::ostringstream report;
    if (cfg.format == OutputFormat::csv) {
        report << "check,expected,got,tolerance,verdict\n";
        for (const auto& r : results)
            report << r.name << "," << format_double(r.expected) << "," << format_double(r.got)
                   << "," << format_double(r.tolerance) << "," << (r.pass ? "pass" : "FAIL")
                   << "\n";
    } else {
        nlohmann::json j = nlohmann::json::array();
        for (const auto& r : results)
            j.push_back({{"check", r.name},
                         {"expected", r.expected},
                         {"got", r.got},
                         {"tolerance", r.tolerance},
                         {"verdict", r.pass ? "pass" : "FAIL"}});
        report << j.dump(2) << "\n";
    }

    if (cfg.out.empty()) {
        std::cout << report.str();
    } else {
        std::ofstream os(cfg.out, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open output file: " + cfg.out);
        os << report.str();
    }

    std::size_t failed = 0;
    for (const auto& r : results)
        if (!r.pass) ++failed;
    std::cerr << results.size() - failed << "/" << results.size() << " checks passed\n";
    return failed == 0 ? 0 : 1;
}

int cmd_simulate(const CliOptions& opt) {
    RunConfig cfg = load_config(opt);
    const TwinBeamModel model = resolve_model(cfg);
    const DerivedParams d = derive(model);
    if (cfg.bands.empty()) cfg.bands.push_back(SigmaBand{0.0, 0.1});

    std::vector<SelectionBand> bands;
    for (const auto& b : cfg.bands)
        bands.push_back(band_from_sigma_units(b.alpha_sigma, b.delta_sigma, d));
    require_disjoint(bands);

    const auto batch = generate(model, cfg.mc_samples, cfg.seed, cfg.workers);

    const std::string ext = cfg.format == OutputFormat::csv ? ".csv" : ".json";
    const std::string out = effective_out(cfg, "simulate" + ext);
    const std::string batch_path = replace_extension(out, ".batch.csv");
    {
        std::ofstream os(batch_path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open output file: " + batch_path);
        write_batch_csv(batch, model, os);
    }

    Table t;
    t.columns = {"alpha_sigma", "delta_sigma",  "n_used",      "sufficient",  "prep_prob",
                 "prep_prob_se", "mean_shift",  "mean_shift_se", "fano",      "fano_se",
                 "skewness",    "skewness_se",  "kurtosis",    "kurtosis_se"};
    for (const auto& sel : select(batch, bands)) {
        const auto rep = estimate_reduced(sel, model, batch.seed);
        t.add_row({sel.band.alpha_sigma(d), sel.band.delta_sigma(d),
                   static_cast<double>(rep.n_used), rep.sufficient ? 1.0 : 0.0, rep.prep_prob,
                   rep.prep_prob_se, rep.mean_shift, rep.mean_shift_se, rep.fano, rep.fano_se,
                   rep.skewness, rep.skewness_se, rep.kurtosis, rep.kurtosis_se});
    }
    write_table_file(t, out, cfg.format, config_echo(opt));
    std::cout << "wrote " << out << " and " << batch_path << "\n";
    return 0;
}

int cmd_sweep(const CliOptions& opt) {
    const RunConfig cfg = load_config(opt);
    if (!cfg.sweep) throw ConfigError("sweep: config needs a [sweep] section");
    if (cfg.layer != Layer::analytic && cfg.layer != Layer::montecarlo)
        throw ConfigError("sweep: layer must be analytic or montecarlo");
    const TwinBeamModel base = resolve_model(cfg);
    const std::string& param = cfg.sweep->param;

    std::vector<SigmaBand> bands = cfg.bands;
    if (bands.empty()) bands.push_back(SigmaBand{0.0, 0.1});

    Table t;
    t.columns = {param,       "transmission", "n_bar_prime", "fano_prime",
                 "gemellity", "beta",         "cond_variance"};
    for (std::size_t i = 0; i < bands.size(); ++i) {
        const std::string p = "band" + std::to_string(i) + "_";
        if (cfg.layer == Layer::analytic)
            t.columns.insert(t.columns.end(),
                             {p + "fano", p + "prep_prob", p + "mean_shift"});
        else
            t.columns.insert(t.columns.end(), {p + "fano", p + "fano_se", p + "prep_prob",
                                               p + "prep_prob_se", p + "mean_shift",
                                               p + "mean_shift_se"});
    }

    std::uint64_t step_index = 0;
    for (double x : linspace(cfg.sweep->min, cfg.sweep->max, cfg.sweep->steps)) {
        TwinBeamModel m = base;
        std::vector<SigmaBand> bs = bands;
        if (param == "n_bar") m.n_bar = x;
        else if (param == "fano_f") m.fano_f = x;
        else if (param == "loss_r") m.loss_r = x;
        else if (param == "alpha_sigma") for (auto& b : bs) b.alpha_sigma = x;
        else if (param == "delta_sigma") for (auto& b : bs) b.delta_sigma = x;
        else {
            const DerivedParams db = derive(base);
            double npb = db.n_bar_prime, fpb = db.fano_fprime, gb = db.gemellity;
            if (param == "n_bar_prime") npb = x;
            else if (param == "fano_prime") fpb = x;
            else if (param == "gemellity") gb = x;
            m = model_from_observables(npb, fpb, gb);
        }
        const DerivedParams dm = derive(m);
        std::vector<double> row{x,       dm.transmission,  dm.n_bar_prime, dm.fano_fprime,
                                dm.gemellity, dm.beta,     dm.cond_variance};

        if (cfg.layer == Layer::analytic) {
            for (const auto& b : bs) {
                const SelectionBand band = band_from_sigma_units(b.alpha_sigma, b.delta_sigma, dm);
                const auto rep = analytic_band_report(m, band);
                const double prep =
                    band.delta == 0.0 ? rep.prep_prob : prep_prob_band(m, band);
                row.insert(row.end(), {rep.fano, prep, rep.mean_shift});
            }
        } else {
            const auto batch = generate(m, cfg.mc_samples, cfg.seed + step_index, cfg.workers);
            for (const auto& b : bs) {
                const SelectionBand band = band_from_sigma_units(b.alpha_sigma, b.delta_sigma, dm);
                const auto rep = estimate_reduced(select(batch, band), m, batch.seed);
                row.insert(row.end(), {rep.fano, rep.fano_se, rep.prep_prob, rep.prep_prob_se,
                                       rep.mean_shift, rep.mean_shift_se});
            }
        }
        t.add_row(std::move(row));
        ++step_index;
    }

    const std::string ext = cfg.format == OutputFormat::csv ? ".csv" : ".json";
    const std::string out = effective_out(cfg, "sweep_" + param + ext);
    write_table_file(t, out, cfg.format, config_echo(opt));
    std::cout << "wrote " << out << " (" << t.rows.size() << " rows)\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"twin-beam conditional state preparation: analytic, exact and "
                 "Monte-Carlo layers"};
    app.require_subcommand(1);

    CliOptions opt;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opt.config_path, "run configuration file (key = value)");
        sub->add_option("--out", opt.out, "output path (default goes to $TWINSEL_OUT_DIR)");
        sub->add_option("--seed", opt.seed, "RNG seed override");
        sub->add_option("--format", opt.format, "output format: csv or json");
    };

    auto* fig = app.add_subcommand("figure", "write a table behind one of the standard figures");
    fig->add_option("--fig", opt.fig, "figure id, 3..8")->required();
    add_common(fig);
    auto* chk = app.add_subcommand("crosscheck", "run the layer cross-validation report");
    add_common(chk);
    auto* sim = app.add_subcommand("simulate", "generate, post-select and export a sample batch");
    add_common(sim);
    auto* swp = app.add_subcommand("sweep", "sweep one parameter and tabulate the results");
    add_common(swp);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (fig->parsed()) return cmd_figure(opt);
        if (chk->parsed()) return cmd_crosscheck(opt);
        if (sim->parsed()) return cmd_simulate(opt);
        if (swp->parsed()) return cmd_sweep(opt);
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
