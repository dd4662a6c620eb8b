#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "twinsel/model.hpp"

// Run configuration: flat key = value text with [section] headers, one file
// per run.  All defaults mirror the experimental point F' = 100, G = 0.18.

namespace twinsel {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Layer { analytic, oracle, montecarlo, crosscheck };
enum class OutputFormat { csv, json };

/// Band given in sigma units, as in every figure caption.
struct SigmaBand {
    double alpha_sigma = 0.0;
    double delta_sigma = 0.0;
};

struct RunConfig {
    // exactly one parameterization may be present; absent means the default
    // observables point (n_bar' = 1e6, F' = 100, G = 0.18)
    std::optional<TwinBeamModel> source_params;
    struct Observables {
        double n_bar_prime = 1e6;
        double fano_prime = 100.0;
        double gemellity = 0.18;
    };
    std::optional<Observables> observables;

    std::vector<SigmaBand> bands;

    struct Sweep {
        std::string param;
        double min = 0.0;
        double max = 0.0;
        int steps = 0;
    };
    std::optional<Sweep> sweep;

    Layer layer = Layer::analytic;
    std::uint64_t seed = 1;
    std::size_t mc_samples = 1'000'000;
    int workers = 1;
    std::vector<double> oracle_nbars{100.0, 400.0, 1600.0};
    std::string out;
    OutputFormat format = OutputFormat::csv;
};

inline const std::vector<std::string>& known_sweep_params() {
    static const std::vector<std::string> params{"n_bar",      "fano_f",     "loss_r",
                                                 "n_bar_prime", "fano_prime", "gemellity",
                                                 "alpha_sigma", "delta_sigma"};
    return params;
}

namespace detail {

inline double to_double(const std::string& key, const std::string& v) {
    try {
        std::size_t pos = 0;
        const double x = std::stod(v, &pos);
        while (pos < v.size() && std::isspace(static_cast<unsigned char>(v[pos]))) ++pos;
        if (pos != v.size()) throw std::invalid_argument(v);
        return x;
    } catch (const std::exception&) {
        throw ConfigError("config: bad numeric value for '" + key + "': " + v);
    }
}

inline std::string trim(std::string s) {
    s.erase(0, s.find_first_not_of(" \t\r"));
    s.erase(s.find_last_not_of(" \t\r") + 1);
    return s;
}

}  // namespace detail

inline RunConfig parse_config(std::istream& is) {
    RunConfig cfg;
    std::string section;
    std::string line;
    int lineno = 0;
    bool saw_source = false, saw_obs = false;
    TwinBeamModel src{};
    RunConfig::Observables obs{};
    RunConfig::Sweep sweep{};
    bool saw_sweep = false;

    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("config line " + std::to_string(lineno) + ": malformed section");
            section = detail::trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string val = detail::trim(line.substr(eq + 1));

        if (section == "model") {
            if (key == "n_bar") { src.n_bar = detail::to_double(key, val); saw_source = true; }
            else if (key == "fano_f") { src.fano_f = detail::to_double(key, val); saw_source = true; }
            else if (key == "loss_r") { src.loss_r = detail::to_double(key, val); saw_source = true; }
            else if (key == "n_bar_prime") { obs.n_bar_prime = detail::to_double(key, val); saw_obs = true; }
            else if (key == "fano_prime") { obs.fano_prime = detail::to_double(key, val); saw_obs = true; }
            else if (key == "gemellity") { obs.gemellity = detail::to_double(key, val); saw_obs = true; }
            else throw ConfigError("config: unknown [model] key '" + key + "'");
        } else if (section == "bands") {
            if (key != "band") throw ConfigError("config: unknown [bands] key '" + key + "'");
            std::istringstream bs(val);
            SigmaBand b{};
            if (!(bs >> b.alpha_sigma >> b.delta_sigma))
                throw ConfigError("config: band wants '<alpha_sigma> <delta_sigma>', got: " + val);
            cfg.bands.push_back(b);
        } else if (section == "sweep") {
            saw_sweep = true;
            if (key == "param") sweep.param = val;
            else if (key == "min") sweep.min = detail::to_double(key, val);
            else if (key == "max") sweep.max = detail::to_double(key, val);
            else if (key == "steps") sweep.steps = static_cast<int>(detail::to_double(key, val));
            else throw ConfigError("config: unknown [sweep] key '" + key + "'");
        } else if (section == "run" || section.empty()) {
            if (key == "layer") {
                if (val == "analytic") cfg.layer = Layer::analytic;
                else if (val == "oracle") cfg.layer = Layer::oracle;
                else if (val == "montecarlo") cfg.layer = Layer::montecarlo;
                else if (val == "crosscheck") cfg.layer = Layer::crosscheck;
                else throw ConfigError("config: unknown layer '" + val + "'");
            } else if (key == "seed") {
                try {
                    cfg.seed = std::stoull(val);
                } catch (const std::exception&) {
                    throw ConfigError("config: bad seed: " + val);
                }
            } else if (key == "samples") {
                cfg.mc_samples = static_cast<std::size_t>(detail::to_double(key, val));
            } else if (key == "workers") {
                cfg.workers = static_cast<int>(detail::to_double(key, val));
            } else if (key == "out") {
                cfg.out = val;
            } else if (key == "format") {
                if (val == "csv") cfg.format = OutputFormat::csv;
                else if (val == "json") cfg.format = OutputFormat::json;
                else throw ConfigError("config: unknown format '" + val + "'");
            } else if (key == "oracle_nbars") {
                cfg.oracle_nbars.clear();
                std::istringstream ns(val);
                double x;
                while (ns >> x) cfg.oracle_nbars.push_back(x);
                if (cfg.oracle_nbars.empty())
                    throw ConfigError("config: oracle_nbars wants a list of photon numbers");
            } else {
                throw ConfigError("config: unknown [run] key '" + key + "'");
            }
        } else {
            throw ConfigError("config: unknown section [" + section + "]");
        }
    }

    if (saw_source && saw_obs)
        throw ConfigError("config: give either (n_bar, fano_f, loss_r) or "
                          "(n_bar_prime, fano_prime, gemellity), not both");
    if (saw_source) cfg.source_params = src;
    if (saw_obs) cfg.observables = obs;

    if (saw_sweep) {
        bool known = false;
        for (const auto& p : known_sweep_params()) known = known || p == sweep.param;
        if (!known) throw ConfigError("config: unknown sweep param '" + sweep.param + "'");
        if (sweep.steps < 2) throw ConfigError("config: sweep needs steps >= 2");
        if (!(sweep.max > sweep.min)) throw ConfigError("config: sweep needs max > min");
        cfg.sweep = sweep;
    }
    return cfg;
}

/// The model a config describes; the default is the experimental point.
inline TwinBeamModel resolve_model(const RunConfig& cfg) {
    if (cfg.source_params) {
        TwinBeamModel m = *cfg.source_params;
        try {
            m.validate();
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        return m;
    }
    const RunConfig::Observables obs = cfg.observables.value_or(RunConfig::Observables{});
    try {
        return model_from_observables(obs.n_bar_prime, obs.fano_prime, obs.gemellity);
    } catch (const std::exception& e) {
        throw ConfigError(std::string("config: ") + e.what());
    }
}

}  // namespace twinsel
