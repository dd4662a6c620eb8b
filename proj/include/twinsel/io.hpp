#pragma once

#include <cstdio>
#include <ctime>
#include <fstream>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "twinsel/config.hpp"

// Tidy numeric tables, one row per x-value.  Data files are deterministic:
// floats carry 17 significant digits, lines end in LF, and anything
// time-dependent goes to a sidecar metadata file next to the data.

namespace twinsel {

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row) {
        if (row.size() != columns.size())
            throw std::invalid_argument("Table: row width does not match columns");
        rows.push_back(std::move(row));
    }
};

inline std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_csv(const Table& t, std::ostream& os) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        os << (i ? "," : "") << t.columns[i];
    os << "\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << format_double(row[i]);
        os << "\n";
    }
}

inline void write_json(const Table& t, std::ostream& os) {
    nlohmann::json j;
    j["columns"] = t.columns;
    j["rows"] = t.rows;
    os << j.dump(2) << "\n";
}

inline void write_table(const Table& t, std::ostream& os, OutputFormat fmt) {
    if (fmt == OutputFormat::csv)
        write_csv(t, os);
    else
        write_json(t, os);
}

/// Write the table to `path` and run metadata (timestamp, tool, config echo)
/// to `path + ".meta"`, keeping the data file byte-reproducible.
inline void write_table_file(const Table& t, const std::string& path, OutputFormat fmt,
                             const std::string& config_echo) {
    {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open output file: " + path);
        write_table(t, os, fmt);
    }
    nlohmann::json meta;
    char stamp[64];
    std::time_t now = std::time(nullptr);
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    meta["written_at"] = stamp;
    meta["tool"] = "twinsel";
    meta["config"] = config_echo;
    std::ofstream ms(path + ".meta", std::ios::binary);
    if (ms) ms << meta.dump(2) << "\n";
}

}  // namespace twinsel
