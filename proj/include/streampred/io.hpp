// CSV stream ingestion, run configuration parsing, and the batch run
// orchestration used by the command-line front end.
#pragma once

#include <charconv>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "streampred/core.hpp"
#include "streampred/harness.hpp"

namespace streampred {

inline constexpr const char* kLibraryVersion = "0.1.0";

// Locale-independent numeric formatting, 12 significant digits.
inline std::string format12(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v,
                                   std::chars_format::general, 12);
    if (ec != std::errc{}) throw numeric_error("number formatting failed");
    return std::string(buf, ptr);
}

namespace detail {

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

// One CSV record; handles quoted fields with doubled-quote escapes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline double parse_cell(const std::string& cell, std::size_t row,
                         const std::string& column) {
    const std::string t = trim(cell);
    double v = 0.0;
    const char* begin = t.c_str();
    const char* end = begin + t.size();
    auto [ptr, ec] = std::from_chars(begin, end, v);
    if (ec != std::errc{} || ptr != end)
        throw data_error("non-numeric cell in column '" + column + "' at data row " +
                         std::to_string(row) + ": '" + t + "'");
    if (!std::isfinite(v))
        throw ingestion_error("non-finite value in column '" + column +
                              "' at data row " + std::to_string(row));
    return v;
}

}  // namespace detail

struct IngestResult {
    std::vector<Observation> observations;
    std::size_t rows_scanned = 0;
};

// Reads the first max_rows values of the named column (header required).
// `column` may be a product expression "a*b" of two column names.
inline IngestResult ingest_csv(const std::filesystem::path& path,
                               const std::string& column, std::size_t max_rows) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open input file: " + path.string());
    if (max_rows == 0) throw config_error("max_rows must be positive");
    std::string line;
    if (!std::getline(in, line)) throw data_error("empty input file: " + path.string());
    const auto header = detail::split_csv_line(line);
    auto find_col = [&](const std::string& name) {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (detail::trim(header[i]) == name) return i;
        throw data_error("column '" + name + "' not found in " + path.string());
    };
    std::size_t col_a = 0, col_b = 0;
    bool product = false;
    if (const auto star = column.find('*'); star != std::string::npos) {
        product = true;
        col_a = find_col(detail::trim(column.substr(0, star)));
        col_b = find_col(detail::trim(column.substr(star + 1)));
    } else {
        col_a = find_col(detail::trim(column));
    }
    IngestResult out;
    out.observations.reserve(std::min<std::size_t>(max_rows, 65536));
    std::size_t row = 0;
    while (out.observations.size() < max_rows && std::getline(in, line)) {
        ++row;
        ++out.rows_scanned;
        if (detail::trim(line).empty()) {
            --out.rows_scanned;
            --row;
            continue;
        }
        const auto cells = detail::split_csv_line(line);
        const std::size_t need = product ? std::max(col_a, col_b) : col_a;
        if (cells.size() <= need)
            throw data_error("short row " + std::to_string(row) + " in " + path.string());
        double v = detail::parse_cell(cells[col_a], row, column);
        if (product) v *= detail::parse_cell(cells[col_b], row, column);
        out.observations.push_back(
            {static_cast<std::uint64_t>(out.observations.size() + 1), v});
    }
    if (out.observations.empty()) throw data_error("zero usable rows in " + path.string());
    return out;
}

struct MethodEntry {
    std::string label;
    PredictorId id;
    MethodParams params;
};

struct RunConfig {
    std::filesystem::path input;
    std::string column;
    std::size_t max_rows = 10000;
    double burnin_frac = 0.10;
    std::size_t grid_points = 11;
    std::uint64_t seed = 1;
    std::filesystem::path output_dir = "out";
    std::vector<MethodEntry> methods;
    nlohmann::ordered_json echo;  // the parsed config, for the manifest
};

namespace detail {

inline void reject_unknown(const nlohmann::ordered_json& obj,
                           std::initializer_list<const char*> known,
                           const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it) {
        bool ok = false;
        for (const char* k : known)
            if (it.key() == k) ok = true;
        if (!ok) throw config_error("unknown key '" + it.key() + "' in " + where);
    }
}

inline MethodEntry parse_method(const nlohmann::ordered_json& j) {
    MethodEntry e;
    if (j.is_string()) {
        e.label = j.get<std::string>();
        e.id = id_from_label(e.label);
        return e;
    }
    if (!j.is_object()) throw config_error("method entry must be a name or an object");
    reject_unknown(j,
                   {"name", "normal_variant", "mu", "sigma2", "mu0", "sigma02",
                    "prior_alpha", "prior_beta", "rho", "delta", "refresh_stride",
                    "dpp_mass", "rounding_grid", "d", "V", "K_int", "sketch_M",
                    "K_rep", "conformity", "conf_alpha", "conf_grid", "conf_mu",
                    "conf_tau2", "conf_a", "conf_b"},
                   "method entry");
    if (!j.contains("name")) throw config_error("method entry missing 'name'");
    e.label = j.at("name").get<std::string>();
    e.id = id_from_label(e.label);
    MethodParams& p = e.params;
    auto get = [&](const char* k, auto& field) {
        if (j.contains(k)) field = j.at(k).get<std::decay_t<decltype(field)>>();
    };
    get("normal_variant", p.normal_variant);
    get("mu", p.mu);
    get("sigma2", p.sigma2);
    get("mu0", p.mu0);
    get("sigma02", p.sigma02);
    get("prior_alpha", p.prior_alpha);
    get("prior_beta", p.prior_beta);
    get("rho", p.rho);
    get("delta", p.delta);
    get("refresh_stride", p.refresh_stride);
    get("dpp_mass", p.dpp_mass);
    get("rounding_grid", p.rounding_grid);
    get("d", p.d);
    get("V", p.V);
    get("K_int", p.K_int);
    get("sketch_M", p.sketch_M);
    get("K_rep", p.K_rep);
    get("conformity", p.conformity);
    get("conf_alpha", p.conf_alpha);
    get("conf_grid", p.conf_grid);
    get("conf_mu", p.conf_mu);
    get("conf_tau2", p.conf_tau2);
    get("conf_a", p.conf_a);
    get("conf_b", p.conf_b);
    return e;
}

}  // namespace detail

inline RunConfig parse_run_config(const nlohmann::ordered_json& j) {
    if (!j.is_object()) throw config_error("config must be a JSON object");
    detail::reject_unknown(j,
                           {"input", "column", "max_rows", "burnin_frac",
                            "grid_points", "seed", "output_dir", "methods"},
                           "config");
    RunConfig c;
    try {
        c.input = j.at("input").get<std::string>();
        c.column = j.at("column").get<std::string>();
        if (j.contains("max_rows")) c.max_rows = j.at("max_rows").get<std::size_t>();
        if (j.contains("burnin_frac")) c.burnin_frac = j.at("burnin_frac").get<double>();
        if (j.contains("grid_points")) c.grid_points = j.at("grid_points").get<std::size_t>();
        if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("output_dir")) c.output_dir = j.at("output_dir").get<std::string>();
        const auto& ms = j.at("methods");
        if (!ms.is_array() || ms.empty())
            throw config_error("'methods' must be a nonempty array");
        for (const auto& m : ms) {
            if (m.is_string() && m.get<std::string>() == "all") {
                for (const auto& id : legal_ids())
                    c.methods.push_back({method_label(id), id, MethodParams{}});
            } else {
                c.methods.push_back(detail::parse_method(m));
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("malformed config: ") + e.what());
    }
    for (std::size_t i = 0; i < c.methods.size(); ++i)
        for (std::size_t k = i + 1; k < c.methods.size(); ++k)
            if (c.methods[i].label == c.methods[k].label)
                throw config_error("duplicate method '" + c.methods[i].label + "'");
    c.echo = j;
    return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path.string());
    nlohmann::ordered_json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw config_error(std::string("config is not valid JSON: ") + e.what());
    }
    return parse_run_config(j);
}

// Executes every configured method: writes per-method cpe_trace.csv and
// sensitivity.csv plus a run manifest enabling bit-exact replay. Returns the
// manifest.
inline nlohmann::ordered_json run(const RunConfig& cfg) {
    const IngestResult ing = ingest_csv(cfg.input, cfg.column, cfg.max_rows);
    std::vector<double> y;
    y.reserve(ing.observations.size());
    for (const auto& o : ing.observations) y.push_back(o.value);
    const std::size_t burnin =
        static_cast<std::size_t>(cfg.burnin_frac * static_cast<double>(y.size()));
    if (burnin >= y.size() || (burnin == 0 && cfg.burnin_frac > 0.0))
        throw config_error("stream too short for the burn-in fraction");

    std::filesystem::create_directories(cfg.output_dir);
    nlohmann::ordered_json manifest;
    manifest["library_version"] = kLibraryVersion;
    manifest["config"] = cfg.echo;
    manifest["rows_used"] = y.size();
    manifest["rows_scanned"] = ing.rows_scanned;
    manifest["burnin"] = burnin;
    nlohmann::ordered_json results = nlohmann::ordered_json::object();

    for (const auto& entry : cfg.methods) {
        const auto dir = cfg.output_dir / entry.label;
        std::filesystem::create_directories(dir);

        const RunOutput base =
            run_stream(entry.id, entry.params, y, burnin, cfg.seed, true);
        {
            std::ofstream tr(dir / "cpe_trace.csv");
            if (!tr) throw data_error("cannot write trace for " + entry.label);
            tr << "index,y,yhat,abs_err,cpe\n";
            for (const auto& r : base.trace)
                tr << r.index << ',' << format12(r.y) << ',' << format12(r.yhat)
                   << ',' << format12(r.abs_err) << ',' << format12(r.cpe) << '\n';
        }
        const SensitivityCurve curve = run_sensitivity(
            entry.id, entry.params, y, cfg.grid_points, cfg.burnin_frac, cfg.seed);
        {
            std::ofstream sc(dir / "sensitivity.csv");
            if (!sc) throw data_error("cannot write curve for " + entry.label);
            sc << "tau,cpe\n";
            for (std::size_t i = 0; i < curve.taus.size(); ++i)
                sc << format12(curve.taus[i]) << ',' << format12(curve.cpes[i]) << '\n';
        }
        nlohmann::ordered_json r;
        r["cpe"] = format12(base.cpe);
        r["sigma_rv"] = format12(curve.sigma_rv);
        r["seed"] = cfg.seed;
        r["taus"] = nlohmann::ordered_json::array();
        r["cpes"] = nlohmann::ordered_json::array();
        for (double t : curve.taus) r["taus"].push_back(format12(t));
        for (double cpe : curve.cpes) r["cpes"].push_back(format12(cpe));
        r["clamped_low"] = curve.clamped_low;
        r["clamped_high"] = curve.clamped_high;
        results[entry.label] = std::move(r);
    }
    manifest["results"] = std::move(results);
    {
        std::ofstream mf(cfg.output_dir / "manifest.json");
        if (!mf) throw data_error("cannot write manifest");
        mf << manifest.dump(2) << '\n';
    }
    return manifest;
}

}  // namespace streampred
