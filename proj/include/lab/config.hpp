#pragma once
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "lab/report.hpp"
#include "lab/schottky.hpp"

namespace lab {

struct ExperimentConfig {
    std::vector<double> disk_angles{0.0, kPi / 2, kPi, 3 * kPi / 2};
    std::vector<double> disk_radii{0.784, 0.784, 0.784, 0.784};
    double base_re = 0.2;
    double base_im = -0.35;
    double max_dist = 14.0;
    double rho = 1.0;
    std::vector<double> rho_sweep{0.5, 1.0, 2.0};
    int bin_count = 4096;
    double s_offset = 0.05;
    double cone_R = 1.0;
    double shadow_R = 2.0;
    double dw_r0 = 0.75;
    double budget_cap = 5e7;
    double prune_margin = 0.0; // 0 = auto
    unsigned long long seed = 20260818ULL;
    int threads = 0; // 0 = LAB_THREADS env / hardware
    std::vector<std::string> experiments{"thmA", "corB", "thmD", "roblin"};
    std::string out_dir = "out";

    std::vector<DiskSpec> disk_specs() const {
        if (disk_angles.size() != disk_radii.size())
            throw ConfigError("disk_angles and disk_radii must have equal length");
        std::vector<DiskSpec> ds;
        for (size_t i = 0; i < disk_angles.size(); ++i)
            ds.push_back({disk_angles[i], disk_radii[i]});
        return ds;
    }
    DiskPoint base_point() const { return {base_re, base_im}; }

    nlohmann::json to_json() const {
        nlohmann::json j;
        j["disk_angles"] = disk_angles;
        j["disk_radii"] = disk_radii;
        j["base_re"] = base_re;
        j["base_im"] = base_im;
        j["max_dist"] = max_dist;
        j["rho"] = rho;
        j["rho_sweep"] = rho_sweep;
        j["bin_count"] = bin_count;
        j["s_offset"] = s_offset;
        j["cone_R"] = cone_R;
        j["shadow_R"] = shadow_R;
        j["dw_r0"] = dw_r0;
        j["budget_cap"] = budget_cap;
        j["prune_margin"] = prune_margin;
        j["seed"] = seed;
        j["threads"] = threads;
        j["experiments"] = experiments;
        j["out_dir"] = out_dir;
        j["versions"] = nlohmann::json{{"geometry", kGeometryVersion},
                                       {"group", kGroupVersion},
                                       {"measure", kMeasureVersion},
                                       {"representation", kRepresentationVersion},
                                       {"lab", kLabVersion}};
        return j;
    }
};

namespace detail {

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

inline std::vector<double> parse_list(const std::string& v, const std::string& key) {
    std::vector<double> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (tok.empty()) continue;
        try {
            size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
            throw ConfigError("bad numeric value for " + key + ": '" + tok + "'");
        }
    }
    return out;
}

inline double parse_num(const std::string& v, const std::string& key) {
    auto vals = parse_list(v, key);
    if (vals.size() != 1) throw ConfigError("expected a single number for " + key);
    return vals[0];
}

inline std::vector<std::string> parse_names(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        tok = trim(tok);
        if (!tok.empty()) out.push_back(tok);
    }
    return out;
}

} // namespace detail

inline ExperimentConfig parse_config(std::istream& in) {
    ExperimentConfig cfg;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string s = detail::trim(line);
        if (s.empty() || s[0] == '#' || s[0] == ';') continue;
        if (s.front() == '[' && s.back() == ']') continue; // section headers are cosmetic
        size_t eq = s.find('=');
        if (eq == std::string::npos)
            throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
        std::string key = detail::trim(s.substr(0, eq));
        std::string val = detail::trim(s.substr(eq + 1));
        if (key == "disk_angles") cfg.disk_angles = detail::parse_list(val, key);
        else if (key == "disk_radii") cfg.disk_radii = detail::parse_list(val, key);
        else if (key == "base_re") cfg.base_re = detail::parse_num(val, key);
        else if (key == "base_im") cfg.base_im = detail::parse_num(val, key);
        else if (key == "max_dist") cfg.max_dist = detail::parse_num(val, key);
        else if (key == "rho") cfg.rho = detail::parse_num(val, key);
        else if (key == "rho_sweep") cfg.rho_sweep = detail::parse_list(val, key);
        else if (key == "bin_count") cfg.bin_count = static_cast<int>(detail::parse_num(val, key));
        else if (key == "s_offset") cfg.s_offset = detail::parse_num(val, key);
        else if (key == "cone_R") cfg.cone_R = detail::parse_num(val, key);
        else if (key == "shadow_R") cfg.shadow_R = detail::parse_num(val, key);
        else if (key == "dw_r0") cfg.dw_r0 = detail::parse_num(val, key);
        else if (key == "budget_cap") cfg.budget_cap = detail::parse_num(val, key);
        else if (key == "prune_margin") cfg.prune_margin = detail::parse_num(val, key);
        else if (key == "seed") cfg.seed = static_cast<unsigned long long>(detail::parse_num(val, key));
        else if (key == "threads") cfg.threads = static_cast<int>(detail::parse_num(val, key));
        else if (key == "experiments") cfg.experiments = detail::parse_names(val);
        else if (key == "out_dir") cfg.out_dir = val;
        else throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    }
    if (cfg.bin_count < 2) throw ConfigError("bin_count must be at least 2");
    if (cfg.max_dist <= 0) throw ConfigError("max_dist must be positive");
    if (cfg.rho <= 0) throw ConfigError("rho must be positive");
    for (double r : cfg.rho_sweep)
        if (r <= 0) throw ConfigError("rho_sweep entries must be positive");
    if (cfg.budget_cap < 1000) throw ConfigError("budget_cap is too small to enumerate anything");
    static const std::vector<std::string> known{"orbit", "measure", "hc", "thmA",
                                               "corB", "thmD", "roblin", "dw"};
    for (const auto& e : cfg.experiments) {
        bool ok = false;
        for (const auto& k : known) ok = ok || (e == k);
        if (!ok) throw ConfigError("unknown experiment '" + e + "'");
    }
    return cfg;
}

inline ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path);
    return parse_config(in);
}

inline std::string group_fingerprint(const ExperimentConfig& cfg) {
    std::string s = "disks[";
    for (size_t i = 0; i < cfg.disk_angles.size(); ++i) {
        if (i) s += ";";
        s += fmt17(cfg.disk_angles[i]) + "," + fmt17(cfg.disk_radii[i]);
    }
    s += "]@" + fmt17(cfg.base_re) + (cfg.base_im < 0 ? "" : "+") + fmt17(cfg.base_im) + "i";
    return s;
}

} // namespace lab
