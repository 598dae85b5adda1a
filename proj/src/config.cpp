#include "daforge/config.hpp"

#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <vector>

#include "daforge/errors.hpp"

namespace daforge {

namespace {

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string trim(const std::string& s) {
    const auto a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    const auto b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

struct Field {
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string&)> set;
};

template <typename T>
Field make_field(T RunConfig::* member);

template <>
Field make_field(std::string RunConfig::* member) {
    return {[member](const RunConfig& c) { return c.*member; },
            [member](RunConfig& c, const std::string& v) { c.*member = v; }};
}
template <>
Field make_field(bool RunConfig::* member) {
    return {[member](const RunConfig& c) { return (c.*member) ? "true" : "false"; },
            [member](RunConfig& c, const std::string& v) {
                if (v != "true" && v != "false") throw config_error("expected true/false: " + v);
                c.*member = v == "true";
            }};
}
template <>
Field make_field(int RunConfig::* member) {
    return {[member](const RunConfig& c) { return std::to_string(c.*member); },
            [member](RunConfig& c, const std::string& v) { c.*member = std::stoi(v); }};
}
template <>
Field make_field(long RunConfig::* member) {
    return {[member](const RunConfig& c) { return std::to_string(c.*member); },
            [member](RunConfig& c, const std::string& v) { c.*member = std::stol(v); }};
}
template <>
Field make_field(std::uint64_t RunConfig::* member) {
    return {[member](const RunConfig& c) { return std::to_string(c.*member); },
            [member](RunConfig& c, const std::string& v) { c.*member = std::stoull(v); }};
}
template <>
Field make_field(double RunConfig::* member) {
    return {[member](const RunConfig& c) { return fmt_double(c.*member); },
            [member](RunConfig& c, const std::string& v) { c.*member = std::stod(v); }};
}

Field sys_int(SystemConfig RunConfig::* sys, int SystemConfig::* member) {
    return {[=](const RunConfig& c) { return std::to_string(c.*sys.*member); },
            [=](RunConfig& c, const std::string& v) { c.*sys.*member = std::stoi(v); }};
}
Field sys_long(SystemConfig RunConfig::* sys, long SystemConfig::* member) {
    return {[=](const RunConfig& c) { return std::to_string(c.*sys.*member); },
            [=](RunConfig& c, const std::string& v) { c.*sys.*member = std::stol(v); }};
}
Field sys_double(SystemConfig RunConfig::* sys, double SystemConfig::* member) {
    return {[=](const RunConfig& c) { return fmt_double(c.*sys.*member); },
            [=](RunConfig& c, const std::string& v) { c.*sys.*member = std::stod(v); }};
}
Field sys_string(SystemConfig RunConfig::* sys, std::string SystemConfig::* member) {
    return {[=](const RunConfig& c) { return c.*sys.*member; },
            [=](RunConfig& c, const std::string& v) { c.*sys.*member = v; }};
}

// canonical field table: (section, key) in serialization order
const std::vector<std::tuple<std::string, std::string, Field>>& field_table() {
    static const std::vector<std::tuple<std::string, std::string, Field>> table = [] {
        std::vector<std::tuple<std::string, std::string, Field>> t;
        auto add = [&](const char* sec, const char* key, Field f) {
            t.emplace_back(sec, key, std::move(f));
        };
        add("run", "scenario", make_field(&RunConfig::scenario));
        add("run", "seed", make_field(&RunConfig::seed));
        add("run", "workers", make_field(&RunConfig::workers));
        add("run", "out", make_field(&RunConfig::out));
        add("run", "format", make_field(&RunConfig::format));
        add("run", "timings", make_field(&RunConfig::timings));

        add("pve", "n", sys_int(&RunConfig::pve, &SystemConfig::n));
        add("pve", "k", sys_long(&RunConfig::pve, &SystemConfig::k));
        add("pve", "delta", sys_double(&RunConfig::pve, &SystemConfig::delta));
        add("pve", "kappa", sys_double(&RunConfig::pve, &SystemConfig::kappa));
        add("pve", "epsilon", sys_double(&RunConfig::pve, &SystemConfig::epsilon));
        add("pve", "bump", sys_string(&RunConfig::pve, &SystemConfig::bump));

        add("mixed", "n", sys_int(&RunConfig::mixed, &SystemConfig::n));
        add("mixed", "k", sys_long(&RunConfig::mixed, &SystemConfig::k));
        add("mixed", "delta", sys_double(&RunConfig::mixed, &SystemConfig::delta));
        add("mixed", "kappa2", sys_double(&RunConfig::mixed, &SystemConfig::kappa));
        add("mixed", "epsilon", sys_double(&RunConfig::mixed, &SystemConfig::epsilon));
        add("mixed", "bump", sys_string(&RunConfig::mixed, &SystemConfig::bump));

        add("bump", "grid", make_field(&RunConfig::bump_grid));
        add("bump", "refine", make_field(&RunConfig::bump_refine));

        add("grids", "spatial", make_field(&RunConfig::grid_spatial));
        add("grids", "directions", make_field(&RunConfig::grid_directions));
        add("grids", "angles", make_field(&RunConfig::grid_angles));
        add("grids", "bundle_iters", make_field(&RunConfig::grid_bundle_iters));
        add("grids", "slope_grid", make_field(&RunConfig::slope_grid));

        add("umeasure", "curve_length", make_field(&RunConfig::curve_length));
        add("umeasure", "max_seg_len", make_field(&RunConfig::max_seg_len));
        add("umeasure", "n_max", make_field(&RunConfig::n_max));
        add("umeasure", "mass_samples", make_field(&RunConfig::mass_samples));
        add("umeasure", "mass_curves", make_field(&RunConfig::mass_curves));
        add("umeasure", "ell", make_field(&RunConfig::ell));
        add("umeasure", "exponent_samples", make_field(&RunConfig::exponent_samples));
        add("umeasure", "mixed_ell", make_field(&RunConfig::mixed_ell));
        add("umeasure", "mixed_samples", make_field(&RunConfig::mixed_samples));
        add("umeasure", "quadrature_budget", make_field(&RunConfig::quadrature_budget));
        add("umeasure", "vertex_budget", make_field(&RunConfig::vertex_budget));

        add("appendix", "gamma", make_field(&RunConfig::appendix_gamma));
        add("appendix", "points", make_field(&RunConfig::appendix_points));
        return t;
    }();
    return table;
}

} // namespace

RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::istringstream in(text);
    std::string line, section;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s[0] == '#') continue;
        if (s.front() == '[' && s.back() == ']') {
            section = s.substr(1, s.size() - 2);
            continue;
        }
        const auto eq = s.find('=');
        if (eq == std::string::npos)
            throw config_error("config line " + std::to_string(lineno) + ": expected key = value");
        const std::string key = trim(s.substr(0, eq));
        const std::string value = trim(s.substr(eq + 1));
        bool found = false;
        for (const auto& [sec, k, field] : field_table()) {
            if (sec == section && k == key) {
                try {
                    field.set(cfg, value);
                } catch (const config_error&) {
                    throw;
                } catch (const std::exception&) {
                    throw config_error("config line " + std::to_string(lineno) +
                                       ": bad value for " + section + "." + key);
                }
                found = true;
                break;
            }
        }
        if (!found)
            throw config_error("config line " + std::to_string(lineno) + ": unknown key " +
                               section + "." + key);
    }
    return cfg;
}

RunConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str());
}

std::string serialize_config(const RunConfig& cfg) {
    std::ostringstream out;
    out << "# da-forge run configuration\n";
    std::string section;
    for (const auto& [sec, key, field] : field_table()) {
        if (sec != section) {
            out << "\n[" << sec << "]\n";
            section = sec;
        }
        out << key << " = " << field.get(cfg) << "\n";
    }
    return out.str();
}

const char* scenario_names() {
    return "construct-pve, verify-cones, verify-pve, search-params, gibbs-mass, "
           "center-exponent, mixed-exponents, appendix-check, full-paper";
}

bool is_known_scenario(const std::string& name) {
    static const char* names[] = {"construct-pve",  "verify-cones",    "verify-pve",
                                  "search-params",  "gibbs-mass",      "center-exponent",
                                  "mixed-exponents", "appendix-check", "full-paper"};
    for (const char* n : names)
        if (name == n) return true;
    return false;
}

} // namespace daforge
