#include "daforge/report.hpp"

#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "daforge/errors.hpp"

namespace daforge {

namespace {
using ojson = nlohmann::ordered_json;
}

std::string report_to_json(const Report& r) {
    ojson j;
    j["scenario"] = r.scenario;
    j["seed"] = r.seed;
    j["passed"] = r.passed();
    ojson checks = ojson::array();
    for (const auto& c : r.checks) {
        ojson jc;
        jc["name"] = c.name;
        jc["passed"] = c.passed;
        jc["margin"] = c.margin;
        if (!c.details.empty()) {
            ojson d;
            for (const auto& [k, v] : c.details) d[k] = v;
            jc["details"] = d;
        }
        if (!c.note.empty()) jc["note"] = c.note;
        checks.push_back(jc);
    }
    j["checks"] = checks;
    if (!r.series.empty()) {
        ojson s;
        for (const auto& ser : r.series) {
            ojson pts = ojson::array();
            for (const auto& [x, y] : ser.points) pts.push_back(ojson::array({x, y}));
            s[ser.name] = pts;
        }
        j["series"] = s;
    }
    if (r.include_timings) {
        ojson t;
        for (const auto& [k, v] : r.timings_ms) t[k] = v;
        j["timings_ms"] = t;
    }
    j["config"] = r.config_echo;
    return j.dump(2) + "\n";
}

std::string checks_to_csv(const Report& r) {
    std::ostringstream out;
    out << "check,passed,margin,details\n";
    for (const auto& c : r.checks) {
        out << c.name << "," << (c.passed ? 1 : 0) << ",";
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%.17g", c.margin);
        out << buf << ",\"";
        bool first = true;
        for (const auto& [k, v] : c.details) {
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            out << (first ? "" : ";") << k << "=" << buf;
            first = false;
        }
        out << "\"\n";
    }
    return out.str();
}

std::string series_to_csv(const Report& r) {
    std::ostringstream out;
    out << "series,x,y\n";
    char buf[40];
    for (const auto& s : r.series)
        for (const auto& [x, y] : s.points) {
            out << s.name << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", x);
            out << buf << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", y);
            out << buf << "\n";
        }
    return out.str();
}

std::vector<std::string> emit_report(const Report& r, const std::string& out_dir,
                                     const std::string& format) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(out_dir, ec);

    auto write = [&](const std::string& name, const std::string& content) {
        const std::string path = (fs::path(out_dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw config_error("cannot write " + path);
        out << content;
        return path;
    };

    std::vector<std::string> written;
    if (format == "json") {
        written.push_back(write("report.json", report_to_json(r)));
    } else if (format == "csv") {
        written.push_back(write("checks.csv", checks_to_csv(r)));
        written.push_back(write("series.csv", series_to_csv(r)));
    } else if (format == "plotdata") {
        for (const auto& s : r.series) {
            std::ostringstream out;
            char buf[40];
            for (const auto& [x, y] : s.points) {
                std::snprintf(buf, sizeof(buf), "%.17g", x);
                out << buf << " ";
                std::snprintf(buf, sizeof(buf), "%.17g", y);
                out << buf << "\n";
            }
            written.push_back(write("plot_" + s.name + ".dat", out.str()));
        }
        if (r.series.empty()) written.push_back(write("plot_empty.dat", ""));
    } else {
        throw config_error("unknown format: " + format + " (json|csv|plotdata)");
    }
    return written;
}

} // namespace daforge
