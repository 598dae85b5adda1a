#pragma once

// Structured run reports and their serializations (json / csv / plotdata).
// Reports are deterministic for a fixed config and seed: insertion-ordered
// keys, shortest-round-trip float formatting, no timestamps.  Wall-clock
// timings are collected separately and only emitted when asked for, so the
// canonical report bytes stay reproducible.

#include <string>
#include <utility>
#include <vector>

#include "daforge/config.hpp"

namespace daforge {

struct Check {
    std::string name;
    bool passed = false;
    double margin = 0;
    std::vector<std::pair<std::string, double>> details;
    std::string note;
};

struct Series {
    std::string name;
    std::vector<std::pair<double, double>> points;
};

struct Report {
    std::string scenario;
    std::uint64_t seed = 0;
    std::string config_echo;
    std::vector<Check> checks;
    std::vector<Series> series;
    std::vector<std::pair<std::string, double>> timings_ms;
    bool include_timings = false;

    bool passed() const {
        for (const auto& c : checks)
            if (!c.passed) return false;
        return true;
    }
    Check& add(Check c) {
        checks.push_back(std::move(c));
        return checks.back();
    }
};

std::string report_to_json(const Report& r);
std::string checks_to_csv(const Report& r);
std::string series_to_csv(const Report& r);

// Writes report.json / checks.csv / series.csv / plot_<name>.dat into out_dir
// according to format ("json", "csv" or "plotdata"); returns written paths.
std::vector<std::string> emit_report(const Report& r, const std::string& out_dir,
                                     const std::string& format);

} // namespace daforge
