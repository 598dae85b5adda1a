#include <doctest.h>

#include <cmath>

#include "daforge/config.hpp"
#include "daforge/report.hpp"
#include "daforge/scenarios.hpp"

using namespace daforge;

TEST_CASE("config round trip is exact") {
    RunConfig cfg;
    cfg.scenario = "gibbs-mass";
    cfg.seed = 987654321;
    cfg.workers = 7;
    cfg.pve.n = 7;
    cfg.pve.k = 1024;
    cfg.pve.delta = 0.000625;
    cfg.pve.kappa = 4.330762684345245;
    cfg.pve.epsilon = 0.05;
    cfg.mixed.n = 3;
    cfg.mixed.k = 256;
    cfg.mixed.delta = 0.000625;
    cfg.mixed.kappa = 0.49999943284436898;
    cfg.mixed.epsilon = 0.05;
    cfg.curve_length = 0.12345678901234567;
    cfg.timings = true;

    const std::string text = serialize_config(cfg);
    const RunConfig back = parse_config(text);
    CHECK(back == cfg);
    // and serialization is idempotent byte-for-byte
    CHECK(serialize_config(back) == text);
}

TEST_CASE("config parser rejects junk") {
    CHECK_THROWS_AS(parse_config("[run]\nbogus = 1\n"), config_error);
    CHECK_THROWS_AS(parse_config("[nosuch]\nn = 1\n"), config_error);
    CHECK_THROWS_AS(parse_config("[run]\nworkers\n"), config_error);
    CHECK_THROWS_AS(parse_config("[run]\ntimings = maybe\n"), config_error);
    CHECK_THROWS_AS(parse_config("[pve]\nn = abc\n"), config_error);
    // comments and blank lines are fine
    CHECK_NOTHROW(parse_config("# comment\n\n[run]\nworkers = 3\n"));
}

TEST_CASE("unknown scenario is a config error") {
    RunConfig cfg;
    cfg.scenario = "no-such-scenario";
    CHECK_THROWS_AS(run_scenario(cfg), config_error);
}

TEST_CASE("report serialization is deterministic and complete") {
    Report rep;
    rep.scenario = "appendix-check";
    rep.seed = 42;
    rep.config_echo = "x";
    rep.add({"first", true, 0.5, {{"a", 1.0}, {"b", 2.5}}, "note"});
    rep.add({"second", false, -0.25, {}, ""});
    rep.series.push_back({"mass_vs_n", {{1, 0.5}, {2, 0.25}}});

    CHECK_FALSE(rep.passed());
    const std::string j1 = report_to_json(rep);
    const std::string j2 = report_to_json(rep);
    CHECK(j1 == j2);
    CHECK(j1.find("\"first\"") != std::string::npos);
    CHECK(j1.find("timings") == std::string::npos); // only on request

    const std::string csv = checks_to_csv(rep);
    CHECK(csv.find("first,1,") != std::string::npos);
    CHECK(csv.find("second,0,") != std::string::npos);
    const std::string scsv = series_to_csv(rep);
    // one row per series point plus the header
    CHECK(std::count(scsv.begin(), scsv.end(), '\n') == 3);
}

TEST_CASE("empty report is valid json") {
    Report rep;
    rep.scenario = "x";
    const std::string j = report_to_json(rep);
    CHECK(j.find("\"checks\": []") != std::string::npos);
    CHECK(rep.passed()); // vacuous conjunction
}

TEST_CASE("appendix scenario runs end to end deterministically") {
    RunConfig cfg;
    cfg.scenario = "appendix-check";
    cfg.appendix_points = 50000;
    const Report a = run_scenario(cfg);
    const Report b = run_scenario(cfg);
    CHECK(a.passed());
    CHECK(report_to_json(a) == report_to_json(b));
    bool has_constants = false;
    for (const auto& c : a.checks)
        if (c.name == "appendix-constants") has_constants = true;
    CHECK(has_constants);
}
