#pragma once

// Flat sectioned key-value run configuration.  All numeric fields serialize
// with full precision, so parse(serialize(c)) == c exactly and a pinned
// configuration regenerates bit-for-bit.

#include <cstdint>
#include <string>

namespace daforge {

struct SystemConfig {
    int n = 0;          // 0 = resolve by search
    long k = 0;         // 0 = resolve by search
    double delta = 0;   // 0 = resolve by search
    double kappa = 0;   // 0 = resolve by search
    double epsilon = 0; // 0 = resolve from kappa
    std::string bump = "smoothstep-exp";

    bool resolved() const { return n > 0 && k > 0 && delta > 0 && kappa > 0 && epsilon > 0; }
    bool operator==(const SystemConfig&) const = default;
};

struct RunConfig {
    // [run]
    std::string scenario = "full-paper";
    std::uint64_t seed = 20250801;
    int workers = 2;
    std::string out = "out";
    std::string format = "json";
    bool timings = false;

    // [pve] / [mixed]
    SystemConfig pve;
    SystemConfig mixed;

    // [bump]
    int bump_grid = 10000;
    int bump_refine = 3;

    // [grids]
    int grid_spatial = 40;
    int grid_directions = 64;
    int grid_angles = 181;
    int grid_bundle_iters = 14;
    int slope_grid = 64;

    // [umeasure]
    double curve_length = 0.05;
    double max_seg_len = 1e-3;
    int n_max = 50;
    long mass_samples = 20000;
    int mass_curves = 10;
    int ell = 1000;
    long exponent_samples = 100000;
    int mixed_ell = 400;
    long mixed_samples = 20000;
    long quadrature_budget = 8000000;
    long vertex_budget = 100000000;

    // [appendix]
    double appendix_gamma = 0.01;
    long appendix_points = 1000000;

    bool operator==(const RunConfig&) const = default;
};

// Parse the sectioned key = value format; unknown keys are an error.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
// Canonical serialization (stable order, %.17g numerics).
std::string serialize_config(const RunConfig& cfg);

const char* scenario_names(); // comma-separated list for usage messages
bool is_known_scenario(const std::string& name);

} // namespace daforge
