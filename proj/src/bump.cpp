#include "daforge/bump.hpp"

#include <algorithm>
#include <cmath>

#include "daforge/errors.hpp"

namespace daforge {

namespace {

inline double sig(double s) { return s > 0.0 ? std::exp(-1.0 / s) : 0.0; }
inline double sig_prime(double s) {
    if (s <= 0.0) return 0.0;
    const double e = std::exp(-1.0 / s);
    return e / (s * s);
}

// transition S(t) on (0,1): 1 -> 0, strictly decreasing, C-infinity flat ends
inline double trans(double t) {
    const double u = sig(1.0 - t), v = sig(t);
    return u / (u + v);
}
inline double trans_prime(double t) {
    const double u = sig(1.0 - t), v = sig(t);
    const double up = sig_prime(1.0 - t), vp = sig_prime(t);
    const double den = (u + v) * (u + v);
    return (-up * v - u * vp) / den;
}

} // namespace

BumpProfile::BumpProfile(double d, BumpShape s) : delta(d), shape(s) {
    if (!(d > 0) || !std::isfinite(d))
        throw unsupported_error("BumpProfile: delta must be positive and finite");
}

double psi(const BumpProfile& profile, double x) {
    const double d = profile.delta;
    const double ax = std::abs(x);
    if (ax <= 0.5 * d) return 1.0;
    if (ax >= d) return 0.0;
    return trans((ax - 0.5 * d) / (0.5 * d));
}

double psi_prime(const BumpProfile& profile, double x) {
    const double d = profile.delta;
    const double ax = std::abs(x);
    if (ax <= 0.5 * d || ax >= d) return 0.0;
    const double t = (ax - 0.5 * d) / (0.5 * d);
    const double dp = trans_prime(t) * (2.0 / d);
    return x >= 0 ? dp : -dp;
}

std::string bump_shape_name(BumpShape s) {
    switch (s) {
        case BumpShape::SmoothstepExp: return "smoothstep-exp";
    }
    return "unknown";
}

BumpShape bump_shape_from_name(const std::string& name) {
    if (name == "smoothstep-exp") return BumpShape::SmoothstepExp;
    throw config_error("unknown bump profile: " + name);
}

BumpBound compute_m(const BumpProfile& profile, int grid_resolution, int refinement_passes) {
    if (grid_resolution < 16)
        throw unsupported_error("compute_m: grid too coarse");
    const double d = profile.delta;
    auto g = [&](double x) { return x * psi_prime(profile, x) + psi(profile, x); };

    double lo = -d, hi = d;
    double best = 1.0, best_x = 0.0, gmax = 0.0;
    for (int pass = 0; pass <= refinement_passes; ++pass) {
        const double step = (hi - lo) / grid_resolution;
        double pass_min = 1e300, pass_x = lo;
        for (int i = 0; i <= grid_resolution; ++i) {
            const double x = lo + step * i;
            const double v = g(x);
            if (pass == 0) gmax = std::max(gmax, v);
            if (v < pass_min) {
                pass_min = v;
                pass_x = x;
            }
        }
        if (pass_min < best) {
            best = pass_min;
            best_x = pass_x;
        }
        lo = best_x - 2.0 * step;
        hi = best_x + 2.0 * step;
    }

    BumpBound b;
    b.m = std::max(0.0, -best);
    b.grid_resolution = grid_resolution;
    b.refinement_passes = refinement_passes;
    b.min_value = best;
    b.min_x = best_x;
    b.max_value = gmax;
    if (gmax > 1.0 + 1e-12)
        throw numerical_error("compute_m: upper bound (x psi' + psi) psi <= 1 violated");
    return b;
}

InfeasibilityVerdict forward_modification_infeasibility(const BumpProfile& profile, double m,
                                                        double lambda_ss, long k, int grid) {
    if (!(lambda_ss > 0) || lambda_ss >= 2.0)
        throw unsupported_error(
            "forward_modification_infeasibility: lambda_ss out of regime (need 0 < lambda_ss < 2)");
    if (m < 0) throw unsupported_error("forward_modification_infeasibility: m must be >= 0");

    InfeasibilityVerdict v;
    v.lhs = 1.0 / (1.0 - 2.0 / lambda_ss);
    v.rhs = -m;
    v.gap = v.rhs - v.lhs;
    v.inequality_holds = v.lhs < v.rhs;

    // dR2/dc = (kc phi'(kc) + phi(kc)) phi(r) (2 - lambda_ss) + lambda_ss
    const double d = profile.delta;
    double worst = 1e300;
    for (int i = 0; i <= grid; ++i) {
        const double c = -d / static_cast<double>(k) +
                         2.0 * d / static_cast<double>(k) * (static_cast<double>(i) / grid);
        const double kc = static_cast<double>(k) * c;
        const double bracket = kc * psi_prime(profile, kc) + psi(profile, kc);
        for (int j = 0; j <= grid / 20; ++j) {
            const double r = d * (static_cast<double>(j) / (grid / 20));
            const double val = bracket * psi(profile, r) * (2.0 - lambda_ss) + lambda_ss;
            if (val < worst) {
                worst = val;
                v.witness_c = c;
                v.witness_r = r;
                v.witness_value = val;
            }
        }
    }
    v.witness_found = worst <= 0.0;
    return v;
}

} // namespace daforge
