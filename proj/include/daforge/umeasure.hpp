#pragma once

// Empirical Gibbs u-state machinery: grow disks inside strong-unstable
// leaves, push them forward, and measure region masses and center Lyapunov
// exponents along the way.
//
// Two estimators are kept side by side wherever the spec of a quantity allows
// it: a quadrature along the refined image polyline carrying the
// pullback-determinant weights, and an arclength Monte Carlo over orbit
// samples (exact in expectation).  Lengths can exceed the double range after
// a few iterates, so all length accounting is done in log space.

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "daforge/systems.hpp"
#include "daforge/verify.hpp"

namespace daforge {

struct UnstableCurve {
    std::shared_ptr<const DaSystem> system;
    std::vector<Vec3> lifted;        // continuous lift; lifted[0] in [0,1)^3
    std::vector<TorusPoint> pts;     // wrapped vertices
    std::vector<Vec3> tangents;      // unit tangents in frame coordinates
    std::vector<double> log_weight;  // -log of the accumulated strong-unstable
                                     // expansion since seeding (the (ml) weight)
    int steps_applied = 0;
    double max_seg_len = 1e-3;

    double arclength() const;
    // point and unit frame tangent at a given arclength parameter
    TorusPoint at_arclength(double s, Vec3* tangent_frame = nullptr) const;
};

// Grow a curve of the requested arclength through x along the converged
// strong-unstable direction field (4th-order integration, step max_seg_len/4).
UnstableCurve seed_curve(std::shared_ptr<const DaSystem> system, const TorusPoint& x,
                         double length, double max_seg_len = 1e-3, int field_iters = 0);

// Image curve under `steps` applications of the map, with adaptive bisection
// of any source segment whose image chord exceeds max_seg_len (the map is
// re-evaluated at source midpoints, never interpolated).  Throws budget_error
// when the total number of generated vertices would exceed vertex_budget.
UnstableCurve iterate_curve(const UnstableCurve& curve, int steps, double max_seg_len,
                            long vertex_budget = 100000000L);

// worst chord direction violation against a cone (>= 0 means every chord lies
// inside); used for the curve invariant
double curve_cone_slack(const UnstableCurve& curve, const ConeSpec& cone);

struct Region {
    std::vector<BoxChart> boxes; // membership = strictly inside some inner box
    bool contains(const TorusPoint& x) const;
};

struct PushforwardStats {
    int n = 0;
    long samples = 0;
    double region_mass = 0;           // Monte Carlo estimate of g^n_* m_L(R)/m_L(L)
    double confidence_halfwidth = 0;  // binomial standard error (floored by 1/N)
    std::optional<double> mass_quadrature; // weighted polyline estimate, when affordable
    double log_length_ratio = 0;      // log(length(g^n L)/length(L)), Monte Carlo
    double total_length = 0;          // exp(log_length_ratio) * length(L); inf if overflowing
    // pointwise envelope of the per-step strong-unstable expansion factors
    double min_step_factor = 0, max_step_factor = 0;
};

// Mass of the region under the n-th pushforward of normalized arclength on
// curve0, together with the length ratio and envelope statistics.
PushforwardStats pushforward_mass(const UnstableCurve& curve0, int n, const Region& region,
                                  long samples, std::uint64_t seed, int workers = 1,
                                  long quadrature_budget = 20000000L);

// One pass over orbits recording the stats at every 0 <= n <= n_max.
std::vector<PushforwardStats> mass_series(const UnstableCurve& curve0, int n_max,
                                          const Region& region, long samples,
                                          std::uint64_t seed, int workers = 1,
                                          int quadrature_up_to = -1,
                                          long quadrature_budget = 20000000L);

struct Estimate {
    double value = 0;
    double std_error = 0;
    long samples = 0;
};

// (1/ell) sum_{n<ell} g^n_* m_L(obs)/m_L(L) via the Monte Carlo
// representation: averages of obs along orbits of arclength samples.
Estimate birkhoff_average(const UnstableCurve& curve0, int ell,
                          const std::function<double(const TorusPoint&)>& observable,
                          long samples, std::uint64_t seed, int workers = 1);

struct CenterExponent {
    Estimate estimate;
    double lower_bound = 0; // the kappa-relation value at the system parameters
};

// Birkhoff average of log of the center derivative of g (must exceed
// lower_bound up to statistical error).
CenterExponent center_exponent(const UnstableCurve& curve0, int ell, long samples,
                               std::uint64_t seed, int workers = 1);

struct MixedExponents {
    Estimate lambda_cu, lambda_cs;
    double cu_lower_bound = 0; // kappa2 relation value
    double cs_upper_bound = 0; // kappa33 relation value
    long convergence_failures = 0;
};

// Center-unstable / center-stable exponents of the mixed system along orbit
// samples, with the invariant directions obtained by pushing (cu) and pulling
// (cs) through the 2-D center-block cocycle.
MixedExponents mixed_exponents(const UnstableCurve& curve0, int ell, int bundle_iters,
                               long samples, std::uint64_t seed, int workers = 1);

} // namespace daforge
