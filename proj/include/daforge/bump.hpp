#pragma once

// C-infinity plateau bump profiles and their certified bound
//
//   -m <= (x psi'(x) + psi(x)) psi(y) <= 1   for all x, y.
//
// The default shape is the classical partition-of-unity transition
//   psi(x) = 1                                   on [0, delta/2]
//   psi(x) = sig(1-t) / (sig(1-t) + sig(t))      on (delta/2, delta),
//            t = (x - delta/2)/(delta/2),  sig(s) = exp(-1/s)
//   psi(x) = 0                                   on [delta, inf)
// extended evenly to x < 0.  It is strictly decreasing on the transition band
// and all derivatives vanish at the joins.  The product x psi'(x) is invariant
// under rescaling delta, so the certified constant m depends on the shape only.

#include <string>

namespace daforge {

enum class BumpShape { SmoothstepExp };

struct BumpProfile {
    double delta;
    BumpShape shape = BumpShape::SmoothstepExp;

    explicit BumpProfile(double d, BumpShape s = BumpShape::SmoothstepExp);
};

double psi(const BumpProfile& profile, double x);
double psi_prime(const BumpProfile& profile, double x);

std::string bump_shape_name(BumpShape s);
BumpShape bump_shape_from_name(const std::string& name);

struct BumpBound {
    double m = 0;            // max(0, -inf (x psi' + psi) psi)
    int grid_resolution = 0; // points per axis of the (x, y) product grid
    int refinement_passes = 0;
    double min_value = 0;    // grid-refined min of g(x) = x psi'(x) + psi(x)
    double min_x = 0;        // where it is attained
    double max_value = 0;    // grid max of g (must not exceed 1)
};

// Dense grid over the compact support followed by local refinement.  The
// product grid min factorizes: psi(y) ranges over [0,1] with both extremes on
// the y-grid, so min over (x,y) of g(x) psi(y) equals min(0, min_x g(x)).
BumpBound compute_m(const BumpProfile& profile, int grid_resolution = 10000,
                    int refinement_passes = 3);

// Feasibility of the forward-direction center modification: the inequality
//   1/(1 - 2/lambda_ss) < -m
// must hold for dP/dc > 0, i.e. for the forward deformation to be a
// diffeomorphism.  For small lambda_ss it fails; this evaluates it and hunts a
// concrete witness (c, r) with dR2/dc <= 0 over the profile's support.
struct InfeasibilityVerdict {
    bool inequality_holds = false; // the diffeomorphism condition
    double lhs = 0;                // 1/(1 - 2/lambda_ss)
    double rhs = 0;                // -m
    double gap = 0;                // rhs - lhs (negative when it fails)
    bool witness_found = false;    // a point with dR2/dc <= 0
    double witness_c = 0, witness_r = 0, witness_value = 0;
};

InfeasibilityVerdict forward_modification_infeasibility(const BumpProfile& profile, double m,
                                                        double lambda_ss, long k = 1,
                                                        int grid = 2000);

} // namespace daforge
