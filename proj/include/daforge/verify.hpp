#pragma once

// Structural certification sweeps and parameter searches.
//
// Cone invariance, the partial-volume-expansion determinant bound, and the
// center-bundle rate bounds are checked on grids over the deformation
// supports (the only place the tangent map differs from the diagonal
// eigenvalue matrix, which is checked separately), with margins and worst
// witnesses reported.  Searches produce the smallest n, the largest feasible
// kappa, the slope-condition delta, and the smallest deformation sharpness k
// that certifies; every found value re-validates with a positive margin.

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "daforge/systems.hpp"

namespace daforge {

struct GridSpec {
    int spatial = 40;      // points per axis over a deformation support
    int directions = 64;   // cone boundary directions
    int angles = 181;      // plane-family angles (0..pi inclusive, pole at pi/2)
    int bundle_iters = 14; // push/pull depth for invariant bundle estimates
    int workers = 1;
};

struct ConeSpec {
    double alpha;
    std::vector<int> core_axes;       // frame axes spanning the cone core
    std::vector<int> complement_axes; // the dominated complement

    bool contains(const Vec3& v_frame) const;
};

// cones used by the certification, in base-frame axes (0=uu, 1=mid, 2=ss)
ConeSpec pve_unstable_cone(double eps);       // C_eps(E^uu, E^s)
ConeSpec pve_stable_cone(double eps);         // C_eps(E^ss, E^s)
ConeSpec mixed_uu_cone(double eps);           // C_eps(E^uu, E^u + E^ss)
ConeSpec mixed_cu_cone(double eps);           // C_eps(E^u, E^ss)
ConeSpec mixed_cs_cone(double eps);           // C_eps(E^ss, E^u)

struct Witness {
    Vec3 local{};     // support-local coordinates of the worst sample
    Vec3 direction{}; // offending direction (frame coords), when meaningful
    int region = 0;
    double value = 0;
};

struct CertReport {
    std::string kind;
    double min_margin = 0;
    Witness witness{};
    long samples = 0;
    bool passed = false;
};

struct SearchResult {
    int n = 0;
    double kappa = 0;
    double delta = 0;
    double epsilon = 0;
    long k = 0;
    // named inequality margins at the found values (all must be > 0)
    std::vector<std::pair<std::string, double>> margins;

    double margin(const std::string& name) const;
};

// Appendix constants: eps0 = gamma/10 and the closed-form M.
struct TuilunConstants {
    double eps0;
    double M;
};
TuilunConstants lemma_tuilun_constants(double gamma);

// Brute-force oracle for the appendix inequality over the constraint box
// |u| <= eps0, |eps| <= eps0, gamma <= |c| <= c_max.  Returns the minimum
// ratio minus M as the margin (zero violations iff margin >= 0).
CertReport tuilun_grid_check(double gamma, long total_points = 1000000, double c_max = 10.0);

// Smallest n >= 1 whose powered eigenvalues satisfy the construction
// relations of the given variant; m from compute_m, M from the appendix
// lemma at gamma = 1/100 (pve only).
SearchResult search_n(double m, const EigenFrame& base_frame, Variant variant, int cap = 64);

// Largest kappa on a 1e-6 bisection grid keeping every kappa-inequality
// strictly positive.  Throws unsupported_error if the kappa = 0 instance
// already fails (n too small).
SearchResult search_kappa(double lambda_mid, double lambda_ss, Variant variant);

// Halving search for the slope-condition delta: the largest delta from the
// starting value such that the worst segment-box intersection length over a
// base grid (with local refinement around the worst cells) stays strictly
// below the threshold, the chart stays injective, and (two centers) the
// 5*delta outer boxes stay disjoint.
SearchResult slope_delta_search(const EigenFrame& frame, const Vec3& direction,
                                const std::vector<TorusPoint>& centers, double radius = 0.25,
                                double threshold = 1.0 / 200.0, int grid_n = 64,
                                double delta_start = 0.02, double delta_floor = 1e-5,
                                int workers = 1);

enum class ConeDirection { Forward, Inverse };

// Cone invariance sweep: every Jacobian the system can realize (grid over the
// deformation supports plus the linear branch), applied to `directions` unit
// vectors on the cone boundary.  Margin: alpha*|core(Jv)| - |comp(Jv)|.
CertReport cone_invariance(const DaSystem& sys, const ConeSpec& cone, ConeDirection dir,
                           const GridSpec& grid);

// Minimum of |det(Df|_V)| over the one-parameter family of planes V
// containing the strong-unstable direction at x.  Gram-identity evaluation;
// the closed-form minimum over the continuous family is returned alongside.
struct PlaneDetResult {
    double min_sweep = 0;      // over the discrete angle family
    double min_closed_form = 0; // smallest eigenvalue of the restricted form
    double min_regime_small_c = 0; // |c| <= 1/100
    double min_regime_large_c = 0; // |c| >= 1/100 including the pole
    double angle_at_min = 0;
};
PlaneDetResult pve_min_det(const DaSystem& f, const TorusPoint& x, int angles = 181);

struct PveDetReport {
    CertReport overall;        // min det^2 - 1 over the sweep
    CertReport regime_small_c; // the |c| <= 1/100 family
    CertReport regime_large_c; // |c| >= 1/100 plus the pole
    double closed_form_gap = 0; // max over samples of (sweep min - continuous min)
    // proof-side sufficient conditions (reported, not gating):
    double sup_slope = 0; // sup |eps(x)| over the sweep
    double sup_u = 0;     // sup |8 eps (-Qc)(-Qa+eps)|
    double sup_w = 0;     // sup |8 eps (1+eps Qa)(-Qa+eps)|
};
PveDetReport pve_min_det_sweep(const DaSystem& f, const GridSpec& grid);

// Strong-unstable direction at x (frame coordinates), from pushing the
// dominant axis through the Jacobian cocycle along the preimage orbit.  Two
// independent starts must agree to 1e-10 (cocycle memory loss), else
// numerical_error.
Vec3 estimate_unstable_direction(const DaSystem& sys, const TorusPoint& x, int iters);

// Center-unstable / center-stable directions of the mixed system inside the
// invariant plane E^u + E^ss, as (u, ss) frame components.
struct Vec2 {
    double u = 0, ss = 0;
};
Vec2 estimate_center_unstable(const DaSystem& G, const TorusPoint& x, int iters);
Vec2 estimate_center_stable(const DaSystem& G, const TorusPoint& x, int iters);
// one-step expansion rate of the 2-D block along the direction at x
double center_block_rate(const DaSystem& G, const TorusPoint& x, const Vec2& v);

// Center-bundle determinant bounds of the mixed construction: on the q1
// support |det DG|F^cu| >= 1/2 - kappa2, off it >= lambda_u/sqrt(1+kappa2^2);
// on the q2 support |det DG|F^cs| <= 2 + kappa2, off it
// <= sqrt(1+kappa2^2)*lambda_ss.
struct MixedDetReport {
    CertReport cu_on_q1, cu_off_q1;
    CertReport cs_on_q2, cs_off_q2;
};
MixedDetReport mixed_center_det_check(const DaSystem& G, const GridSpec& grid);

// Doubling search over k: the smallest k (up to 2^20) for which every check
// passes.  The check list runs against a freshly built system at each k.
struct KSearchOutcome {
    long k = 0;
    std::vector<std::pair<long, std::string>> failures; // (k, failing check)
    std::vector<CertReport> final_reports;
};
KSearchOutcome search_k(const std::function<DaSystem(long)>& builder,
                        const std::function<std::vector<CertReport>(const DaSystem&)>& checks,
                        long cap = 1 << 20);

struct FixedPointSpectrum {
    TorusPoint point;
    Vec3 eigenvalues; // diagonal of the (triangular) Jacobian at the point
    int unstable_index = 0;
};
std::vector<FixedPointSpectrum> fixed_point_spectrum(const DaSystem& sys);

} // namespace daforge
