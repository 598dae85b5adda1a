#pragma once

// The three derived-from-Anosov systems on T^3.
//
//   f = I_k o A,  A = D^{2n}:   the deformation I_k rescales the middle
//       (weak-stable) coordinate b inside a thin slab around the fixed point p.
//       I_k is given in closed form through its inverse
//           I_k^{-1}(a,b,c) = (a, lambda_s * P(a,b,c), c),
//           P(a,b,c) = psi(k b) psi(r) (1/2 - 1/lambda_s) b + b/lambda_s,
//       with r = sqrt(a^2 + c^2); the forward branch is recovered by a
//       safeguarded Newton solve of the strictly monotone 1-D map
//       b -> lambda_s * P(a,b,c)  (dP/db >= 1/2 gives a global guarantee).
//
//   g = f^{-1}:   same parameters, roles of apply/apply_inverse exchanged.
//
//   G = B o J_k,  B = C^{2n}:   deformations at two fixed points.  At q1 the
//       middle coordinate b is rescaled in closed forward form
//           J_k(a,b,c) = (a, Q1(a,b,c)/lambda_u, c),
//       at q2 the strong-stable coordinate c is rescaled through the inverse
//           J_k^{-1}(a,b,c) = (a, b, lambda_ss * Q2(a,b,c)).
//
// Everywhere outside the open deformation supports the maps coincide bitwise
// with the linear automorphisms.  Jacobians are analytic, expressed in the
// orthonormal eigenframe of the base automorphism, with deformation partials
// evaluated at the correct pullback point per branch.

#include <memory>
#include <string>

#include "daforge/bump.hpp"
#include "daforge/torus.hpp"

namespace daforge {

enum class Variant { PveF, PveInverseG, MixedG };

std::string variant_name(Variant v);

// left-hand sides of the kappa relations tying the cone constant to the
// eigenvalues; the construction requires the first positive and (mixed) the
// last negative
double pve_kappa_lhs(double kappa, double lambda_s);
double mixed_kappa2_lhs(double kappa2, double lambda_u);
double mixed_kappa33_lhs(double kappa2, double lambda_ss);

struct PveParams {
    LatticeAutomorphism base; // D
    int n;                    // A = D^{2n}
    long k;                   // deformation sharpness
    BumpProfile bump;         // psi with its delta
    double kappa;             // cone constant of the length-envelope relations
    double epsilon;           // certified cone aperture, epsilon <= kappa
    EigenFrame base_frame;    // frame of D (signed values)
    EigenFrame frame;         // frame of A (positive values)
    Mat3i fwd, inv;           // D^{2n}, D^{-2n} exact
    BoxChart chart;           // at the fixed point p
    double lambda_uu, lambda_s, lambda_ss;

    // delta = bump.delta; chart half-widths are 2*delta / 4*delta.
    static PveParams make(const LatticeAutomorphism& D, int n, long k, double delta,
                          double kappa, double epsilon, BumpShape shape,
                          const TorusPoint& p);
    // Construction-time relations: eigenvalue ordering, product = 1,
    // M/lambda_s^2 > 2, the m-inequality, kappa relation, epsilon <= kappa.
    void validate(double m, double M_paowu) const;
};

struct MixedParams {
    LatticeAutomorphism base; // C
    int n;                    // B = C^{2n}
    long k;
    BumpProfile bump;         // phi with its delta
    double kappa2;
    double epsilon;           // 2 eps^2 <= kappa2^2
    EigenFrame base_frame;    // frame of C
    EigenFrame frame;         // frame of B
    Mat3i fwd, inv;
    BoxChart chart_q1, chart_q2;
    double lambda_uu, lambda_u, lambda_ss;

    static MixedParams make(const LatticeAutomorphism& C, int n, long k, double delta,
                            double kappa2, double epsilon, BumpShape shape,
                            const TorusPoint& q1, const TorusPoint& q2);
    void validate(double m) const;
};

struct DeformPartials {
    double value = 0; // P or Q
    double da = 0, db = 0, dc = 0;
};

// P(a,b,c) of the pve construction with its three analytic partials.
DeformPartials deformation_P(const PveParams& p, double a, double b, double c);
// Q1 (which = 1) or Q2 (which = 2) of the mixed construction.
DeformPartials deformation_Q(const MixedParams& p, int which, double a, double b, double c);

class DaSystem {
  public:
    static DaSystem pve_f(PveParams p);
    static DaSystem pve_inverse_g(PveParams p);
    static DaSystem mixed_g(MixedParams p);
    // Copy of a system with the deformation switched off (pure linear map);
    // used as the exactly-solvable reference in tests and sanity checks.
    static DaSystem linear(const DaSystem& sys);

    Variant variant() const { return variant_; }
    bool deformed() const { return deformation_enabled_; }

    const PveParams& pve() const;
    const MixedParams& mixed() const;

    // Frame of the base automorphism (A or B); all jacobians use this basis.
    const EigenFrame& frame() const;

    TorusPoint apply(const TorusPoint& x) const;
    TorusPoint apply_inverse(const TorusPoint& x) const;

    // Analytic tangent map at x in the eigenframe basis.
    Mat3 jacobian(const TorusPoint& x) const;

    // d/db of the center action of g (variant PveInverseG only): P_b inside
    // the deformation support, 1/lambda_s outside.
    double center_derivative(const TorusPoint& x) const;

    // The deformation alone (I_k or J_k) and its inverse.
    TorusPoint deformation_apply(const TorusPoint& x) const;
    TorusPoint deformation_apply_inverse(const TorusPoint& x) const;

    // Jacobian families parameterized over a deformation support, used by the
    // verification sweeps.  `region` is 0 (pve / q1) or 1 (q2); (a,b,c) are
    // local coordinates of the pullback point the partials are evaluated at.
    Mat3 jacobian_at_support(int region, double a, double b, double c) const;
    Mat3 jacobian_inverse_at_support(int region, double a, double b, double c) const;
    Mat3 jacobian_linear() const;
    Mat3 jacobian_linear_inverse() const;

    // Support geometry for sweep grids: half-width of the b (resp. c) slab and
    // the radial bound.
    double support_slab_half(int region) const;
    double support_radial(int region) const;
    int region_count() const { return variant_ == Variant::MixedG ? 2 : 1; }
    const BoxChart& region_chart(int region) const;

    // axis of the strong-unstable bundle of THIS system in frame coordinates
    int dominant_axis() const { return variant_ == Variant::PveInverseG ? 2 : 0; }
    // exact expansion rate of the linear part along that axis
    double dominant_rate() const;
    // middle / contracting rates of the linear part as seen by this system
    double middle_rate() const;

  private:
    DaSystem() = default;

    Variant variant_ = Variant::PveF;
    bool deformation_enabled_ = true;
    std::shared_ptr<const PveParams> pve_;
    std::shared_ptr<const MixedParams> mixed_;

    bool pve_support(const Vec3& local) const;
    bool q1_support(const Vec3& local) const;
    bool q2_support(const Vec3& local) const;

    // forward branch of the 1-D monotone solves
    double solve_pve_b(double a, double target, double c) const;
    double solve_q1_b(double a, double target, double c) const;
    double solve_q2_c(double a, double b, double target) const;

    TorusPoint f_apply(const TorusPoint& x) const;
    TorusPoint f_apply_inverse(const TorusPoint& x) const;
    TorusPoint g_apply_mixed(const TorusPoint& x) const;
    TorusPoint g_apply_inverse_mixed(const TorusPoint& x) const;
    Mat3 jacobian_f(const TorusPoint& x) const;
    Mat3 jacobian_g(const TorusPoint& x) const;
    Mat3 jacobian_G(const TorusPoint& x) const;
};

} // namespace daforge
