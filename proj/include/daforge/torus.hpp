#pragma once

// Lattice automorphisms of T^3 = R^3/Z^3: eigen-structure, fixed points, and
// local box charts aligned with an orthonormal eigenframe.
//
// Conventions used throughout the library:
//   * Torus points live in [0,1)^3.
//   * lift_near(x, base) picks the deck representative whose per-coordinate
//     displacement from base lies in (-1/2, 1/2]; ties go to +1/2.
//   * Chart coordinates (a,b,c) are inner products of the lifted displacement
//     with the frame axes, ordered by descending |eigenvalue|.
//   * The lattice action on points is evaluated with error-free products so
//     large powers of the base matrix do not lose low bits before wrapping.

#include <array>
#include <optional>
#include <vector>

#include "daforge/geometry.hpp"

namespace daforge {

struct TorusPoint {
    Vec3 c; // each coordinate in [0,1)

    bool operator==(const TorusPoint& o) const {
        return c.x == o.c.x && c.y == o.c.y && c.z == o.c.z;
    }
};

TorusPoint wrap(const Vec3& v);
Vec3 lift_near(const TorusPoint& x, const Vec3& base_lift);
inline Vec3 lift_near(const TorusPoint& x, const TorusPoint& base) {
    return lift_near(x, base.c);
}

// torus distance: min over deck translates of the Euclidean norm
double torus_distance(const TorusPoint& a, const TorusPoint& b);

struct LatticeAutomorphism {
    Mat3i entries;

    // Validates |det| = 1.  Hyperbolicity is checked by eigen_decompose.
    explicit LatticeAutomorphism(const Mat3i& e);

    std::int64_t det() const { return entries.det(); }
    Mat3i inverse() const; // integer inverse (exists since |det| = 1)
};

// The two automorphisms this library is built around.
LatticeAutomorphism matrix_D(); // [[2,1,1],[1,1,1],[1,1,0]]
LatticeAutomorphism matrix_C(); // [[1,-1,0],[-1,1,1],[0,1,-1]] == D^{-1}

// Exact action of an integer matrix on a torus point (wrapped).
TorusPoint lattice_apply(const Mat3i& M, const TorusPoint& x);
// Same action on a lifted point in R^3 (no wrap).
Vec3 lattice_apply_lifted(const Mat3i& M, const Vec3& v);

struct EigenFrame {
    std::array<Vec3, 3> vectors;  // e_uu, e_mid, e_ss (orthonormal)
    std::array<double, 3> values; // signed, |values[0]| > |values[1]| > |values[2]|

    const Vec3& e_uu() const { return vectors[0]; }
    const Vec3& e_mid() const { return vectors[1]; }
    const Vec3& e_ss() const { return vectors[2]; }

    Vec3 to_frame(const Vec3& ambient) const {
        return {vectors[0].dot(ambient), vectors[1].dot(ambient), vectors[2].dot(ambient)};
    }
    Vec3 to_ambient(const Vec3& f) const {
        return vectors[0] * f.x + vectors[1] * f.y + vectors[2] * f.z;
    }
};

// Characteristic polynomial x^3 - a2 x^2 + a1 x - a0 of an integer matrix,
// returned as (a2, a1, a0) exactly.
std::array<std::int64_t, 3> char_poly(const Mat3i& M);

// Orthonormal eigen-decomposition of a symmetric hyperbolic unimodular matrix.
// Roots come from the closed-form cubic with one Newton polish each.
// Throws unsupported_error (non-symmetric) or numerical_error (not hyperbolic).
EigenFrame eigen_decompose(const LatticeAutomorphism& M, double hyperbolicity_tol = 1e-9);

// Frame of M^exponent: same axes, values raised to the (even, >= 2) exponent.
EigenFrame power_eigen(const EigenFrame& frame, int exponent);

// All solutions of M x = x (mod Z^3), found by exact rational enumeration.
// Exactly |det(M - I)| points; throws numerical_error if det(M - I) = 0.
std::vector<TorusPoint> fixed_points(const LatticeAutomorphism& M);

struct BoxChart {
    TorusPoint center;
    EigenFrame frame;
    double half_inner; // 2*delta, bounds the deformation box Lambda
    double half_outer; // 4*delta, bounds the chart neighborhood U

    BoxChart(const TorusPoint& c, const EigenFrame& f, double hi, double ho);

    double inner_circumradius() const { return half_inner * 1.7320508075688772; }
    double outer_circumradius() const { return half_outer * 1.7320508075688772; }

    // (a,b,c) local coordinates of the lift of x nearest to center.
    Vec3 local_coords(const TorusPoint& x) const {
        const Vec3 d = lift_near(x, center) - center.c;
        return frame.to_frame(d);
    }
    TorusPoint from_local(const Vec3& local) const {
        return wrap(center.c + frame.to_ambient(local));
    }
    bool inside_inner(const Vec3& local) const {
        return std::abs(local.x) < half_inner && std::abs(local.y) < half_inner &&
               std::abs(local.z) < half_inner;
    }
};

// Checked chart transform: throws numerical_error when the point falls outside
// the chart's outer box (no well-defined local coordinates there).
Vec3 to_local(const TorusPoint& x, const BoxChart& chart);
TorusPoint from_local(const Vec3& local, const BoxChart& chart);

// Total length of the segment [x - radius*dir, x + radius*dir] (dir a unit
// vector) intersected with every deck translate of the chart's inner box.
double ss_segment_box_mass(const TorusPoint& x, const Vec3& direction, double radius,
                           const BoxChart& chart);

} // namespace daforge
