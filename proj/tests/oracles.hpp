#pragma once

// Test-only oracles, kept independent of the library code paths they check.

#include <array>
#include <cstdint>
#include <vector>

#include "daforge/geometry.hpp"
#include "daforge/systems.hpp"
#include "daforge/torus.hpp"

namespace oracles {

// Real roots of x^3 - a2 x^2 + a1 x - a0 by sign-change bisection on a dense
// grid (no closed form, no Newton), sorted by descending |root|.
std::vector<double> cubic_roots_bisection(std::int64_t a2, std::int64_t a1, std::int64_t a0);

// Central finite differences of sys.apply in frame coordinates, with
// per-axis steps adapted to the deformation support widths.
daforge::Mat3 jacobian_fd(const daforge::DaSystem& sys, const daforge::TorusPoint& x,
                          const daforge::Vec3& steps);

// |det| of the restriction of J to the plane spanned by the orthonormal pair
// (u, v), computed via explicit orthonormal bases of the plane and its image
// (independent of the Gram identity).
double plane_det_orthonormal(const daforge::Mat3& J, const daforge::Vec3& u,
                             const daforge::Vec3& v);

} // namespace oracles
