#pragma once

// Shared system fixtures at known-good parameters.  The values mirror what
// the parameter searches produce for the default bump shape; construction
// still runs the full validation, so any drift would fail loudly here.

#include "daforge/systems.hpp"
#include "daforge/torus.hpp"

namespace fixtures {

inline const daforge::PveParams& pve_params(long k = 1024) {
    static auto make = [](long kk) {
        using namespace daforge;
        const auto D = matrix_D();
        const auto p = fixed_points(D)[0];
        return PveParams::make(D, 7, kk, 0.000625, 4.33, 0.05, BumpShape::SmoothstepExp, p);
    };
    static const daforge::PveParams cached = make(1024);
    static const daforge::PveParams cached_k1 = make(1);
    if (k == 1024) return cached;
    if (k == 1) return cached_k1;
    thread_local daforge::PveParams scratch = make(k);
    scratch = make(k);
    return scratch;
}

inline const daforge::MixedParams& mixed_params(long k = 256) {
    static auto make = [](long kk) {
        using namespace daforge;
        const auto C = matrix_C();
        const auto fps = fixed_points(C);
        return MixedParams::make(C, 3, kk, 0.000625, 0.499999, 0.05, BumpShape::SmoothstepExp,
                                 fps[0], fps[1]);
    };
    static const daforge::MixedParams cached = make(256);
    if (k == 256) return cached;
    thread_local daforge::MixedParams scratch = make(k);
    scratch = make(k);
    return scratch;
}

inline daforge::DaSystem pve_f(long k = 1024) {
    return daforge::DaSystem::pve_f(pve_params(k));
}
inline daforge::DaSystem pve_g(long k = 1024) {
    return daforge::DaSystem::pve_inverse_g(pve_params(k));
}
inline daforge::DaSystem mixed_G(long k = 256) {
    return daforge::DaSystem::mixed_g(mixed_params(k));
}

} // namespace fixtures
