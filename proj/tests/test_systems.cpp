#include <doctest.h>

#include <cmath>

#include "daforge/bump.hpp"
#include "daforge/rng.hpp"
#include "daforge/systems.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace daforge;

TEST_CASE("pve parameters satisfy the construction relations") {
    const PveParams& p = fixtures::pve_params();
    const BumpBound mb = compute_m(p.bump, 4000, 3);
    // M of the appendix lemma at gamma = 1/100
    const double M = 0.9 / ((1e4 + 1.01) * (1.0 + 1e-6));
    CHECK_NOTHROW(p.validate(mb.m, M));
    CHECK(p.lambda_uu > 2.0);
    CHECK(p.lambda_s < 1.0);
    CHECK(std::abs(p.lambda_ss * p.lambda_s * p.lambda_uu - 1.0) < 1e-10);

    // n = 6 violates M/lambda_s^2 > 2 for this bump shape
    const auto bad = PveParams::make(matrix_D(), 6, 1024, 0.000625, 4.33, 0.05,
                                     BumpShape::SmoothstepExp, fixed_points(matrix_D())[0]);
    CHECK_THROWS_AS(bad.validate(mb.m, M), unsupported_error);
}

TEST_CASE("mixed parameters satisfy the construction relations") {
    const MixedParams& p = fixtures::mixed_params();
    const BumpBound mb = compute_m(p.bump, 4000, 3);
    CHECK_NOTHROW(p.validate(mb.m));
    CHECK(p.lambda_ss < 0.5);
    CHECK(p.lambda_u > 2.0);

    const auto fps = fixed_points(matrix_C());
    const auto bad = MixedParams::make(matrix_C(), 2, 16, 0.000625, 0.499999, 0.05,
                                       BumpShape::SmoothstepExp, fps[0], fps[1]);
    CHECK_THROWS_AS(bad.validate(mb.m), unsupported_error);
}

TEST_CASE("deformation P: plateau values and partials") {
    const PveParams& p = fixtures::pve_params();
    const double d = p.bump.delta;
    const double slab = d / static_cast<double>(p.k);

    // every term carries a factor b
    for (double a : {0.0, 0.3 * d, 0.9 * d})
        for (double c : {0.0, -0.4 * d}) {
            CHECK(deformation_P(p, a, 0.0, c).value == 0.0);
        }

    // outside the slab psi(kb) = 0, so P = b / lambda_s exactly
    const DeformPartials far = deformation_P(p, 0.1 * d, 2.0 * slab, 0.0);
    CHECK(far.value == 2.0 * slab / p.lambda_s);
    CHECK(far.db == 1.0 / p.lambda_s);
    CHECK(far.da == 0.0);
    CHECK(far.dc == 0.0);

    // lambda_s * P(a, delta, c) = delta (the invariant segment endpoint)
    CHECK(p.lambda_s * deformation_P(p, 0.2 * d, d, 0.1 * d).value ==
          doctest::Approx(d).epsilon(1e-15));

    // 1/2 <= dP/db <= 1/(2 lambda_ss) on a dense sample of the support
    SplitMix64 rng(23);
    for (int i = 0; i < 20000; ++i) {
        const double a = (rng.uniform() * 2 - 1) * d;
        const double b = (rng.uniform() * 2 - 1) * slab;
        const double c = (rng.uniform() * 2 - 1) * d;
        const double pb = deformation_P(p, a, b, c).db;
        CHECK(pb >= 0.5 - 1e-12);
        CHECK(pb <= 1.0 / (2.0 * p.lambda_ss) + 1e-9);
    }
}

TEST_CASE("deformation Q: plateau values and the mix bounds") {
    const MixedParams& p = fixtures::mixed_params();
    const double d = p.bump.delta;
    const double slab = d / static_cast<double>(p.k);

    CHECK(deformation_Q(p, 1, 0.1 * d, 0.0, 0.0).value == 0.0);
    CHECK(deformation_Q(p, 2, 0.1 * d, 0.2 * d, 0.0).value == 0.0);

    // outside the slab Q1 = lambda_u * b
    const DeformPartials far = deformation_Q(p, 1, 0.0, 2.0 * slab, 0.0);
    CHECK(far.value == p.lambda_u * 2.0 * slab);
    CHECK(far.db == p.lambda_u);

    SplitMix64 rng(29);
    for (int i = 0; i < 20000; ++i) {
        const double a = (rng.uniform() * 2 - 1) * d;
        const double s = (rng.uniform() * 2 - 1) * slab;
        const double w = (rng.uniform() * 2 - 1) * d;
        const double q1b = deformation_Q(p, 1, a, s, w).db;
        CHECK(q1b >= 0.5 - 1e-12);
        CHECK(q1b <= p.lambda_uu / 2.0 + 1e-9);
        const double q2c = deformation_Q(p, 2, a, w, s).dc;
        CHECK(q2c >= 0.5 - 1e-12);
    }

    CHECK_THROWS_AS(deformation_Q(p, 3, 0, 0, 0), unsupported_error);
}

TEST_CASE("f fixes p and agrees bitwise with A away from the deformation") {
    const DaSystem f = fixtures::pve_f();
    const PveParams& p = f.pve();

    const TorusPoint fp = f.apply(p.chart.center);
    CHECK(fp == p.chart.center);

    SplitMix64 rng(31);
    int outside = 0;
    for (int i = 0; i < 10000; ++i) {
        const TorusPoint x{{rng.uniform(), rng.uniform(), rng.uniform()}};
        const TorusPoint ax = lattice_apply(p.fwd, x);
        const Vec3 local = p.chart.local_coords(ax);
        const double slab = p.bump.delta / static_cast<double>(p.k);
        if (std::abs(local.y) < slab && local.x * local.x + local.z * local.z <
                                            p.bump.delta * p.bump.delta)
            continue; // would be deformed
        ++outside;
        CHECK(f.apply(x) == ax);
    }
    CHECK(outside > 9900); // the support is a measure ~1e-9 slab
}

TEST_CASE("apply round trips at 1e-9 for all three systems") {
    SplitMix64 rng(37);
    for (const DaSystem& sys : {fixtures::pve_f(), fixtures::pve_g(), fixtures::mixed_G()}) {
        double worst = 0;
        for (int i = 0; i < 10000; ++i) {
            const TorusPoint x{{rng.uniform(), rng.uniform(), rng.uniform()}};
            const TorusPoint y = sys.apply(x);
            const TorusPoint back = sys.apply_inverse(y);
            worst = std::max(worst, torus_distance(back, x));
        }
        CAPTURE(variant_name(sys.variant()));
        CHECK(worst < 1e-9);
    }
}

TEST_CASE("round trips through the deformation slab itself") {
    const DaSystem f = fixtures::pve_f();
    const PveParams& p = f.pve();
    const double slab = p.bump.delta / static_cast<double>(p.k);
    SplitMix64 rng(41);
    double worst = 0;
    for (int i = 0; i < 2000; ++i) {
        // z in the deformation support; x = f^{-1}(z) guarantees f deforms at x
        const Vec3 local{(rng.uniform() * 2 - 1) * p.bump.delta * 0.7,
                         (rng.uniform() * 2 - 1) * slab,
                         (rng.uniform() * 2 - 1) * p.bump.delta * 0.7};
        const TorusPoint z = p.chart.from_local(local);
        const TorusPoint x = f.apply_inverse(z);
        worst = std::max(worst, torus_distance(f.apply_inverse(f.apply(x)), x));
    }
    CHECK(worst < 1e-9);

    const DaSystem G = fixtures::mixed_G();
    const MixedParams& mp = G.mixed();
    const double mslab = mp.bump.delta / static_cast<double>(mp.k);
    worst = 0;
    for (int i = 0; i < 2000; ++i) {
        const Vec3 l1{(rng.uniform() * 2 - 1) * mp.bump.delta * 0.7,
                      (rng.uniform() * 2 - 1) * mslab,
                      (rng.uniform() * 2 - 1) * mp.bump.delta * 0.7};
        const TorusPoint x1 = mp.chart_q1.from_local(l1);
        worst = std::max(worst, torus_distance(G.apply_inverse(G.apply(x1)), x1));
        const Vec3 l2{(rng.uniform() * 2 - 1) * mp.bump.delta * 0.7,
                      (rng.uniform() * 2 - 1) * mp.bump.delta * 0.7,
                      (rng.uniform() * 2 - 1) * mslab};
        const TorusPoint x2 = mp.chart_q2.from_local(l2);
        worst = std::max(worst, torus_distance(G.apply_inverse(G.apply(x2)), x2));
    }
    CHECK(worst < 1e-9);
}

TEST_CASE("box preservation: the deformations fix the boundary pointwise and the exterior bitwise") {
    const DaSystem f = fixtures::pve_f();
    const PveParams& p = f.pve();
    SplitMix64 rng(43);
    for (int i = 0; i < 2500; ++i) {
        // a point on the boundary of Lambda(p): clamp one axis to +-half_inner
        Vec3 local{(rng.uniform() * 2 - 1) * p.chart.half_inner,
                   (rng.uniform() * 2 - 1) * p.chart.half_inner,
                   (rng.uniform() * 2 - 1) * p.chart.half_inner};
        const int axis = static_cast<int>(rng.next() % 3);
        local[axis] = (rng.next() & 1) ? p.chart.half_inner : -p.chart.half_inner;
        const TorusPoint x = p.chart.from_local(local);
        const TorusPoint y = f.deformation_apply(x);
        const Vec3 ly = p.chart.local_coords(y);
        // stays on the boundary (in fact pointwise fixed: the bump vanishes)
        CHECK(torus_distance(y, x) < 1e-9);
        CHECK(std::abs(std::abs(ly[axis]) - p.chart.half_inner) < 1e-9);

        // exterior points are bitwise fixed by I_k
        Vec3 ext = local;
        ext[axis] *= 1.5;
        const TorusPoint xe = p.chart.from_local(ext);
        CHECK(f.deformation_apply(xe) == xe);
        CHECK(f.deformation_apply_inverse(xe) == xe);
    }

    const DaSystem G = fixtures::mixed_G();
    const MixedParams& mp = G.mixed();
    for (int region = 0; region < 2; ++region) {
        const BoxChart& chart = region == 0 ? mp.chart_q1 : mp.chart_q2;
        for (int i = 0; i < 2500; ++i) {
            Vec3 local{(rng.uniform() * 2 - 1) * chart.half_inner,
                       (rng.uniform() * 2 - 1) * chart.half_inner,
                       (rng.uniform() * 2 - 1) * chart.half_inner};
            const int axis = static_cast<int>(rng.next() % 3);
            local[axis] = (rng.next() & 1) ? chart.half_inner : -chart.half_inner;
            const TorusPoint x = chart.from_local(local);
            CHECK(torus_distance(G.deformation_apply(x), x) < 1e-9);
            Vec3 ext = local;
            ext[axis] *= 1.5;
            const TorusPoint xe = chart.from_local(ext);
            CHECK(G.deformation_apply(xe) == xe);
        }
    }
}

TEST_CASE("I_k maps each center segment onto itself") {
    const DaSystem f = fixtures::pve_f();
    const PveParams& p = f.pve();
    const double slab = p.bump.delta / static_cast<double>(p.k);
    SplitMix64 rng(47);
    for (int i = 0; i < 300; ++i) {
        const double a = (rng.uniform() * 2 - 1) * p.bump.delta * 0.8;
        const double c = (rng.uniform() * 2 - 1) * p.bump.delta * 0.8;
        // endpoints of the invariant segment map to themselves
        for (double b : {-slab, slab}) {
            const TorusPoint x = p.chart.from_local({a, b, c});
            CHECK(torus_distance(f.deformation_apply_inverse(x), x) < 1e-12);
        }
        // interior points stay on the segment: a and c are unchanged
        const double b = (rng.uniform() * 2 - 1) * slab;
        const TorusPoint x = p.chart.from_local({a, b, c});
        const Vec3 img = p.chart.local_coords(f.deformation_apply_inverse(x));
        CHECK(std::abs(img.x - a) < 1e-13);
        CHECK(std::abs(img.z - c) < 1e-13);
        CHECK(std::abs(img.y) <= slab * (1 + 1e-12));
    }
}

TEST_CASE("b -> lambda_s P(a,b,c) is strictly increasing") {
    const PveParams& p = fixtures::pve_params();
    const double slab = p.bump.delta / static_cast<double>(p.k);
    SplitMix64 rng(53);
    for (int i = 0; i < 1000; ++i) {
        const double a = (rng.uniform() * 2 - 1) * p.bump.delta;
        const double c = (rng.uniform() * 2 - 1) * p.bump.delta;
        double prev = p.lambda_s * deformation_P(p, a, -slab, c).value;
        for (int j = 1; j <= 32; ++j) {
            const double b = -slab + 2 * slab * j / 32.0;
            const double v = p.lambda_s * deformation_P(p, a, b, c).value;
            CHECK(v > prev);
            prev = v;
        }
    }
}

TEST_CASE("max |P_a|, |P_c| decay like 1/k") {
    SplitMix64 rng(59);
    double prev_max = 1e300;
    for (long k : {4L, 8L, 16L, 32L, 64L}) {
        const PveParams& p = fixtures::pve_params(k);
        const double slab = p.bump.delta / static_cast<double>(k);
        double mx = 0;
        for (int i = 0; i < 4000; ++i) {
            const double a = (rng.uniform() * 2 - 1) * p.bump.delta;
            const double b = (rng.uniform() * 2 - 1) * slab;
            const double c = (rng.uniform() * 2 - 1) * p.bump.delta;
            const DeformPartials d = deformation_P(p, a, b, c);
            mx = std::max({mx, std::abs(d.da), std::abs(d.dc)});
        }
        CHECK(mx < prev_max);
        prev_max = mx;
    }
    CHECK(prev_max < 20.0); // ~556/64
}

TEST_CASE("jacobian matches finite differences (all variants, deformed region)") {
    SplitMix64 rng(61);

    auto check_fd = [&](const DaSystem& sys, const TorusPoint& x, const Vec3& steps) {
        const Mat3 an = sys.jacobian(x);
        const Mat3 fd = oracles::jacobian_fd(sys, x, steps);
        const Mat3 fd2 = oracles::jacobian_fd(sys, x, steps * 0.5);
        const double scale = std::max(1.0, an.max_abs());
        double err = 0, err2 = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                err = std::max(err, std::abs(an(i, j) - fd(i, j)));
                err2 = std::max(err2, std::abs(an(i, j) - fd2(i, j)));
            }
        CHECK(std::min(err, err2) / scale < 1e-6);
    };

    const DaSystem f = fixtures::pve_f();
    const PveParams& p = f.pve();
    const double d = p.bump.delta;
    const double slab = d / static_cast<double>(p.k);
    const Vec3 f_steps{1e-4 * d / p.lambda_uu, 3e-4 * slab / p.lambda_s, 1e-4 * d / p.lambda_ss};
    const Vec3 g_steps{1e-4 * d, 3e-4 * slab, 1e-4 * d};
    const DaSystem g = fixtures::pve_g();

    for (int i = 0; i < 120; ++i) {
        const Vec3 local{(rng.uniform() * 2 - 1) * d * 0.7, (rng.uniform() * 2 - 1) * slab,
                         (rng.uniform() * 2 - 1) * d * 0.7};
        const TorusPoint z = p.chart.from_local(local);
        // f-jacobian is deformed where A x lands in the support
        check_fd(f, f.apply_inverse(z), f_steps);
        // g partials are evaluated at the point itself
        check_fd(g, z, g_steps);
    }
    // linear branch
    for (int i = 0; i < 30; ++i) {
        const TorusPoint x{{rng.uniform(), rng.uniform(), rng.uniform()}};
        check_fd(f, x, f_steps);
        check_fd(g, x, g_steps);
    }

    const DaSystem G = fixtures::mixed_G();
    const MixedParams& mp = G.mixed();
    const double md = mp.bump.delta;
    const double mslab = md / static_cast<double>(mp.k);
    for (int i = 0; i < 120; ++i) {
        const Vec3 l1{(rng.uniform() * 2 - 1) * md * 0.7, (rng.uniform() * 2 - 1) * mslab,
                      (rng.uniform() * 2 - 1) * md * 0.7};
        check_fd(G, mp.chart_q1.from_local(l1), {1e-4 * md, 3e-4 * mslab, 1e-4 * md});
        const Vec3 l2{(rng.uniform() * 2 - 1) * md * 0.7, (rng.uniform() * 2 - 1) * md * 0.7,
                      (rng.uniform() * 2 - 1) * mslab};
        check_fd(G, mp.chart_q2.from_local(l2), {1e-4 * md, 1e-4 * md, 3e-4 * mslab});
    }
    for (int i = 0; i < 30; ++i) {
        const TorusPoint x{{rng.uniform(), rng.uniform(), rng.uniform()}};
        check_fd(G, x, {1e-4 * md, 1e-4 * md, 3e-4 * mslab});
    }
}

TEST_CASE("Dg(f(x)) Df(x) = identity") {
    const DaSystem f = fixtures::pve_f();
    const DaSystem g = fixtures::pve_g();
    const PveParams& p = f.pve();
    const double slab = p.bump.delta / static_cast<double>(p.k);
    SplitMix64 rng(67);
    for (int i = 0; i < 1000; ++i) {
        TorusPoint x;
        if (i % 2 == 0) {
            x = TorusPoint{{rng.uniform(), rng.uniform(), rng.uniform()}};
        } else {
            const Vec3 local{(rng.uniform() * 2 - 1) * p.bump.delta * 0.7,
                             (rng.uniform() * 2 - 1) * slab,
                             (rng.uniform() * 2 - 1) * p.bump.delta * 0.7};
            x = f.apply_inverse(p.chart.from_local(local));
        }
        const Mat3 prod = g.jacobian(f.apply(x)) * f.jacobian(x);
        for (int r = 0; r < 3; ++r)
            for (int c = 0; c < 3; ++c)
                CHECK(std::abs(prod(r, c) - (r == c ? 1.0 : 0.0)) < 1e-8);
    }
}

TEST_CASE("det Df = lambda_uu lambda_ss / P_b inside the deformed region") {
    const DaSystem f = fixtures::pve_f();
    const PveParams& p = f.pve();
    const double slab = p.bump.delta / static_cast<double>(p.k);
    SplitMix64 rng(71);
    for (int i = 0; i < 2000; ++i) {
        const Vec3 local{(rng.uniform() * 2 - 1) * p.bump.delta * 0.7,
                         (rng.uniform() * 2 - 1) * slab,
                         (rng.uniform() * 2 - 1) * p.bump.delta * 0.7};
        const Mat3 J = f.jacobian_at_support(0, local.x, local.y, local.z);
        const double pb = deformation_P(p, local.x, local.y, local.z).db;
        const double expected = p.lambda_uu * p.lambda_ss / pb;
        CHECK(std::abs(J.det() - expected) <= 1e-10 * std::abs(expected));
    }
    // outside: det = 1 exactly up to the eigenvalue product
    CHECK(std::abs(f.jacobian_linear().det() - 1.0) < 1e-10);
}

TEST_CASE("center derivative of g") {
    const DaSystem g = fixtures::pve_g();
    const PveParams& p = g.pve();

    CHECK(g.center_derivative(p.chart.center) == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(g.center_derivative(TorusPoint{{0.25, 0.33, 0.41}}) == 1.0 / p.lambda_s);

    const double slab = p.bump.delta / static_cast<double>(p.k);
    SplitMix64 rng(73);
    for (int i = 0; i < 3000; ++i) {
        const Vec3 local{(rng.uniform() * 2 - 1) * p.bump.delta,
                         (rng.uniform() * 2 - 1) * slab * 1.4,
                         (rng.uniform() * 2 - 1) * p.bump.delta};
        const double v = g.center_derivative(p.chart.from_local(local));
        CHECK(v >= 0.5 - 1e-12);
        CHECK(v <= 1.0 / (2.0 * p.lambda_ss) + 1e-9);
    }

    CHECK_THROWS_AS(fixtures::pve_f().center_derivative(p.chart.center), unsupported_error);
    CHECK_THROWS_AS(fixtures::mixed_G().center_derivative(p.chart.center), unsupported_error);
}

TEST_CASE("fixed point jacobians match the diagonal forms") {
    const DaSystem f = fixtures::pve_f();
    const PveParams& p = f.pve();
    const Mat3 Jp = f.jacobian(p.chart.center);
    CHECK(Jp(0, 0) == doctest::Approx(p.lambda_uu).epsilon(1e-12));
    CHECK(Jp(1, 1) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(Jp(2, 2) == doctest::Approx(p.lambda_ss).epsilon(1e-12));
    CHECK(std::abs(Jp(1, 0)) < 1e-9);
    CHECK(std::abs(Jp(1, 2)) < 1e-9);

    const DaSystem G = fixtures::mixed_G();
    const MixedParams& mp = G.mixed();
    const Mat3 J1 = G.jacobian(mp.chart_q1.center);
    CHECK(J1(0, 0) == doctest::Approx(mp.lambda_uu).epsilon(1e-12));
    CHECK(J1(1, 1) == doctest::Approx(0.5).epsilon(1e-10));
    CHECK(J1(2, 2) == doctest::Approx(mp.lambda_ss).epsilon(1e-12));
    const Mat3 J2 = G.jacobian(mp.chart_q2.center);
    CHECK(J2(0, 0) == doctest::Approx(mp.lambda_uu).epsilon(1e-12));
    CHECK(J2(1, 1) == doctest::Approx(mp.lambda_u).epsilon(1e-12));
    CHECK(J2(2, 2) == doctest::Approx(2.0).epsilon(1e-10));
}

TEST_CASE("linear systems reduce to the diagonal action") {
    const DaSystem lin = DaSystem::linear(fixtures::pve_f());
    const PveParams& p = lin.pve();
    SplitMix64 rng(79);
    for (int i = 0; i < 200; ++i) {
        const TorusPoint x{{rng.uniform(), rng.uniform(), rng.uniform()}};
        CHECK(lin.apply(x) == lattice_apply(p.fwd, x));
        const Mat3 J = lin.jacobian(x);
        CHECK(J(0, 0) == p.lambda_uu);
        CHECK(J(1, 1) == p.lambda_s);
        CHECK(J(2, 2) == p.lambda_ss);
    }
}
