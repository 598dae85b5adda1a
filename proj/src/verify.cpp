#include "daforge/verify.hpp"

#include <algorithm>
#include <cmath>

#include "daforge/bump.hpp"
#include "daforge/parallel.hpp"

namespace daforge {

namespace {

constexpr double kSqrt3 = 1.7320508075688772;

struct Mat2 {
    double a = 0, b = 0, c = 0, d = 0;

    Vec2 apply(const Vec2& v) const { return {a * v.u + b * v.ss, c * v.u + d * v.ss}; }
    Mat2 inverse() const {
        const double det = a * d - b * c;
        return {d / det, -b / det, -c / det, a / det};
    }
};

Mat2 center_block(const Mat3& J) {
    return {J(1, 1), J(1, 2), J(2, 1), J(2, 2)};
}

Vec2 normalize2(const Vec2& v) {
    const double n = std::hypot(v.u, v.ss);
    return {v.u / n, v.ss / n};
}

double dist2(const Vec2& a, const Vec2& b) {
    return std::hypot(a.u - b.u, a.ss - b.ss);
}

} // namespace

bool ConeSpec::contains(const Vec3& v) const {
    double core2 = 0, comp2 = 0;
    for (int a : core_axes) core2 += v[a] * v[a];
    for (int a : complement_axes) comp2 += v[a] * v[a];
    return std::sqrt(comp2) <= alpha * std::sqrt(core2);
}

ConeSpec pve_unstable_cone(double eps) { return {eps, {0}, {1}}; }
ConeSpec pve_stable_cone(double eps) { return {eps, {2}, {1}}; }
ConeSpec mixed_uu_cone(double eps) { return {eps, {0}, {1, 2}}; }
ConeSpec mixed_cu_cone(double eps) { return {eps, {1}, {2}}; }
ConeSpec mixed_cs_cone(double eps) { return {eps, {2}, {1}}; }

double SearchResult::margin(const std::string& name) const {
    for (const auto& [n, v] : margins)
        if (n == name) return v;
    throw unsupported_error("SearchResult: no margin named " + name);
}

TuilunConstants lemma_tuilun_constants(double gamma) {
    if (!(gamma > 0)) throw unsupported_error("lemma_tuilun_constants: gamma must be positive");
    const double eps0 = gamma / 10.0;
    const double M =
        0.9 / ((1.0 / (gamma * gamma) + 101.0 / 100.0) * (1.0 + gamma * gamma / 100.0));
    return {eps0, M};
}

CertReport tuilun_grid_check(double gamma, long total_points, double c_max) {
    const TuilunConstants tc = lemma_tuilun_constants(gamma);
    const int nu = 21, ne = 21;
    const long nc = std::max<long>(4, (total_points + 2L * nu * ne - 1) / (2L * nu * ne));

    CertReport rep;
    rep.kind = "tuilun-grid";
    rep.min_margin = 1e300;
    for (int iu = 0; iu < nu; ++iu) {
        const double u = -tc.eps0 + 2.0 * tc.eps0 * iu / (nu - 1);
        for (int ie = 0; ie < ne; ++ie) {
            const double eps = -tc.eps0 + 2.0 * tc.eps0 * ie / (ne - 1);
            for (long ic = 0; ic < nc; ++ic) {
                const double mag = gamma + (c_max - gamma) * static_cast<double>(ic) / (nc - 1);
                for (double c : {mag, -mag}) {
                    const double ratio =
                        (c * c + c * u) / ((1.0 + eps * eps + c * c) * (1.0 + eps * eps));
                    const double margin = ratio - tc.M;
                    ++rep.samples;
                    if (margin < rep.min_margin) {
                        rep.min_margin = margin;
                        rep.witness.local = {u, eps, c};
                        rep.witness.value = ratio;
                    }
                }
            }
        }
    }
    // M is attained exactly at the |u| = eps0, |eps| = eps0, |c| = gamma
    // corner, so the margin there is pure rounding noise; violations must
    // exceed a few ulps of M to count
    rep.passed = rep.min_margin >= -8.0 * 2.220446049250313e-16 * tc.M;
    return rep;
}

SearchResult search_n(double m, const EigenFrame& base_frame, Variant variant, int cap) {
    const bool mixed = variant == Variant::MixedG;
    const TuilunConstants tc = lemma_tuilun_constants(0.01);
    for (int n = 1; n <= cap; ++n) {
        double l0 = 1, l1 = 1, l2 = 1;
        for (int i = 0; i < 2 * n; ++i) {
            l0 *= base_frame.values[0];
            l1 *= base_frame.values[1];
            l2 *= base_frame.values[2];
        }
        std::vector<std::pair<std::string, double>> margins;
        if (!mixed) {
            margins = {
                {"lambda_uu-above-2", l0 - 2.0},
                {"lambda_s-below-1", 1.0 - l1},
                {"eigen-product", 1e-10 - std::abs(l0 * l1 * l2 - 1.0)},
                {"M-over-lambda_s^2", tc.M / (l1 * l1) - 2.0},
                {"m-inequality", 1.0 / (2.0 * l2) - (-m * (0.5 - 1.0 / l1) + 1.0 / l1)},
                {"kappa-zero-instance", pve_kappa_lhs(0.0, l1)},
            };
        } else {
            margins = {
                {"lambda_ss-below-half", 0.5 - l2},
                {"lambda_u-above-2", l1 - 2.0},
                {"lambda_u-below-uu", l0 - l1},
                {"eigen-product", 1e-10 - std::abs(l0 * l1 * l2 - 1.0)},
                {"m-inequality", l0 / 2.0 - (-m * (0.5 - l1) + l1)},
                {"kappa2-zero-instance", mixed_kappa2_lhs(0.0, l1)},
                {"kappa33-zero-instance", -mixed_kappa33_lhs(0.0, l2)},
            };
        }
        bool ok = true;
        for (const auto& [name, v] : margins)
            if (!(v > 0)) ok = false;
        if (ok) {
            SearchResult r;
            r.n = n;
            r.margins = std::move(margins);
            return r;
        }
    }
    throw budget_error("search_n: no admissible n within the cap");
}

SearchResult search_kappa(double lambda_mid, double lambda_ss, Variant variant) {
    auto passes = [&](double k) {
        if (variant == Variant::MixedG)
            return mixed_kappa2_lhs(k, lambda_mid) > 0 && mixed_kappa33_lhs(k, lambda_ss) < 0;
        return pve_kappa_lhs(k, lambda_mid) > 0;
    };
    if (!passes(0.0))
        throw unsupported_error("search_kappa: the kappa = 0 instance fails (n too small)");
    double lo = 0.0, hi = 1.0;
    int grow = 0;
    while (passes(hi)) {
        lo = hi;
        hi *= 2.0;
        if (++grow > 64) throw budget_error("search_kappa: no failing upper bracket");
    }
    while (hi - lo > 1e-6) {
        const double mid = 0.5 * (lo + hi);
        if (passes(mid)) lo = mid;
        else hi = mid;
    }
    SearchResult r;
    r.kappa = lo;
    if (variant == Variant::MixedG) {
        r.margins = {{"kappa2-relation", mixed_kappa2_lhs(lo, lambda_mid)},
                     {"kappa33-relation", -mixed_kappa33_lhs(lo, lambda_ss)}};
    } else {
        r.margins = {{"kappa-relation", pve_kappa_lhs(lo, lambda_mid)}};
    }
    return r;
}

namespace {

// worst (largest) intersection length over a base grid with local refinement
double worst_segment_mass(const Vec3& direction, const BoxChart& chart, double radius,
                          int grid_n, int workers) {
    struct Best {
        double mass = -1;
        Vec3 at{};
    };
    auto sweep_cell = [&](const Vec3& lo, const Vec3& step, int n) {
        Best best;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int l = 0; l < n; ++l) {
                    const Vec3 pos{lo.x + step.x * i, lo.y + step.y * j, lo.z + step.z * l};
                    const double mass =
                        ss_segment_box_mass(wrap(pos), direction, radius, chart);
                    if (mass > best.mass) best = {mass, pos};
                }
        return best;
    };

    const double h = 1.0 / grid_n;
    Best best = parallel_chunks<Best>(
        static_cast<std::size_t>(grid_n), 1, workers, Best{},
        [&](std::size_t, std::size_t lo_i, std::size_t hi_i) {
            Best b;
            for (std::size_t i = lo_i; i < hi_i; ++i)
                for (int j = 0; j < grid_n; ++j)
                    for (int l = 0; l < grid_n; ++l) {
                        const Vec3 pos{h * static_cast<double>(i), h * j, h * l};
                        const double mass =
                            ss_segment_box_mass(wrap(pos), direction, radius, chart);
                        if (mass > b.mass) b = {mass, pos};
                    }
            return b;
        },
        [](Best acc, Best part) { return part.mass > acc.mass ? part : acc; });

    // refine around the worst cell
    double cell = h;
    for (int pass = 0; pass < 2; ++pass) {
        const Vec3 lo = best.at - Vec3{cell, cell, cell};
        const int n = 9;
        const Vec3 step{2 * cell / (n - 1), 2 * cell / (n - 1), 2 * cell / (n - 1)};
        const Best refined = sweep_cell(lo, step, n);
        if (refined.mass > best.mass) best = refined;
        cell = step.x;
    }
    return best.mass;
}

} // namespace

SearchResult slope_delta_search(const EigenFrame& frame, const Vec3& direction,
                                const std::vector<TorusPoint>& centers, double radius,
                                double threshold, int grid_n, double delta_start,
                                double delta_floor, int workers) {
    for (double delta = delta_start; delta >= delta_floor; delta *= 0.5) {
        const double injectivity = 1.0 - 8.0 * (4.0 * delta) * kSqrt3;
        if (!(injectivity > 0)) continue;

        double disjoint = 1e300;
        if (centers.size() == 2)
            disjoint = torus_distance(centers[0], centers[1]) - 10.0 * delta * kSqrt3;
        if (!(disjoint > 0)) continue;

        double worst = 0;
        for (const auto& c : centers) {
            const BoxChart chart(c, frame, 2.0 * delta, 4.0 * delta);
            worst = std::max(worst, worst_segment_mass(direction, chart, radius, grid_n, workers));
        }
        if (worst < threshold) {
            SearchResult r;
            r.delta = delta;
            r.margins = {{"slope-threshold", threshold - worst},
                         {"chart-injectivity", injectivity}};
            if (centers.size() == 2) r.margins.emplace_back("box-disjointness", disjoint);
            return r;
        }
    }
    throw budget_error("slope_delta_search: no admissible delta above the floor");
}

namespace {

std::vector<Vec3> cone_boundary_directions(const ConeSpec& cone, int count) {
    if (cone.core_axes.size() != 1)
        throw unsupported_error("cone_boundary_directions: 1-D core expected");
    Vec3 core{};
    core[cone.core_axes[0]] = 1.0;
    std::vector<Vec3> dirs;
    dirs.reserve(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) {
        Vec3 w{};
        if (cone.complement_axes.size() == 2) {
            const double th = 2.0 * M_PI * t / count;
            w[cone.complement_axes[0]] = std::cos(th);
            w[cone.complement_axes[1]] = std::sin(th);
        } else {
            w[cone.complement_axes[0]] = (t % 2 == 0) ? 1.0 : -1.0;
        }
        dirs.push_back((core + w * cone.alpha).normalized());
    }
    return dirs;
}

double cone_margin(const Mat3& J, const ConeSpec& cone, const Vec3& v) {
    const Vec3 iv = J * v;
    double core2 = 0, comp2 = 0;
    for (int a : cone.core_axes) core2 += iv[a] * iv[a];
    for (int a : cone.complement_axes) comp2 += iv[a] * iv[a];
    return cone.alpha * std::sqrt(core2) - std::sqrt(comp2);
}

// uniform grid over the closed deformation support of a region
struct SupportGrid {
    Vec3 lo, step;
    int n;
    int slab_axis;

    Vec3 at(int i, int j, int l) const {
        return {lo.x + step.x * i, lo.y + step.y * j, lo.z + step.z * l};
    }
};

SupportGrid support_grid(const DaSystem& sys, int region, int n) {
    const double slab = sys.support_slab_half(region);
    const double rad = sys.support_radial(region);
    const int slab_axis = (sys.variant() == Variant::MixedG && region == 1) ? 2 : 1;
    Vec3 half{rad, rad, rad};
    half[slab_axis] = slab;
    SupportGrid g;
    g.lo = -half;
    g.step = half * (2.0 / (n - 1));
    g.n = n;
    g.slab_axis = slab_axis;
    return g;
}

} // namespace

CertReport cone_invariance(const DaSystem& sys, const ConeSpec& cone, ConeDirection dir,
                           const GridSpec& grid) {
    const auto dirs = cone_boundary_directions(cone, grid.directions);
    const bool fwd = dir == ConeDirection::Forward;

    CertReport rep;
    rep.kind = fwd ? "cone-forward" : "cone-inverse";

    // the linear branch first
    const Mat3 lin = fwd ? sys.jacobian_linear() : sys.jacobian_linear_inverse();
    rep.min_margin = 1e300;
    for (const auto& v : dirs) {
        const double m = cone_margin(lin, cone, v);
        ++rep.samples;
        if (m < rep.min_margin) {
            rep.min_margin = m;
            rep.witness = {{}, v, -1, m};
        }
    }

    for (int region = 0; region < sys.region_count(); ++region) {
        const SupportGrid g = support_grid(sys, region, grid.spatial);
        const std::size_t total = static_cast<std::size_t>(g.n) * g.n * g.n;

        struct Worst {
            double margin = 1e300;
            Witness w{};
            long samples = 0;
        };
        const Worst worst = parallel_chunks<Worst>(
            total, 4096, grid.workers, Worst{},
            [&](std::size_t, std::size_t lo, std::size_t hi) {
                Worst part;
                for (std::size_t idx = lo; idx < hi; ++idx) {
                    const int i = static_cast<int>(idx / (g.n * g.n));
                    const int j = static_cast<int>((idx / g.n) % g.n);
                    const int l = static_cast<int>(idx % g.n);
                    const Vec3 local = g.at(i, j, l);
                    const Mat3 J = fwd
                                       ? sys.jacobian_at_support(region, local.x, local.y, local.z)
                                       : sys.jacobian_inverse_at_support(region, local.x, local.y,
                                                                         local.z);
                    for (const auto& v : dirs) {
                        const double m = cone_margin(J, cone, v);
                        ++part.samples;
                        if (m < part.margin) {
                            part.margin = m;
                            part.w = {local, v, region, m};
                        }
                    }
                }
                return part;
            },
            [](Worst acc, Worst part) {
                acc.samples += part.samples;
                if (part.margin < acc.margin) {
                    acc.margin = part.margin;
                    acc.w = part.w;
                }
                return acc;
            });
        rep.samples += worst.samples;
        if (worst.margin < rep.min_margin) {
            rep.min_margin = worst.margin;
            rep.witness = worst.w;
        }
    }
    rep.passed = rep.min_margin > 0;
    return rep;
}

Vec3 estimate_unstable_direction(const DaSystem& sys, const TorusPoint& x, int iters) {
    const int maxd = std::max(2, iters);
    std::vector<TorusPoint> chain(static_cast<std::size_t>(maxd) + 1);
    chain[0] = x;
    for (int j = 1; j <= maxd; ++j)
        chain[static_cast<std::size_t>(j)] = sys.apply_inverse(chain[static_cast<std::size_t>(j - 1)]);

    Vec3 axis{};
    axis[sys.dominant_axis()] = 1.0;
    Vec3 deep = axis, shallow = axis;
    for (int j = maxd; j >= 1; --j) {
        const Mat3 J = sys.jacobian(chain[static_cast<std::size_t>(j)]);
        deep = (J * deep).normalized();
        if (j <= maxd - 1) shallow = (J * shallow).normalized();
    }
    if (deep.dot(shallow) < 0) shallow = -shallow;
    if ((deep - shallow).norm() > 1e-10)
        throw numerical_error("estimate_unstable_direction: Cauchy criterion not met");
    if (deep[sys.dominant_axis()] < 0) deep = -deep;
    return deep;
}

Vec2 estimate_center_unstable(const DaSystem& G, const TorusPoint& x, int iters) {
    if (G.variant() != Variant::MixedG)
        throw unsupported_error("estimate_center_unstable: mixed variant only");
    const int maxd = std::max(2, iters);
    std::vector<TorusPoint> chain(static_cast<std::size_t>(maxd) + 1);
    chain[0] = x;
    for (int j = 1; j <= maxd; ++j)
        chain[static_cast<std::size_t>(j)] = G.apply_inverse(chain[static_cast<std::size_t>(j - 1)]);
    Vec2 deep{1, 0}, shallow{1, 0};
    for (int j = maxd; j >= 1; --j) {
        const Mat2 W = center_block(G.jacobian(chain[static_cast<std::size_t>(j)]));
        deep = normalize2(W.apply(deep));
        if (j <= maxd - 1) shallow = normalize2(W.apply(shallow));
    }
    if (deep.u * shallow.u + deep.ss * shallow.ss < 0) shallow = {-shallow.u, -shallow.ss};
    if (dist2(deep, shallow) > 1e-10)
        throw numerical_error("estimate_center_unstable: Cauchy criterion not met");
    if (deep.u < 0) deep = {-deep.u, -deep.ss};
    return deep;
}

Vec2 estimate_center_stable(const DaSystem& G, const TorusPoint& x, int iters) {
    if (G.variant() != Variant::MixedG)
        throw unsupported_error("estimate_center_stable: mixed variant only");
    const int maxd = std::max(2, iters);
    std::vector<TorusPoint> fwd(static_cast<std::size_t>(maxd) + 1);
    fwd[0] = x;
    for (int j = 1; j <= maxd; ++j)
        fwd[static_cast<std::size_t>(j)] = G.apply(fwd[static_cast<std::size_t>(j - 1)]);
    Vec2 deep{0, 1}, shallow{0, 1};
    for (int j = maxd - 1; j >= 0; --j) {
        const Mat2 Winv = center_block(G.jacobian(fwd[static_cast<std::size_t>(j)])).inverse();
        deep = normalize2(Winv.apply(deep));
        if (j <= maxd - 2) shallow = normalize2(Winv.apply(shallow));
    }
    if (deep.u * shallow.u + deep.ss * shallow.ss < 0) shallow = {-shallow.u, -shallow.ss};
    if (dist2(deep, shallow) > 1e-10)
        throw numerical_error("estimate_center_stable: Cauchy criterion not met");
    if (deep.ss < 0) deep = {-deep.u, -deep.ss};
    return deep;
}

double center_block_rate(const DaSystem& G, const TorusPoint& x, const Vec2& v) {
    const Mat2 W = center_block(G.jacobian(x));
    const Vec2 iv = W.apply(v);
    return std::hypot(iv.u, iv.ss) / std::hypot(v.u, v.ss);
}

PlaneDetResult pve_min_det(const DaSystem& f, const TorusPoint& x, int angles) {
    if (f.variant() != Variant::PveF)
        throw unsupported_error("pve_min_det: pve-f variant only");
    const Vec3 vuu = estimate_unstable_direction(f, x, 8);
    const Mat3 J = f.jacobian(x);

    // The Gram identity |Ju|^2 |Jv|^2 - <Ju,Jv>^2 loses ~1e9 absolute to
    // cancellation when Jv runs nearly parallel to the lambda_uu-sized Ju.
    // The algebraically identical normal form is used instead:
    //   det(J|V)^2 = |cof(J) n|^2,  n the unit normal of V = span(vuu, v),
    // a plain sum of squares (cof(J) = adj(J)^T = det(J) J^{-T}).
    const Mat3 cof = J.adjugate().transpose();

    // orthonormal completion: w2 toward the ss axis (the pole plane), w1 in
    // the remaining direction
    Vec3 e3{0, 0, 1};
    Vec3 w2 = (e3 - vuu * vuu.dot(e3)).normalized();
    Vec3 w1 = w2.cross(vuu).normalized();
    const double slope = std::sqrt(vuu.y * vuu.y + vuu.z * vuu.z) / std::abs(vuu.x);

    PlaneDetResult res;
    res.min_sweep = 1e300;
    res.min_regime_small_c = 1e300;
    res.min_regime_large_c = 1e300;
    for (int i = 0; i < angles; ++i) {
        const double th = M_PI * i / (angles - 1);
        const Vec3 v = w1 * std::cos(th) + w2 * std::sin(th);
        const Vec3 n = vuu.cross(v);
        const double det2 = (cof * n).norm2();
        if (det2 < res.min_sweep) {
            res.min_sweep = det2;
            res.angle_at_min = th;
        }
        const double c = std::abs(std::tan(th)) * std::sqrt(1.0 + slope * slope);
        if (c <= 0.01) res.min_regime_small_c = std::min(res.min_regime_small_c, det2);
        if (c >= 0.01) res.min_regime_large_c = std::min(res.min_regime_large_c, det2);
    }

    // closed form over the continuous family: the smaller eigenvalue of the
    // 2x2 Gram of p_i = cof(J) m_i, m_i an orthonormal basis of vuu-normals;
    // computed through det/lambda_max to stay stable when lambda_min is tiny
    const Vec3 p1 = cof * vuu.cross(w1);
    const Vec3 p2 = cof * vuu.cross(w2);
    const double a = p1.norm2(), c2 = p2.norm2(), b = p1.dot(p2);
    const double disc = std::sqrt(std::max(0.0, (a - c2) * (a - c2) + 4.0 * b * b));
    const double lmax = 0.5 * (a + c2 + disc);
    res.min_closed_form = lmax > 0 ? p1.cross(p2).norm2() / lmax : 0.0;
    return res;
}

PveDetReport pve_min_det_sweep(const DaSystem& f, const GridSpec& grid) {
    if (f.variant() != Variant::PveF)
        throw unsupported_error("pve_min_det_sweep: pve-f variant only");
    const PveParams& p = f.pve();
    const SupportGrid g = support_grid(f, 0, grid.spatial);
    const std::size_t total = static_cast<std::size_t>(g.n) * g.n * g.n;

    struct Acc {
        double overall = 1e300, small_c = 1e300, large_c = 1e300;
        double gap = 0, sup_slope = 0, sup_u = 0, sup_w = 0;
        Witness w_overall{}, w_small{}, w_large{};
        long samples = 0;
    };
    Acc acc = parallel_chunks<Acc>(
        total, 512, grid.workers, Acc{},
        [&](std::size_t, std::size_t lo, std::size_t hi) {
            Acc part;
            for (std::size_t idx = lo; idx < hi; ++idx) {
                const int i = static_cast<int>(idx / (g.n * g.n));
                const int j = static_cast<int>((idx / g.n) % g.n);
                const int l = static_cast<int>(idx % g.n);
                const Vec3 local = g.at(i, j, l);
                const TorusPoint z = p.chart.from_local(local);
                const TorusPoint x = f.apply_inverse(z);
                const PlaneDetResult r = pve_min_det(f, x, grid.angles);
                ++part.samples;
                if (r.min_sweep < part.overall) {
                    part.overall = r.min_sweep;
                    part.w_overall = {local, {}, 0, r.min_sweep};
                }
                if (r.min_regime_small_c < part.small_c) {
                    part.small_c = r.min_regime_small_c;
                    part.w_small = {local, {}, 0, r.min_regime_small_c};
                }
                if (r.min_regime_large_c < part.large_c) {
                    part.large_c = r.min_regime_large_c;
                    part.w_large = {local, {}, 0, r.min_regime_large_c};
                }
                part.gap = std::max(part.gap, r.min_sweep - r.min_closed_form);

                // proof-side quantities at this sample
                const Vec3 vuu = estimate_unstable_direction(f, x, 8);
                const double eps = vuu.y / vuu.x;
                const DeformPartials d = deformation_P(p, local.x, local.y, local.z);
                const double Qa = p.lambda_uu * d.da;
                const double Qc = p.lambda_ss * d.dc;
                part.sup_slope = std::max(part.sup_slope, std::abs(eps));
                part.sup_u = std::max(part.sup_u, std::abs(8.0 * eps * (-Qc) * (-Qa + eps)));
                part.sup_w =
                    std::max(part.sup_w, std::abs(8.0 * eps * (1.0 + eps * Qa) * (-Qa + eps)));
            }
            return part;
        },
        [](Acc a, Acc b) {
            a.samples += b.samples;
            if (b.overall < a.overall) {
                a.overall = b.overall;
                a.w_overall = b.w_overall;
            }
            if (b.small_c < a.small_c) {
                a.small_c = b.small_c;
                a.w_small = b.w_small;
            }
            if (b.large_c < a.large_c) {
                a.large_c = b.large_c;
                a.w_large = b.w_large;
            }
            a.gap = std::max(a.gap, b.gap);
            a.sup_slope = std::max(a.sup_slope, b.sup_slope);
            a.sup_u = std::max(a.sup_u, b.sup_u);
            a.sup_w = std::max(a.sup_w, b.sup_w);
            return a;
        });

    // the linear branch: exact diagonal, v_uu = e_uu
    {
        const DaSystem lin = DaSystem::linear(f);
        const PlaneDetResult r = pve_min_det(lin, TorusPoint{{0.25, 0.25, 0.25}}, grid.angles);
        ++acc.samples;
        if (r.min_sweep < acc.overall) acc.overall = r.min_sweep;
        if (r.min_regime_small_c < acc.small_c) acc.small_c = r.min_regime_small_c;
        if (r.min_regime_large_c < acc.large_c) acc.large_c = r.min_regime_large_c;
    }

    PveDetReport rep;
    rep.overall = {"pve-det-overall", acc.overall - 1.0, acc.w_overall, acc.samples,
                   acc.overall > 1.0};
    rep.regime_small_c = {"pve-det-small-c", acc.small_c - 1.0, acc.w_small, acc.samples,
                          acc.small_c > 1.0};
    rep.regime_large_c = {"pve-det-large-c", acc.large_c - 1.0, acc.w_large, acc.samples,
                          acc.large_c > 1.0};
    rep.closed_form_gap = acc.gap;
    rep.sup_slope = acc.sup_slope;
    rep.sup_u = acc.sup_u;
    rep.sup_w = acc.sup_w;
    return rep;
}

MixedDetReport mixed_center_det_check(const DaSystem& G, const GridSpec& grid) {
    if (G.variant() != Variant::MixedG)
        throw unsupported_error("mixed_center_det_check: mixed variant only");
    const MixedParams& p = G.mixed();
    const double cu_on_bound = 0.5 - p.kappa2;
    const double cu_off_bound = p.lambda_u / std::sqrt(1.0 + p.kappa2 * p.kappa2);
    const double cs_on_bound = 2.0 + p.kappa2;
    const double cs_off_bound = std::sqrt(1.0 + p.kappa2 * p.kappa2) * p.lambda_ss;

    auto sweep = [&](int region, bool on_region) {
        const SupportGrid g = support_grid(G, region, grid.spatial);
        const std::size_t total = static_cast<std::size_t>(g.n) * g.n * g.n;
        struct Acc {
            double cu_margin = 1e300, cs_margin = 1e300;
            Witness cu_w{}, cs_w{};
            long samples = 0;
        };
        return parallel_chunks<Acc>(
            total, 256, grid.workers, Acc{},
            [&](std::size_t, std::size_t lo, std::size_t hi) {
                Acc part;
                for (std::size_t idx = lo; idx < hi; ++idx) {
                    const int i = static_cast<int>(idx / (g.n * g.n));
                    const int j = static_cast<int>((idx / g.n) % g.n);
                    const int l = static_cast<int>(idx % g.n);
                    const Vec3 local = g.at(i, j, l);
                    const BoxChart& chart = G.region_chart(region);
                    const TorusPoint x = chart.from_local(local);
                    const Vec2 cu = estimate_center_unstable(G, x, grid.bundle_iters);
                    const Vec2 cs = estimate_center_stable(G, x, grid.bundle_iters);
                    const double cu_rate = center_block_rate(G, x, cu);
                    const double cs_rate = center_block_rate(G, x, cs);
                    // on q1 (region 0): cu lower bound 1/2 - kappa2; elsewhere
                    // the off-region lower bound applies.  dually for cs.
                    const double cu_m = (region == 0 && on_region)
                                            ? cu_rate - cu_on_bound
                                            : cu_rate - cu_off_bound;
                    const double cs_m = (region == 1 && on_region)
                                            ? cs_on_bound - cs_rate
                                            : cs_off_bound - cs_rate;
                    ++part.samples;
                    if (cu_m < part.cu_margin) {
                        part.cu_margin = cu_m;
                        part.cu_w = {local, {cu.u, 0, cu.ss}, region, cu_rate};
                    }
                    if (cs_m < part.cs_margin) {
                        part.cs_margin = cs_m;
                        part.cs_w = {local, {cs.u, 0, cs.ss}, region, cs_rate};
                    }
                }
                return part;
            },
            [](Acc a, Acc b) {
                a.samples += b.samples;
                if (b.cu_margin < a.cu_margin) {
                    a.cu_margin = b.cu_margin;
                    a.cu_w = b.cu_w;
                }
                if (b.cs_margin < a.cs_margin) {
                    a.cs_margin = b.cs_margin;
                    a.cs_w = b.cs_w;
                }
                return a;
            });
    };

    const auto on_q1 = sweep(0, true);
    const auto on_q2 = sweep(1, true);

    // the linear branch (off both regions): rates are exactly lambda_u / lambda_ss
    const double lin_cu_margin = p.lambda_u - cu_off_bound;
    const double lin_cs_margin = cs_off_bound - p.lambda_ss;

    MixedDetReport rep;
    rep.cu_on_q1 = {"mixed-cu-on-q1", on_q1.cu_margin, on_q1.cu_w, on_q1.samples,
                    on_q1.cu_margin > 0};
    rep.cs_on_q2 = {"mixed-cs-on-q2", on_q2.cs_margin, on_q2.cs_w, on_q2.samples,
                    on_q2.cs_margin > 0};
    const double cu_off = std::min(on_q2.cu_margin, lin_cu_margin);
    rep.cu_off_q1 = {"mixed-cu-off-q1", cu_off, on_q2.cu_w, on_q2.samples + 1, cu_off > 0};
    const double cs_off = std::min(on_q1.cs_margin, lin_cs_margin);
    rep.cs_off_q2 = {"mixed-cs-off-q2", cs_off, on_q1.cs_w, on_q1.samples + 1, cs_off > 0};
    return rep;
}

KSearchOutcome search_k(const std::function<DaSystem(long)>& builder,
                        const std::function<std::vector<CertReport>(const DaSystem&)>& checks,
                        long cap) {
    KSearchOutcome out;
    for (long k = 1; k <= cap; k *= 2) {
        const DaSystem sys = builder(k);
        std::vector<CertReport> reports = checks(sys);
        const CertReport* failing = nullptr;
        for (const auto& r : reports)
            if (!r.passed && !failing) failing = &r;
        if (!failing) {
            out.k = k;
            out.final_reports = std::move(reports);
            return out;
        }
        out.failures.emplace_back(k, failing->kind);
    }
    throw budget_error("search_k: certification cap 2^20 exceeded");
}

std::vector<FixedPointSpectrum> fixed_point_spectrum(const DaSystem& sys) {
    const LatticeAutomorphism& base =
        sys.variant() == Variant::MixedG ? sys.mixed().base : sys.pve().base;
    std::vector<FixedPointSpectrum> out;
    for (const TorusPoint& pt : fixed_points(base)) {
        const Mat3 J = sys.jacobian(pt);
        FixedPointSpectrum s;
        s.point = pt;
        // all realizable Jacobians are triangular up to a row permutation, so
        // the diagonal is the spectrum
        s.eigenvalues = {J(0, 0), J(1, 1), J(2, 2)};
        for (int i = 0; i < 3; ++i)
            if (std::abs(s.eigenvalues[i]) > 1.0) ++s.unstable_index;
        out.push_back(s);
    }
    return out;
}

} // namespace daforge
