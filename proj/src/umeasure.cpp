#include "daforge/umeasure.hpp"

#include <algorithm>
#include <cmath>

#include "daforge/parallel.hpp"
#include "daforge/rng.hpp"

namespace daforge {

namespace {

int default_field_iters(const DaSystem& sys) {
    switch (sys.variant()) {
        case Variant::PveF: return 8;
        case Variant::PveInverseG: return 10;
        case Variant::MixedG: return 14;
    }
    return 10;
}

// coarse upper bound on |Df| over the torus, from the entry bounds of the
// analytic Jacobians (|P_a|, |P_c| <= ~600/k and P_b <= (m+1)/lambda_s give
// the deformed-row sums); only chunk counts depend on it, so slack is cheap
double lipschitz_bound(const DaSystem& sys) {
    if (sys.variant() == Variant::PveF) {
        const PveParams& p = sys.pve();
        const double offdiag = 1300.0 / static_cast<double>(p.k);
        return 1.5 * (p.lambda_uu * (1.0 + offdiag) + 3.0);
    }
    if (sys.variant() == Variant::PveInverseG) {
        const PveParams& p = sys.pve();
        return 1.5 * (1.0 / p.lambda_ss + 3.0 / p.lambda_s + 3.0);
    }
    const MixedParams& p = sys.mixed();
    return 1.5 * (p.lambda_uu + p.lambda_uu / 2.0 + 60.0);
}

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

// numerically stable log(sum(exp(v)) / n)
double log_mean_exp(const std::vector<double>& v) {
    double mx = -1e308;
    for (double x : v) mx = std::max(mx, x);
    double s = 0;
    for (double x : v) s += std::exp(x - mx);
    return mx + std::log(s / static_cast<double>(v.size()));
}

} // namespace

double UnstableCurve::arclength() const {
    double s = 0;
    for (std::size_t i = 1; i < lifted.size(); ++i) s += (lifted[i] - lifted[i - 1]).norm();
    return s;
}

TorusPoint UnstableCurve::at_arclength(double s, Vec3* tangent_frame) const {
    if (lifted.size() < 2) throw unsupported_error("UnstableCurve: degenerate curve");
    double acc = 0;
    for (std::size_t i = 1; i < lifted.size(); ++i) {
        const Vec3 d = lifted[i] - lifted[i - 1];
        const double len = d.norm();
        if (s <= acc + len || i + 1 == lifted.size()) {
            const double t = len > 0 ? std::clamp((s - acc) / len, 0.0, 1.0) : 0.0;
            if (tangent_frame)
                *tangent_frame = system->frame().to_frame(d * (1.0 / len));
            return wrap(lifted[i - 1] + d * t);
        }
        acc += len;
    }
    return pts.back();
}

UnstableCurve seed_curve(std::shared_ptr<const DaSystem> system, const TorusPoint& x,
                         double length, double max_seg_len, int field_iters) {
    if (!(length > 0)) throw unsupported_error("seed_curve: length must be positive");
    if (!(max_seg_len > 0 && max_seg_len <= 0.25))
        throw unsupported_error("seed_curve: need 0 < max_seg_len <= 1/4");
    const int iters = field_iters > 0 ? field_iters : default_field_iters(*system);

    const EigenFrame& F = system->frame();
    auto field = [&](const Vec3& lifted_pos, const Vec3& orient) {
        Vec3 v = F.to_ambient(estimate_unstable_direction(*system, wrap(lifted_pos), iters));
        if (v.dot(orient) < 0) v = -v;
        return v;
    };

    const Vec3 orient0 =
        F.to_ambient(estimate_unstable_direction(*system, x, iters));

    auto grow = [&](double sign, double half_len) {
        std::vector<Vec3> out;
        Vec3 pos = x.c;
        Vec3 orient = orient0 * sign;
        const int n_vertices = std::max(1, static_cast<int>(std::ceil(half_len / max_seg_len)));
        const double seg = half_len / n_vertices;
        const double h = seg / 4.0; // 4 substeps per recorded vertex
        for (int v = 0; v < n_vertices; ++v) {
            for (int s = 0; s < 4; ++s) {
                const Vec3 k1 = field(pos, orient);
                const Vec3 k2 = field(pos + k1 * (h / 2), orient);
                const Vec3 k3 = field(pos + k2 * (h / 2), orient);
                const Vec3 k4 = field(pos + k3 * h, orient);
                const Vec3 step = (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
                pos += step;
                orient = step.normalized();
            }
            out.push_back(pos);
        }
        return out;
    };

    const std::vector<Vec3> back = grow(-1.0, length / 2.0);
    const std::vector<Vec3> fwd = grow(+1.0, length / 2.0);

    UnstableCurve c;
    c.system = std::move(system);
    c.max_seg_len = max_seg_len;
    c.lifted.reserve(back.size() + fwd.size() + 1);
    for (auto it = back.rbegin(); it != back.rend(); ++it) c.lifted.push_back(*it);
    c.lifted.push_back(x.c);
    for (const auto& v : fwd) c.lifted.push_back(v);

    // re-anchor the lift so vertex 0 is the wrapped representative
    const Vec3 shift = wrap(c.lifted.front()).c - c.lifted.front();
    for (auto& v : c.lifted) v += shift;

    c.pts.reserve(c.lifted.size());
    c.tangents.reserve(c.lifted.size());
    c.log_weight.assign(c.lifted.size(), 0.0);
    for (std::size_t i = 0; i < c.lifted.size(); ++i) {
        c.pts.push_back(wrap(c.lifted[i]));
        // tangent from the adjacent chord (the curve is its polyline)
        const std::size_t j0 = i == 0 ? 0 : i - 1;
        const std::size_t j1 = std::min(c.lifted.size() - 1, i + 1);
        c.tangents.push_back(F.to_frame((c.lifted[j1] - c.lifted[j0]).normalized()));
    }
    return c;
}

UnstableCurve iterate_curve(const UnstableCurve& curve, int steps, double max_seg_len,
                            long vertex_budget) {
    if (!(max_seg_len > 0 && max_seg_len <= 0.25))
        throw unsupported_error("iterate_curve: need 0 < max_seg_len <= 1/4");
    UnstableCurve cur = curve;
    long emitted_total = 0;

    for (int step = 0; step < steps; ++step) {
        const DaSystem& sys = *cur.system;
        UnstableCurve next;
        next.system = cur.system;
        next.max_seg_len = max_seg_len;
        next.steps_applied = cur.steps_applied + 1;

        auto push_tangent = [&](const TorusPoint& src, const Vec3& t, double logw, double* fac) {
            const Vec3 ft = sys.jacobian(src) * t;
            const double f = ft.norm();
            if (fac) *fac = f;
            return std::pair<Vec3, double>{ft * (1.0 / f), logw - std::log(f)};
        };

        auto emit = [&](const TorusPoint& img, const Vec3& tangent, double logw) {
            if (++emitted_total > vertex_budget)
                throw budget_error(
                    "iterate_curve: vertex budget exceeded; reduce steps, shorten the seed "
                    "curve, or coarsen max_seg_len");
            if (next.lifted.empty()) {
                next.lifted.push_back(img.c);
            } else {
                next.lifted.push_back(lift_near(img, next.lifted.back()));
            }
            next.pts.push_back(img);
            next.tangents.push_back(tangent);
            next.log_weight.push_back(logw);
        };

        // first vertex
        {
            const TorusPoint img = sys.apply(cur.pts.front());
            auto [t, w] = push_tangent(cur.pts.front(), cur.tangents.front(),
                                       cur.log_weight.front(), nullptr);
            emit(img, t, w);
        }

        const EigenFrame& F = sys.frame();
        const double lip = lipschitz_bound(sys);

        // adaptive bisection; img_a_lift is trustworthy because the caller
        // guarantees the true image displacement across [src_a, src_b] is
        // below the deck-ambiguity threshold
        std::function<void(const Vec3&, const Vec3&, const Vec3&, double, double)> subdiv =
            [&](const Vec3& src_a, const Vec3& src_b, const Vec3& img_a_lift, double lw_a,
                double lw_b) {
                const TorusPoint src_bp = wrap(src_b);
                const TorusPoint img_b = sys.apply(src_bp);
                const Vec3 img_b_lift = lift_near(img_b, img_a_lift);
                const double chord = (img_b_lift - img_a_lift).norm();
                const double src_len = (src_b - src_a).norm();
                if (chord <= max_seg_len || src_len < 1e-14) {
                    const Vec3 t_src = F.to_frame((src_b - src_a) * (1.0 / src_len));
                    auto [t, w] = push_tangent(src_bp, t_src, lw_b, nullptr);
                    emit(img_b, t, w);
                    return;
                }
                const Vec3 mid = (src_a + src_b) * 0.5;
                const double lw_m = 0.5 * (lw_a + lw_b);
                subdiv(src_a, mid, img_a_lift, lw_a, lw_m);
                subdiv(mid, src_b, next.lifted.back(), lw_m, lw_b);
            };

        for (std::size_t i = 1; i < cur.pts.size(); ++i) {
            const Vec3 A = cur.lifted[i - 1];
            const Vec3 B = cur.lifted[i];
            const double src_len = (B - A).norm();
            // pre-split so each chunk's true image displacement stays < 0.2,
            // keeping every lift_near on the correct deck representative
            const long chunks =
                std::max(1L, static_cast<long>(std::ceil(src_len * lip / 0.2)));
            Vec3 prev_src = A;
            double prev_lw = cur.log_weight[i - 1];
            for (long cch = 1; cch <= chunks; ++cch) {
                const double t = static_cast<double>(cch) / static_cast<double>(chunks);
                const Vec3 src_b = A + (B - A) * t;
                const double lw_b =
                    cur.log_weight[i - 1] + (cur.log_weight[i] - cur.log_weight[i - 1]) * t;
                subdiv(prev_src, src_b, next.lifted.back(), prev_lw, lw_b);
                prev_src = src_b;
                prev_lw = lw_b;
            }
        }
        cur = std::move(next);
    }
    return cur;
}

double curve_cone_slack(const UnstableCurve& curve, const ConeSpec& cone) {
    const EigenFrame& F = curve.system->frame();
    double slack = 1e300;
    for (std::size_t i = 1; i < curve.lifted.size(); ++i) {
        const Vec3 d = F.to_frame((curve.lifted[i] - curve.lifted[i - 1]).normalized());
        double core2 = 0, comp2 = 0;
        for (int a : cone.core_axes) core2 += d[a] * d[a];
        for (int a : cone.complement_axes) comp2 += d[a] * d[a];
        slack = std::min(slack, cone.alpha * std::sqrt(core2) - std::sqrt(comp2));
    }
    return slack;
}

bool Region::contains(const TorusPoint& x) const {
    for (const auto& chart : boxes) {
        const Vec3 l = chart.local_coords(x);
        if (chart.inside_inner(l)) return true;
    }
    return false;
}

std::vector<PushforwardStats> mass_series(const UnstableCurve& curve0, int n_max,
                                          const Region& region, long samples,
                                          std::uint64_t seed, int workers,
                                          int quadrature_up_to, long quadrature_budget) {
    const DaSystem& sys = *curve0.system;
    const double total_len = curve0.arclength();

    struct Part {
        std::vector<long> hits;
        std::vector<std::vector<double>> logs; // [n] -> per-sample logs
        double min_fac = 1e300, max_fac = 0;
    };
    const std::size_t N = static_cast<std::size_t>(samples);
    Part acc = parallel_chunks<Part>(
        N, 2048, workers,
        [&] {
            Part p;
            p.hits.assign(static_cast<std::size_t>(n_max) + 1, 0);
            p.logs.assign(static_cast<std::size_t>(n_max) + 1, {});
            return p;
        }(),
        [&](std::size_t, std::size_t lo, std::size_t hi) {
            Part part;
            part.hits.assign(static_cast<std::size_t>(n_max) + 1, 0);
            part.logs.assign(static_cast<std::size_t>(n_max) + 1, {});
            for (std::size_t i = lo; i < hi; ++i) {
                SplitMix64 rng(mix_seed(seed, 0x6d617373, i));
                const double s =
                    (static_cast<double>(i) + rng.uniform()) / static_cast<double>(N) * total_len;
                Vec3 t;
                TorusPoint x = curve0.at_arclength(s, &t);
                double logw = 0;
                if (region.contains(x)) ++part.hits[0];
                part.logs[0].push_back(0.0);
                for (int n = 1; n <= n_max; ++n) {
                    const Vec3 ft = sys.jacobian(x) * t;
                    const double fac = ft.norm();
                    t = ft * (1.0 / fac);
                    logw += std::log(fac);
                    part.min_fac = std::min(part.min_fac, fac);
                    part.max_fac = std::max(part.max_fac, fac);
                    x = sys.apply(x);
                    if (region.contains(x)) ++part.hits[static_cast<std::size_t>(n)];
                    part.logs[static_cast<std::size_t>(n)].push_back(logw);
                }
            }
            return part;
        },
        [&](Part a, Part b) {
            for (std::size_t n = 0; n < a.hits.size(); ++n) {
                a.hits[n] += b.hits[n];
                a.logs[n].insert(a.logs[n].end(), b.logs[n].begin(), b.logs[n].end());
            }
            a.min_fac = std::min(a.min_fac, b.min_fac);
            a.max_fac = std::max(a.max_fac, b.max_fac);
            return a;
        });

    std::vector<PushforwardStats> out;
    out.reserve(static_cast<std::size_t>(n_max) + 1);
    for (int n = 0; n <= n_max; ++n) {
        PushforwardStats st;
        st.n = n;
        st.samples = samples;
        const double p = static_cast<double>(acc.hits[static_cast<std::size_t>(n)]) /
                         static_cast<double>(samples);
        st.region_mass = p;
        st.confidence_halfwidth =
            std::max(std::sqrt(std::max(0.0, p * (1.0 - p)) / static_cast<double>(samples)),
                     1.0 / static_cast<double>(samples));
        st.log_length_ratio = log_mean_exp(acc.logs[static_cast<std::size_t>(n)]);
        st.total_length = std::exp(st.log_length_ratio) * total_len;
        st.min_step_factor = n == 0 ? sys.dominant_rate() : acc.min_fac;
        st.max_step_factor = n == 0 ? sys.dominant_rate() : acc.max_fac;
        out.push_back(st);
    }

    // quadrature route where the refined polyline is affordable; growth is
    // predictable, so doomed refinements are skipped instead of attempted
    const int q_hi = quadrature_up_to < 0 ? 0 : std::min(quadrature_up_to, n_max);
    UnstableCurve img = curve0;
    for (int n = 1; n <= q_hi; ++n) {
        const double predicted =
            img.arclength() * sys.dominant_rate() * 1.5 / curve0.max_seg_len;
        if (predicted > static_cast<double>(quadrature_budget)) break;
        bool ok = true;
        try {
            img = iterate_curve(img, 1, curve0.max_seg_len, quadrature_budget);
        } catch (const budget_error&) {
            ok = false;
        }
        if (!ok) break;
        double mass = 0;
        for (std::size_t i = 1; i < img.lifted.size(); ++i) {
            const Vec3 mid = (img.lifted[i] + img.lifted[i - 1]) * 0.5;
            if (!region.contains(wrap(mid))) continue;
            const double len = (img.lifted[i] - img.lifted[i - 1]).norm();
            const double w =
                0.5 * (std::exp(img.log_weight[i]) + std::exp(img.log_weight[i - 1]));
            mass += len * w;
        }
        out[static_cast<std::size_t>(n)].mass_quadrature = mass / total_len;
    }
    return out;
}

PushforwardStats pushforward_mass(const UnstableCurve& curve0, int n, const Region& region,
                                  long samples, std::uint64_t seed, int workers,
                                  long quadrature_budget) {
    const auto series = mass_series(curve0, n, region, samples, seed, workers, n,
                                    quadrature_budget);
    return series.back();
}

Estimate birkhoff_average(const UnstableCurve& curve0, int ell,
                          const std::function<double(const TorusPoint&)>& observable,
                          long samples, std::uint64_t seed, int workers) {
    if (ell < 1) throw unsupported_error("birkhoff_average: ell must be >= 1");
    const DaSystem& sys = *curve0.system;
    const double total_len = curve0.arclength();
    const std::size_t N = static_cast<std::size_t>(samples);

    struct Part {
        double sum = 0, sum2 = 0;
    };
    const Part acc = parallel_chunks<Part>(
        N, 1024, workers, Part{},
        [&](std::size_t, std::size_t lo, std::size_t hi) {
            Part part;
            for (std::size_t i = lo; i < hi; ++i) {
                SplitMix64 rng(mix_seed(seed, 0x62697268, i));
                const double s =
                    (static_cast<double>(i) + rng.uniform()) / static_cast<double>(N) * total_len;
                TorusPoint x = curve0.at_arclength(s);
                double sum = 0;
                for (int j = 0; j < ell; ++j) {
                    sum += observable(x);
                    if (j + 1 < ell) x = sys.apply(x);
                }
                const double v = sum / static_cast<double>(ell);
                part.sum += v;
                part.sum2 += v * v;
            }
            return part;
        },
        [](Part a, Part b) {
            a.sum += b.sum;
            a.sum2 += b.sum2;
            return a;
        });

    Estimate e;
    e.samples = samples;
    e.value = acc.sum / static_cast<double>(samples);
    const double var =
        std::max(0.0, acc.sum2 / static_cast<double>(samples) - e.value * e.value);
    e.std_error = std::sqrt(var / static_cast<double>(samples));
    return e;
}

CenterExponent center_exponent(const UnstableCurve& curve0, int ell, long samples,
                               std::uint64_t seed, int workers) {
    const DaSystem& sys = *curve0.system;
    if (sys.variant() != Variant::PveInverseG)
        throw unsupported_error("center_exponent: pve-inverse-g variant only");
    const PveParams& p = sys.pve();

    CenterExponent ce;
    ce.estimate = birkhoff_average(
        curve0, ell, [&](const TorusPoint& x) { return std::log(sys.center_derivative(x)); },
        samples, seed, workers);
    ce.lower_bound = pve_kappa_lhs(p.kappa, p.lambda_s);
    return ce;
}

MixedExponents mixed_exponents(const UnstableCurve& curve0, int ell, int bundle_iters,
                               long samples, std::uint64_t seed, int workers) {
    const DaSystem& sys = *curve0.system;
    if (sys.variant() != Variant::MixedG)
        throw unsupported_error("mixed_exponents: mixed variant only");
    const MixedParams& p = sys.mixed();
    const int B = std::max(4, bundle_iters);
    const double total_len = curve0.arclength();
    const std::size_t N = static_cast<std::size_t>(samples);

    struct Part {
        double cu_sum = 0, cu_sum2 = 0, cs_sum = 0, cs_sum2 = 0;
        long failures = 0;
    };
    const Part acc = parallel_chunks<Part>(
        N, 256, workers, Part{},
        [&](std::size_t, std::size_t lo, std::size_t hi) {
            Part part;
            std::vector<TorusPoint> orbit(static_cast<std::size_t>(ell + B) + 1);
            for (std::size_t i = lo; i < hi; ++i) {
                SplitMix64 rng(mix_seed(seed, 0x6d697865, i));
                const double s =
                    (static_cast<double>(i) + rng.uniform()) / static_cast<double>(N) * total_len;
                const TorusPoint x0 = curve0.at_arclength(s);

                // converged center-unstable start via pushing from preimages
                TorusPoint pre = x0;
                std::vector<Mat2> blocks(static_cast<std::size_t>(B));
                for (int j = 0; j < B; ++j) {
                    pre = sys.apply_inverse(pre);
                    blocks[static_cast<std::size_t>(B - 1 - j)] = center_block(sys.jacobian(pre));
                }
                Vec2 cu{1, 0}, cu_shadow{1, 0};
                for (int j = 0; j < B; ++j) {
                    cu = normalize2(blocks[static_cast<std::size_t>(j)].apply(cu));
                    if (j >= 1)
                        cu_shadow = normalize2(blocks[static_cast<std::size_t>(j)].apply(cu_shadow));
                }
                if (cu.u * cu_shadow.u + cu.ss * cu_shadow.ss < 0)
                    cu_shadow = {-cu_shadow.u, -cu_shadow.ss};
                bool failed = std::hypot(cu.u - cu_shadow.u, cu.ss - cu_shadow.ss) > 1e-8;

                // forward orbit
                orbit[0] = x0;
                for (int j = 1; j <= ell + B; ++j)
                    orbit[static_cast<std::size_t>(j)] =
                        sys.apply(orbit[static_cast<std::size_t>(j - 1)]);

                // lambda_cu: push the converged direction along the orbit
                double cu_log = 0;
                Vec2 v = cu;
                for (int j = 0; j < ell; ++j) {
                    const Vec2 iv = center_block(sys.jacobian(orbit[static_cast<std::size_t>(j)]))
                                        .apply(v);
                    const double fac = std::hypot(iv.u, iv.ss);
                    cu_log += std::log(fac);
                    v = {iv.u / fac, iv.ss / fac};
                }

                // lambda_cs: pull the strong-stable-side direction back from the
                // far end; the stored normalizers give the forward rates
                Vec2 w{0, 1}, w_shadow{0, 1};
                double cs_log = 0;
                for (int j = ell + B - 1; j >= 0; --j) {
                    const Mat2 Winv =
                        center_block(sys.jacobian(orbit[static_cast<std::size_t>(j)])).inverse();
                    const Vec2 iw = Winv.apply(w);
                    const double alpha = std::hypot(iw.u, iw.ss);
                    w = {iw.u / alpha, iw.ss / alpha};
                    if (j <= ell + B - 2) w_shadow = normalize2(Winv.apply(w_shadow));
                    if (j < ell) cs_log += -std::log(alpha);
                }
                if (w.u * w_shadow.u + w.ss * w_shadow.ss < 0)
                    w_shadow = {-w_shadow.u, -w_shadow.ss};
                failed = failed || std::hypot(w.u - w_shadow.u, w.ss - w_shadow.ss) > 1e-8;
                if (failed) {
                    ++part.failures;
                    continue;
                }

                const double cu_avg = cu_log / static_cast<double>(ell);
                const double cs_avg = cs_log / static_cast<double>(ell);
                part.cu_sum += cu_avg;
                part.cu_sum2 += cu_avg * cu_avg;
                part.cs_sum += cs_avg;
                part.cs_sum2 += cs_avg * cs_avg;
            }
            return part;
        },
        [](Part a, Part b) {
            a.cu_sum += b.cu_sum;
            a.cu_sum2 += b.cu_sum2;
            a.cs_sum += b.cs_sum;
            a.cs_sum2 += b.cs_sum2;
            a.failures += b.failures;
            return a;
        });

    const long good = samples - acc.failures;
    if (good <= 0 || static_cast<double>(acc.failures) > 0.001 * static_cast<double>(samples))
        throw numerical_error("mixed_exponents: bundle convergence failed at > 0.1% of samples");

    auto finish = [&](double sum, double sum2) {
        Estimate e;
        e.samples = good;
        e.value = sum / static_cast<double>(good);
        const double var = std::max(0.0, sum2 / static_cast<double>(good) - e.value * e.value);
        e.std_error = std::sqrt(var / static_cast<double>(good));
        return e;
    };
    MixedExponents me;
    me.lambda_cu = finish(acc.cu_sum, acc.cu_sum2);
    me.lambda_cs = finish(acc.cs_sum, acc.cs_sum2);
    me.cu_lower_bound = mixed_kappa2_lhs(p.kappa2, p.lambda_u);
    me.cs_upper_bound = mixed_kappa33_lhs(p.kappa2, p.lambda_ss);
    me.convergence_failures = acc.failures;
    return me;
}

} // namespace daforge
