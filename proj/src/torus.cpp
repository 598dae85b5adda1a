#include "daforge/torus.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace daforge {

TorusPoint wrap(const Vec3& v) {
    if (!std::isfinite(v.x) || !std::isfinite(v.y) || !std::isfinite(v.z))
        throw numerical_error("wrap: non-finite coordinate");
    auto frac = [](double t) {
        double r = t - std::floor(t);
        if (r >= 1.0) r = 0.0; // t just below an integer can round up
        if (r < 0.0) r += 1.0;
        return r;
    };
    return TorusPoint{{frac(v.x), frac(v.y), frac(v.z)}};
}

Vec3 lift_near(const TorusPoint& x, const Vec3& base_lift) {
    auto comp = [](double xi, double bi) {
        const double d = xi - bi;
        // representative with d - k in (-1/2, 1/2]; ties break toward +1/2
        const double k = std::ceil(d - 0.5);
        return bi + (d - k);
    };
    return {comp(x.c.x, base_lift.x), comp(x.c.y, base_lift.y), comp(x.c.z, base_lift.z)};
}

double torus_distance(const TorusPoint& a, const TorusPoint& b) {
    return (lift_near(a, b) - b.c).norm();
}

LatticeAutomorphism::LatticeAutomorphism(const Mat3i& e) : entries(e) {
    const std::int64_t d = e.det();
    if (d != 1 && d != -1)
        throw unsupported_error("LatticeAutomorphism: |det| must be 1");
}

Mat3i LatticeAutomorphism::inverse() const {
    const std::int64_t d = entries.det();
    Mat3i adj = entries.adjugate();
    if (d == -1)
        for (auto& row : adj.m)
            for (auto& v : row) v = -v;
    return adj;
}

LatticeAutomorphism matrix_D() {
    Mat3i m;
    m.m = {{{2, 1, 1}, {1, 1, 1}, {1, 1, 0}}};
    return LatticeAutomorphism(m);
}

LatticeAutomorphism matrix_C() {
    Mat3i m;
    m.m = {{{1, -1, 0}, {-1, 1, 1}, {0, 1, -1}}};
    return LatticeAutomorphism(m);
}

Vec3 lattice_apply_lifted(const Mat3i& M, const Vec3& v) {
    Vec3 r;
    for (int i = 0; i < 3; ++i) {
        double hi = 0, lo = 0;
        for (int j = 0; j < 3; ++j) {
            double p, e, s, t;
            two_prod(static_cast<double>(M.m[i][j]), v[j], p, e);
            two_sum(hi, p, s, t);
            hi = s;
            lo += t + e;
        }
        r[i] = hi + lo;
    }
    return r;
}

TorusPoint lattice_apply(const Mat3i& M, const TorusPoint& x) {
    // Row sums are kept as (hi, lo) pairs so that the integer part can be
    // discarded exactly even when entries of M are ~1e7.
    Vec3 out;
    for (int i = 0; i < 3; ++i) {
        double hi = 0, lo = 0;
        for (int j = 0; j < 3; ++j) {
            double p, e, s, t;
            two_prod(static_cast<double>(M.m[i][j]), x.c[j], p, e);
            two_sum(hi, p, s, t);
            hi = s;
            lo += t + e;
        }
        double ip;
        const double f = std::modf(hi, &ip);
        double r = f + lo;
        r -= std::floor(r);
        if (r >= 1.0) r = 0.0;
        if (r < 0.0) r += 1.0;
        out[i] = r;
    }
    return TorusPoint{out};
}

std::array<std::int64_t, 3> char_poly(const Mat3i& M) {
    const std::int64_t a2 = M.m[0][0] + M.m[1][1] + M.m[2][2];
    const std::int64_t m00 = M.m[1][1] * M.m[2][2] - M.m[1][2] * M.m[2][1];
    const std::int64_t m11 = M.m[0][0] * M.m[2][2] - M.m[0][2] * M.m[2][0];
    const std::int64_t m22 = M.m[0][0] * M.m[1][1] - M.m[0][1] * M.m[1][0];
    return {a2, m00 + m11 + m22, M.det()};
}

namespace {

// p(x) = x^3 - a2 x^2 + a1 x - a0 and its derivative
double cubic_eval(const std::array<std::int64_t, 3>& c, double x, double* dp = nullptr) {
    const double a2 = static_cast<double>(c[0]);
    const double a1 = static_cast<double>(c[1]);
    const double a0 = static_cast<double>(c[2]);
    if (dp) *dp = (3.0 * x - 2.0 * a2) * x + a1;
    return ((x - a2) * x + a1) * x - a0;
}

std::array<double, 3> symmetric_cubic_roots(const std::array<std::int64_t, 3>& c) {
    // depressed cubic via x = y + a2/3; symmetric matrices give 3 real roots
    const double a2 = static_cast<double>(c[0]);
    const double a1 = static_cast<double>(c[1]);
    const double a0 = static_cast<double>(c[2]);
    const double p = a1 - a2 * a2 / 3.0;
    const double q = -a0 + a1 * a2 / 3.0 - 2.0 * a2 * a2 * a2 / 27.0;
    std::array<double, 3> roots{};
    if (p >= -1e-300) {
        // triple/degenerate case; fall back to the real cube root
        const double y = std::cbrt(-q);
        roots = {y, y, y};
    } else {
        const double m = 2.0 * std::sqrt(-p / 3.0);
        double arg = 3.0 * q / (p * m);
        arg = std::clamp(arg, -1.0, 1.0);
        const double phi = std::acos(arg) / 3.0;
        for (int k = 0; k < 3; ++k)
            roots[static_cast<std::size_t>(k)] =
                m * std::cos(phi - 2.0 * M_PI * static_cast<double>(k) / 3.0);
    }
    for (auto& r : roots) {
        r += a2 / 3.0;
        for (int it = 0; it < 4; ++it) { // Newton polish
            double dp;
            const double v = cubic_eval(c, r, &dp);
            if (dp != 0.0) r -= v / dp;
        }
    }
    return roots;
}

Vec3 row(const Mat3& M, int i) { return {M.m[i][0], M.m[i][1], M.m[i][2]}; }

Vec3 eigenvector_symmetric(const Mat3& M, double mu) {
    Mat3 B = M;
    for (int i = 0; i < 3; ++i) B.m[i][i] -= mu;
    const Vec3 c0 = row(B, 0).cross(row(B, 1));
    const Vec3 c1 = row(B, 1).cross(row(B, 2));
    const Vec3 c2 = row(B, 0).cross(row(B, 2));
    Vec3 best = c0;
    if (c1.norm2() > best.norm2()) best = c1;
    if (c2.norm2() > best.norm2()) best = c2;
    best = best.normalized();
    // deterministic orientation: largest-magnitude component positive
    int arg = 0;
    for (int i = 1; i < 3; ++i)
        if (std::abs(best[i]) > std::abs(best[arg])) arg = i;
    if (best[arg] < 0) best = -best;
    return best;
}

} // namespace

EigenFrame eigen_decompose(const LatticeAutomorphism& M, double hyperbolicity_tol) {
    if (!M.entries.symmetric())
        throw unsupported_error("eigen_decompose: matrix is not symmetric");
    const auto cp = char_poly(M.entries);
    auto roots = symmetric_cubic_roots(cp);
    std::sort(roots.begin(), roots.end(),
              [](double a, double b) { return std::abs(a) > std::abs(b); });
    for (double r : roots)
        if (std::abs(std::abs(r) - 1.0) <= hyperbolicity_tol)
            throw numerical_error("eigen_decompose: matrix is not hyperbolic");
    const Mat3 Md = M.entries.to_double();
    EigenFrame f;
    for (int i = 0; i < 3; ++i) {
        f.values[static_cast<std::size_t>(i)] = roots[static_cast<std::size_t>(i)];
        f.vectors[static_cast<std::size_t>(i)] =
            eigenvector_symmetric(Md, roots[static_cast<std::size_t>(i)]);
    }
    return f;
}

EigenFrame power_eigen(const EigenFrame& frame, int exponent) {
    if (exponent < 2 || exponent % 2 != 0)
        throw unsupported_error("power_eigen: exponent must be even and >= 2");
    EigenFrame f = frame;
    for (auto& v : f.values) {
        double r = 1.0;
        for (int i = 0; i < exponent; ++i) r *= v;
        v = r;
    }
    return f;
}

std::vector<TorusPoint> fixed_points(const LatticeAutomorphism& M) {
    Mat3i B = M.entries;
    for (int i = 0; i < 3; ++i) B.m[i][i] -= 1;
    const std::int64_t d = B.det();
    if (d == 0)
        throw numerical_error("fixed_points: det(M - I) = 0 (degenerate)");
    const Mat3i adj = B.adjugate(); // adj * B = d * I, so x = adj*v/d solves Bx = v

    // v = Bx over x in [0,1)^3 is bounded componentwise by the signed row sums
    std::array<std::int64_t, 3> vlo{}, vhi{};
    for (int i = 0; i < 3; ++i) {
        std::int64_t lo = 0, hi = 0;
        for (int j = 0; j < 3; ++j) {
            if (B.m[i][j] > 0) hi += B.m[i][j];
            else lo += B.m[i][j];
        }
        vlo[static_cast<std::size_t>(i)] = lo - 1;
        vhi[static_cast<std::size_t>(i)] = hi + 1;
    }

    auto mod_nonneg = [](std::int64_t num, std::int64_t den) {
        std::int64_t r = num % den;
        if (r < 0) r += std::llabs(den);
        return r;
    };

    std::vector<std::array<std::int64_t, 3>> found; // numerators over |d|
    const std::int64_t ad = std::llabs(d);
    for (std::int64_t v0 = vlo[0]; v0 <= vhi[0]; ++v0)
        for (std::int64_t v1 = vlo[1]; v1 <= vhi[1]; ++v1)
            for (std::int64_t v2 = vlo[2]; v2 <= vhi[2]; ++v2) {
                std::array<std::int64_t, 3> num{};
                for (int i = 0; i < 3; ++i) {
                    __int128 s = static_cast<__int128>(adj.m[i][0]) * v0 +
                                 static_cast<__int128>(adj.m[i][1]) * v1 +
                                 static_cast<__int128>(adj.m[i][2]) * v2;
                    std::int64_t n = Mat3i::checked_narrow(s, "fixed_points");
                    if (d < 0) n = -n;
                    num[static_cast<std::size_t>(i)] = n;
                }
                // x_i = num_i / |d| must lie in [0,1): num in [0, |d|)
                bool in_cell = true;
                for (int i = 0; i < 3; ++i)
                    if (num[static_cast<std::size_t>(i)] < 0 ||
                        num[static_cast<std::size_t>(i)] >= ad)
                        in_cell = false;
                if (!in_cell) continue;
                if (std::find(found.begin(), found.end(), num) == found.end())
                    found.push_back(num);
            }

    // exact verification: M x == x (mod 1) in rational arithmetic
    std::vector<TorusPoint> pts;
    for (const auto& num : found) {
        bool ok = true;
        for (int i = 0; i < 3; ++i) {
            __int128 s = 0;
            for (int j = 0; j < 3; ++j)
                s += static_cast<__int128>(M.entries.m[i][j]) * num[static_cast<std::size_t>(j)];
            const std::int64_t lhs =
                mod_nonneg(Mat3i::checked_narrow(s, "fixed_points verify"), ad);
            if (lhs != mod_nonneg(num[static_cast<std::size_t>(i)], ad)) ok = false;
        }
        if (!ok)
            throw numerical_error("fixed_points: enumerated point failed exact verification");
        pts.push_back(TorusPoint{{static_cast<double>(num[0]) / static_cast<double>(ad),
                                  static_cast<double>(num[1]) / static_cast<double>(ad),
                                  static_cast<double>(num[2]) / static_cast<double>(ad)}});
    }

    if (static_cast<std::int64_t>(pts.size()) != ad)
        throw numerical_error("fixed_points: count mismatch vs |det(M - I)|");
    std::sort(pts.begin(), pts.end(), [](const TorusPoint& a, const TorusPoint& b) {
        if (a.c.x != b.c.x) return a.c.x < b.c.x;
        if (a.c.y != b.c.y) return a.c.y < b.c.y;
        return a.c.z < b.c.z;
    });
    return pts;
}

BoxChart::BoxChart(const TorusPoint& c, const EigenFrame& f, double hi, double ho)
    : center(c), frame(f), half_inner(hi), half_outer(ho) {
    if (!(hi > 0) || !(ho > hi))
        throw unsupported_error("BoxChart: need 0 < half_inner < half_outer");
    if (!(8.0 * ho * 1.7320508075688772 < 1.0))
        throw unsupported_error("BoxChart: injectivity condition 8*half_outer*sqrt(3) < 1 violated");
}

Vec3 to_local(const TorusPoint& x, const BoxChart& chart) {
    const Vec3 l = chart.local_coords(x);
    if (std::abs(l.x) > chart.half_outer || std::abs(l.y) > chart.half_outer ||
        std::abs(l.z) > chart.half_outer)
        throw numerical_error("to_local: point outside chart injectivity region");
    return l;
}

TorusPoint from_local(const Vec3& local, const BoxChart& chart) {
    return chart.from_local(local);
}

double ss_segment_box_mass(const TorusPoint& x, const Vec3& direction, double radius,
                           const BoxChart& chart) {
    // Work with the lift of x whose displacement from the chart center is in
    // (-1/2,1/2]^3, then enumerate deck translates of the box conservatively.
    const Vec3 xl = lift_near(x, chart.center);
    const Vec3 rel = xl - chart.center.c;
    const double reach = 0.8660254037844387 + radius + chart.inner_circumradius();
    const int R = static_cast<int>(std::ceil(reach + 1.0));

    const Vec3 h = chart.frame.to_frame(direction);
    double total = 0.0;
    for (int vx = -R; vx <= R; ++vx)
        for (int vy = -R; vy <= R; ++vy)
            for (int vz = -R; vz <= R; ++vz) {
                const Vec3 g0 = chart.frame.to_frame(rel - Vec3{static_cast<double>(vx),
                                                                static_cast<double>(vy),
                                                                static_cast<double>(vz)});
                double lo = -radius, hi = radius;
                bool empty = false;
                for (int axis = 0; axis < 3 && !empty; ++axis) {
                    const double g = g0[axis], s = h[axis];
                    const double half = chart.half_inner;
                    if (std::abs(s) < 1e-15) {
                        if (std::abs(g) >= half) empty = true;
                    } else {
                        double t0 = (-half - g) / s, t1 = (half - g) / s;
                        if (t0 > t1) std::swap(t0, t1);
                        lo = std::max(lo, t0);
                        hi = std::min(hi, t1);
                        if (lo >= hi) empty = true;
                    }
                }
                if (!empty && hi > lo) total += hi - lo;
            }
    return total;
}

} // namespace daforge
