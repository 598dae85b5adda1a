#include "daforge/systems.hpp"

#include <cfloat>
#include <cmath>

namespace daforge {

std::string variant_name(Variant v) {
    switch (v) {
        case Variant::PveF: return "pve-f";
        case Variant::PveInverseG: return "pve-inverse-g";
        case Variant::MixedG: return "mixed-G";
    }
    return "unknown";
}

double pve_kappa_lhs(double kappa, double lambda_s) {
    const double x = std::pow(1.0 + kappa * kappa, 1.5);
    return (x / 100.0 + 0.01) * std::log(0.5) + (0.99 - x / 100.0) * std::log(1.0 / lambda_s);
}

double mixed_kappa2_lhs(double kappa2, double lambda_u) {
    if (kappa2 >= 0.5) return -HUGE_VAL;
    const double x = std::pow(1.0 + kappa2 * kappa2, 1.5);
    return (x / 100.0 + 0.01) * std::log(0.5 - kappa2) +
           (0.99 - x / 100.0) * std::log(lambda_u / std::sqrt(1.0 + kappa2 * kappa2));
}

double mixed_kappa33_lhs(double kappa2, double lambda_ss) {
    const double x = std::pow(1.0 + kappa2 * kappa2, 1.5);
    return (x / 100.0 + 0.01) * std::log(2.0 + kappa2) +
           (0.99 - x / 100.0) * std::log(std::sqrt(1.0 + kappa2 * kappa2) * lambda_ss);
}

PveParams PveParams::make(const LatticeAutomorphism& D, int n, long k, double delta,
                          double kappa, double epsilon, BumpShape shape, const TorusPoint& p) {
    if (n < 1) throw unsupported_error("PveParams: n must be >= 1");
    if (k < 1) throw unsupported_error("PveParams: k must be >= 1");
    EigenFrame base_frame = eigen_decompose(D);
    EigenFrame frame = power_eigen(base_frame, 2 * n);
    PveParams params{D,
                     n,
                     k,
                     BumpProfile(delta, shape),
                     kappa,
                     epsilon,
                     base_frame,
                     frame,
                     D.entries.pow(2 * n),
                     D.inverse().pow(2 * n),
                     BoxChart(p, frame, 2.0 * delta, 4.0 * delta),
                     frame.values[0],
                     frame.values[1],
                     frame.values[2]};
    return params;
}

void PveParams::validate(double m, double M_paowu) const {
    const double tol = 1e-10;
    if (!(lambda_ss > 0 && lambda_ss < lambda_s && lambda_s < 1.0 && 2.0 < lambda_uu))
        throw unsupported_error("PveParams: eigenvalue ordering 0<ss<s<1<2<uu violated");
    if (std::abs(lambda_ss * lambda_s * lambda_uu - 1.0) > tol)
        throw unsupported_error("PveParams: eigenvalue product must be 1");
    if (!(M_paowu / (lambda_s * lambda_s) > 2.0))
        throw unsupported_error("PveParams: M/lambda_s^2 > 2 fails (n too small)");
    if (!(-m * (0.5 - 1.0 / lambda_s) + 1.0 / lambda_s <= 1.0 / (2.0 * lambda_ss)))
        throw unsupported_error("PveParams: m-inequality fails (n too small)");
    if (!(pve_kappa_lhs(kappa, lambda_s) > 0))
        throw unsupported_error("PveParams: kappa relation fails");
    if (!(epsilon > 0 && epsilon <= kappa))
        throw unsupported_error("PveParams: need 0 < epsilon <= kappa");
}

MixedParams MixedParams::make(const LatticeAutomorphism& C, int n, long k, double delta,
                              double kappa2, double epsilon, BumpShape shape,
                              const TorusPoint& q1, const TorusPoint& q2) {
    if (n < 1) throw unsupported_error("MixedParams: n must be >= 1");
    if (k < 1) throw unsupported_error("MixedParams: k must be >= 1");
    EigenFrame base_frame = eigen_decompose(C);
    EigenFrame frame = power_eigen(base_frame, 2 * n);
    MixedParams params{C,
                       n,
                       k,
                       BumpProfile(delta, shape),
                       kappa2,
                       epsilon,
                       base_frame,
                       frame,
                       C.entries.pow(2 * n),
                       C.inverse().pow(2 * n),
                       BoxChart(q1, frame, 2.0 * delta, 4.0 * delta),
                       BoxChart(q2, frame, 2.0 * delta, 4.0 * delta),
                       frame.values[0],
                       frame.values[1],
                       frame.values[2]};
    return params;
}

void MixedParams::validate(double m) const {
    const double tol = 1e-10;
    if (!(lambda_ss > 0 && lambda_ss < 0.5 && 2.0 < lambda_u && lambda_u < lambda_uu))
        throw unsupported_error("MixedParams: eigenvalue ordering 0<ss<1/2<2<u<uu violated");
    if (std::abs(lambda_ss * lambda_u * lambda_uu - 1.0) > tol)
        throw unsupported_error("MixedParams: eigenvalue product must be 1");
    if (!(-m * (0.5 - lambda_u) + lambda_u <= lambda_uu / 2.0))
        throw unsupported_error("MixedParams: m-inequality fails (n too small)");
    if (!(mixed_kappa2_lhs(kappa2, lambda_u) > 0))
        throw unsupported_error("MixedParams: kappa2 relation fails");
    if (!(mixed_kappa33_lhs(kappa2, lambda_ss) < 0))
        throw unsupported_error("MixedParams: kappa33 relation fails");
    if (!(epsilon > 0 && 2.0 * epsilon * epsilon <= kappa2 * kappa2))
        throw unsupported_error("MixedParams: need 2 eps^2 <= kappa2^2");
    // the 5*delta outer boxes around q1 and q2 must be disjoint on the torus
    const double delta = bump.delta;
    if (!(torus_distance(chart_q1.center, chart_q2.center) > 10.0 * delta * 1.7320508075688772))
        throw unsupported_error("MixedParams: 5*delta boxes at q1 and q2 are not disjoint");
}

DeformPartials deformation_P(const PveParams& p, double a, double b, double c) {
    const double coef = 0.5 - 1.0 / p.lambda_s;
    const double r = std::hypot(a, c);
    const double kb = static_cast<double>(p.k) * b;
    const double pk = psi(p.bump, kb);
    const double pkp = psi_prime(p.bump, kb);
    const double pr = psi(p.bump, r);
    const double prp = psi_prime(p.bump, r);

    DeformPartials d;
    d.value = pk * pr * coef * b + b / p.lambda_s;
    d.db = coef * pr * (kb * pkp + pk) + 1.0 / p.lambda_s;
    if (r > 0) {
        const double radial = pk * coef * b * prp / r;
        d.da = radial * a;
        d.dc = radial * c;
    }
    return d;
}

DeformPartials deformation_Q(const MixedParams& p, int which, double a, double b, double c) {
    DeformPartials d;
    if (which == 1) {
        const double coef = 0.5 - p.lambda_u;
        const double r = std::hypot(a, c);
        const double kb = static_cast<double>(p.k) * b;
        const double pk = psi(p.bump, kb);
        const double pkp = psi_prime(p.bump, kb);
        const double pr = psi(p.bump, r);
        const double prp = psi_prime(p.bump, r);
        d.value = pk * pr * coef * b + p.lambda_u * b;
        d.db = coef * pr * (kb * pkp + pk) + p.lambda_u;
        if (r > 0) {
            const double radial = pk * coef * b * prp / r;
            d.da = radial * a;
            d.dc = radial * c;
        }
    } else if (which == 2) {
        const double coef = 0.5 - 1.0 / p.lambda_ss;
        const double rho = std::hypot(a, b);
        const double kc = static_cast<double>(p.k) * c;
        const double pk = psi(p.bump, kc);
        const double pkp = psi_prime(p.bump, kc);
        const double pr = psi(p.bump, rho);
        const double prp = psi_prime(p.bump, rho);
        d.value = pk * pr * coef * c + c / p.lambda_ss;
        d.dc = coef * pr * (kc * pkp + pk) + 1.0 / p.lambda_ss;
        if (rho > 0) {
            const double radial = pk * coef * c * prp / rho;
            d.da = radial * a;
            d.db = radial * b;
        }
    } else {
        throw unsupported_error("deformation_Q: which must be 1 or 2");
    }
    return d;
}

namespace {

// Safeguarded Newton for a strictly increasing 1-D map (rtsafe-style).  A
// step is rejected in favor of bisection when it leaves the bracket or fails
// to halve the previous step, so the bump's steep transition band cannot trap
// the iteration in a Newton 2-cycle.
template <typename F, typename DF>
double invert_monotone(F f, DF df, double target, double lo, double hi, double scale,
                       const char* what) {
    const double tol = 1e-18 + 4.0 * DBL_EPSILON * scale;
    double b = std::clamp(target, lo, hi);
    double step_prev = hi - lo;
    for (int it = 0; it < 100; ++it) {
        const double fb = f(b) - target;
        if (std::abs(fb) <= tol) return b;
        if (fb > 0) hi = b;
        else lo = b;
        if (hi - lo <= 0) return b;
        const double d = df(b);
        double bn;
        double step = (d > 0) ? fb / d : 0.0;
        if (d <= 0 || !(b - step > lo && b - step < hi) || std::abs(step) > 0.5 * step_prev) {
            bn = lo + 0.5 * (hi - lo);
            step = 0.5 * (hi - lo);
        } else {
            bn = b - step;
        }
        if (bn == b) return b; // bracket exhausted at machine precision
        step_prev = std::abs(step);
        b = bn;
    }
    throw numerical_error(std::string(what) + ": 1-D inversion did not converge (target=" +
                          std::to_string(target) + ")");
}

} // namespace

DaSystem DaSystem::pve_f(PveParams p) {
    DaSystem s;
    s.variant_ = Variant::PveF;
    s.pve_ = std::make_shared<const PveParams>(std::move(p));
    return s;
}

DaSystem DaSystem::pve_inverse_g(PveParams p) {
    DaSystem s;
    s.variant_ = Variant::PveInverseG;
    s.pve_ = std::make_shared<const PveParams>(std::move(p));
    return s;
}

DaSystem DaSystem::mixed_g(MixedParams p) {
    DaSystem s;
    s.variant_ = Variant::MixedG;
    s.mixed_ = std::make_shared<const MixedParams>(std::move(p));
    return s;
}

DaSystem DaSystem::linear(const DaSystem& sys) {
    DaSystem s = sys;
    s.deformation_enabled_ = false;
    return s;
}

const PveParams& DaSystem::pve() const {
    if (!pve_) throw unsupported_error("DaSystem: not a pve variant");
    return *pve_;
}

const MixedParams& DaSystem::mixed() const {
    if (!mixed_) throw unsupported_error("DaSystem: not the mixed variant");
    return *mixed_;
}

const EigenFrame& DaSystem::frame() const {
    return pve_ ? pve_->frame : mixed_->frame;
}

double DaSystem::dominant_rate() const {
    switch (variant_) {
        case Variant::PveF: return pve_->lambda_uu;
        case Variant::PveInverseG: return 1.0 / pve_->lambda_ss;
        case Variant::MixedG: return mixed_->lambda_uu;
    }
    return 0;
}

double DaSystem::middle_rate() const {
    switch (variant_) {
        case Variant::PveF: return pve_->lambda_s;
        case Variant::PveInverseG: return 1.0 / pve_->lambda_s;
        case Variant::MixedG: return mixed_->lambda_u;
    }
    return 0;
}

bool DaSystem::pve_support(const Vec3& local) const {
    const double slab = pve_->bump.delta / static_cast<double>(pve_->k);
    const double d2 = pve_->bump.delta * pve_->bump.delta;
    return std::abs(local.y) < slab && (local.x * local.x + local.z * local.z) < d2;
}

bool DaSystem::q1_support(const Vec3& local) const {
    const double slab = mixed_->bump.delta / static_cast<double>(mixed_->k);
    const double d2 = mixed_->bump.delta * mixed_->bump.delta;
    return std::abs(local.y) < slab && (local.x * local.x + local.z * local.z) < d2;
}

bool DaSystem::q2_support(const Vec3& local) const {
    const double slab = mixed_->bump.delta / static_cast<double>(mixed_->k);
    const double d2 = mixed_->bump.delta * mixed_->bump.delta;
    return std::abs(local.z) < slab && (local.x * local.x + local.y * local.y) < d2;
}

double DaSystem::solve_pve_b(double a, double target, double c) const {
    const PveParams& p = *pve_;
    const double slab = p.bump.delta / static_cast<double>(p.k);
    return invert_monotone(
        [&](double b) { return p.lambda_s * deformation_P(p, a, b, c).value; },
        [&](double b) { return p.lambda_s * deformation_P(p, a, b, c).db; }, target, -slab,
        slab, slab, "I_k");
}

double DaSystem::solve_q1_b(double a, double target, double c) const {
    const MixedParams& p = *mixed_;
    const double slab = p.bump.delta / static_cast<double>(p.k);
    return invert_monotone(
        [&](double b) { return deformation_Q(p, 1, a, b, c).value / p.lambda_u; },
        [&](double b) { return deformation_Q(p, 1, a, b, c).db / p.lambda_u; }, target, -slab,
        slab, slab, "J_k(q1)");
}

double DaSystem::solve_q2_c(double a, double b, double target) const {
    const MixedParams& p = *mixed_;
    const double slab = p.bump.delta / static_cast<double>(p.k);
    return invert_monotone(
        [&](double c) { return p.lambda_ss * deformation_Q(p, 2, a, b, c).value; },
        [&](double c) { return p.lambda_ss * deformation_Q(p, 2, a, b, c).dc; }, target, -slab,
        slab, slab, "J_k(q2)");
}

TorusPoint DaSystem::f_apply(const TorusPoint& x) const {
    const TorusPoint y = lattice_apply(pve_->fwd, x);
    if (!deformation_enabled_) return y;
    const Vec3 local = pve_->chart.local_coords(y);
    if (!pve_support(local)) return y;
    const double bstar = solve_pve_b(local.x, local.y, local.z);
    return pve_->chart.from_local({local.x, bstar, local.z});
}

TorusPoint DaSystem::f_apply_inverse(const TorusPoint& x) const {
    TorusPoint y = x;
    if (deformation_enabled_) {
        const Vec3 local = pve_->chart.local_coords(x);
        if (pve_support(local)) {
            const double bp = pve_->lambda_s *
                              deformation_P(*pve_, local.x, local.y, local.z).value;
            y = pve_->chart.from_local({local.x, bp, local.z});
        }
    }
    return lattice_apply(pve_->inv, y);
}

TorusPoint DaSystem::g_apply_mixed(const TorusPoint& x) const {
    const TorusPoint z = deformation_enabled_ ? deformation_apply(x) : x;
    return lattice_apply(mixed_->fwd, z);
}

TorusPoint DaSystem::g_apply_inverse_mixed(const TorusPoint& x) const {
    const TorusPoint y = lattice_apply(mixed_->inv, x);
    if (!deformation_enabled_) return y;
    return deformation_apply_inverse(y);
}

TorusPoint DaSystem::apply(const TorusPoint& x) const {
    switch (variant_) {
        case Variant::PveF: return f_apply(x);
        case Variant::PveInverseG: return f_apply_inverse(x);
        case Variant::MixedG: return g_apply_mixed(x);
    }
    return x;
}

TorusPoint DaSystem::apply_inverse(const TorusPoint& x) const {
    switch (variant_) {
        case Variant::PveF: return f_apply_inverse(x);
        case Variant::PveInverseG: return f_apply(x);
        case Variant::MixedG: return g_apply_inverse_mixed(x);
    }
    return x;
}

TorusPoint DaSystem::deformation_apply(const TorusPoint& x) const {
    if (!deformation_enabled_) return x;
    if (variant_ != Variant::MixedG) {
        // I_k: inverse of the closed-form branch
        const Vec3 local = pve_->chart.local_coords(x);
        if (!pve_support(local)) return x;
        const double bstar = solve_pve_b(local.x, local.y, local.z);
        return pve_->chart.from_local({local.x, bstar, local.z});
    }
    const Vec3 l1 = mixed_->chart_q1.local_coords(x);
    if (q1_support(l1)) {
        const double bp = deformation_Q(*mixed_, 1, l1.x, l1.y, l1.z).value / mixed_->lambda_u;
        return mixed_->chart_q1.from_local({l1.x, bp, l1.z});
    }
    const Vec3 l2 = mixed_->chart_q2.local_coords(x);
    if (q2_support(l2)) {
        const double cstar = solve_q2_c(l2.x, l2.y, l2.z);
        return mixed_->chart_q2.from_local({l2.x, l2.y, cstar});
    }
    return x;
}

TorusPoint DaSystem::deformation_apply_inverse(const TorusPoint& x) const {
    if (!deformation_enabled_) return x;
    if (variant_ != Variant::MixedG) {
        const Vec3 local = pve_->chart.local_coords(x);
        if (!pve_support(local)) return x;
        const double bp = pve_->lambda_s * deformation_P(*pve_, local.x, local.y, local.z).value;
        return pve_->chart.from_local({local.x, bp, local.z});
    }
    const Vec3 l1 = mixed_->chart_q1.local_coords(x);
    if (q1_support(l1)) {
        const double bstar = solve_q1_b(l1.x, l1.y, l1.z);
        return mixed_->chart_q1.from_local({l1.x, bstar, l1.z});
    }
    const Vec3 l2 = mixed_->chart_q2.local_coords(x);
    if (q2_support(l2)) {
        const double cp = mixed_->lambda_ss * deformation_Q(*mixed_, 2, l2.x, l2.y, l2.z).value;
        return mixed_->chart_q2.from_local({l2.x, l2.y, cp});
    }
    return x;
}

Mat3 DaSystem::jacobian_linear() const {
    if (variant_ == Variant::PveF)
        return Mat3::diagonal(pve_->lambda_uu, pve_->lambda_s, pve_->lambda_ss);
    if (variant_ == Variant::PveInverseG)
        return Mat3::diagonal(1.0 / pve_->lambda_uu, 1.0 / pve_->lambda_s, 1.0 / pve_->lambda_ss);
    return Mat3::diagonal(mixed_->lambda_uu, mixed_->lambda_u, mixed_->lambda_ss);
}

Mat3 DaSystem::jacobian_linear_inverse() const {
    const Mat3 j = jacobian_linear();
    return Mat3::diagonal(1.0 / j(0, 0), 1.0 / j(1, 1), 1.0 / j(2, 2));
}

Mat3 DaSystem::jacobian_at_support(int region, double a, double b, double c) const {
    if (variant_ == Variant::PveF) {
        const DeformPartials d = deformation_P(*pve_, a, b, c);
        Mat3 J;
        J(0, 0) = pve_->lambda_uu;
        J(1, 0) = -pve_->lambda_uu * d.da / d.db;
        J(1, 1) = 1.0 / d.db;
        J(1, 2) = -pve_->lambda_ss * d.dc / d.db;
        J(2, 2) = pve_->lambda_ss;
        return J;
    }
    if (variant_ == Variant::PveInverseG) {
        const DeformPartials d = deformation_P(*pve_, a, b, c);
        Mat3 J;
        J(0, 0) = 1.0 / pve_->lambda_uu;
        J(1, 0) = d.da;
        J(1, 1) = d.db;
        J(1, 2) = d.dc;
        J(2, 2) = 1.0 / pve_->lambda_ss;
        return J;
    }
    if (region == 0) {
        const DeformPartials d = deformation_Q(*mixed_, 1, a, b, c);
        Mat3 J;
        J(0, 0) = mixed_->lambda_uu;
        J(1, 0) = d.da;
        J(1, 1) = d.db;
        J(1, 2) = d.dc;
        J(2, 2) = mixed_->lambda_ss;
        return J;
    }
    const DeformPartials d = deformation_Q(*mixed_, 2, a, b, c);
    Mat3 J;
    J(0, 0) = mixed_->lambda_uu;
    J(1, 1) = mixed_->lambda_u;
    J(2, 0) = -mixed_->lambda_ss * d.da / d.dc;
    J(2, 1) = -mixed_->lambda_ss * d.db / d.dc;
    J(2, 2) = 1.0 / d.dc;
    return J;
}

Mat3 DaSystem::jacobian_inverse_at_support(int region, double a, double b, double c) const {
    if (variant_ == Variant::PveF) {
        const DeformPartials d = deformation_P(*pve_, a, b, c);
        Mat3 J;
        J(0, 0) = 1.0 / pve_->lambda_uu;
        J(1, 0) = d.da;
        J(1, 1) = d.db;
        J(1, 2) = d.dc;
        J(2, 2) = 1.0 / pve_->lambda_ss;
        return J;
    }
    if (variant_ == Variant::PveInverseG) {
        const DeformPartials d = deformation_P(*pve_, a, b, c);
        Mat3 J;
        J(0, 0) = pve_->lambda_uu;
        J(1, 0) = -pve_->lambda_uu * d.da / d.db;
        J(1, 1) = 1.0 / d.db;
        J(1, 2) = -pve_->lambda_ss * d.dc / d.db;
        J(2, 2) = pve_->lambda_ss;
        return J;
    }
    if (region == 0) {
        const DeformPartials d = deformation_Q(*mixed_, 1, a, b, c);
        Mat3 J;
        J(0, 0) = 1.0 / mixed_->lambda_uu;
        J(1, 0) = -d.da / (mixed_->lambda_uu * d.db);
        J(1, 1) = 1.0 / d.db;
        J(1, 2) = -d.dc / (mixed_->lambda_ss * d.db);
        J(2, 2) = 1.0 / mixed_->lambda_ss;
        return J;
    }
    const DeformPartials d = deformation_Q(*mixed_, 2, a, b, c);
    Mat3 J;
    J(0, 0) = 1.0 / mixed_->lambda_uu;
    J(1, 1) = 1.0 / mixed_->lambda_u;
    J(2, 0) = mixed_->lambda_ss * d.da / mixed_->lambda_uu;
    J(2, 1) = mixed_->lambda_ss * d.db / mixed_->lambda_u;
    J(2, 2) = d.dc;
    return J;
}

double DaSystem::support_slab_half(int region) const {
    (void)region;
    const BumpProfile& b = pve_ ? pve_->bump : mixed_->bump;
    const long k = pve_ ? pve_->k : mixed_->k;
    return b.delta / static_cast<double>(k);
}

double DaSystem::support_radial(int region) const {
    (void)region;
    return pve_ ? pve_->bump.delta : mixed_->bump.delta;
}

const BoxChart& DaSystem::region_chart(int region) const {
    if (variant_ == Variant::MixedG) return region == 0 ? mixed_->chart_q1 : mixed_->chart_q2;
    return pve_->chart;
}

Mat3 DaSystem::jacobian_f(const TorusPoint& x) const {
    if (!deformation_enabled_) return jacobian_linear();
    const TorusPoint y = lattice_apply(pve_->fwd, x);
    const Vec3 local = pve_->chart.local_coords(y);
    if (!pve_support(local)) return jacobian_linear();
    const double bstar = solve_pve_b(local.x, local.y, local.z);
    // Evaluate the partials at the same representation of f(x) that apply()
    // produces, so Dg(f(x)) Df(x) closes exactly; P_b varies steeply across
    // the slab and any coordinate drift between the two factors shows up
    // amplified by lambda_uu.
    const Vec3 lz =
        pve_->chart.local_coords(pve_->chart.from_local({local.x, bstar, local.z}));
    return jacobian_at_support(0, lz.x, lz.y, lz.z);
}

Mat3 DaSystem::jacobian_g(const TorusPoint& x) const {
    if (!deformation_enabled_) return jacobian_linear();
    const Vec3 local = pve_->chart.local_coords(x);
    if (!pve_support(local)) return jacobian_linear();
    return jacobian_at_support(0, local.x, local.y, local.z);
}

Mat3 DaSystem::jacobian_G(const TorusPoint& x) const {
    if (!deformation_enabled_) return jacobian_linear();
    const Vec3 l1 = mixed_->chart_q1.local_coords(x);
    if (q1_support(l1)) return jacobian_at_support(0, l1.x, l1.y, l1.z);
    const Vec3 l2 = mixed_->chart_q2.local_coords(x);
    if (q2_support(l2)) {
        const double cstar = solve_q2_c(l2.x, l2.y, l2.z);
        const Vec3 lz =
            mixed_->chart_q2.local_coords(mixed_->chart_q2.from_local({l2.x, l2.y, cstar}));
        return jacobian_at_support(1, lz.x, lz.y, lz.z);
    }
    return jacobian_linear();
}

Mat3 DaSystem::jacobian(const TorusPoint& x) const {
    switch (variant_) {
        case Variant::PveF: return jacobian_f(x);
        case Variant::PveInverseG: return jacobian_g(x);
        case Variant::MixedG: return jacobian_G(x);
    }
    return Mat3::identity();
}

double DaSystem::center_derivative(const TorusPoint& x) const {
    if (variant_ != Variant::PveInverseG)
        throw unsupported_error(
            "center_derivative: only the pve-inverse-g variant has an invariant center axis");
    if (!deformation_enabled_) return 1.0 / pve_->lambda_s;
    const Vec3 local = pve_->chart.local_coords(x);
    if (!pve_support(local)) return 1.0 / pve_->lambda_s;
    return deformation_P(*pve_, local.x, local.y, local.z).db;
}

} // namespace daforge
