#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <vector>

#include "scherkstack/errors.hpp"
#include "scherkstack/util.hpp"

namespace scherkstack {

enum class Variant { Odd, Even };

// One doubly periodic Scherk surface: four vertical ends on the unit circle, two up, two down.
// The Even variant is the same puncture set with reflected end directions and inverted Gauss map.
struct ScherkParams {
    double theta;
    Variant variant;
    double vartheta;
    std::array<cplx, 4> p;         // punctures, all on the unit circle
    std::array<double, 4> dir;     // end direction angles theta_j
    std::array<int, 4> sigma;      // +1, -1, +1, -1
    std::array<cvec3, 4> c;        // simple-pole coefficients of (Phi_1, Phi_2, Phi_3) at p_j

    ScherkParams(double theta_, Variant variant_) : theta(theta_), variant(variant_) {
        if (!(theta > 0.0) || !(theta < pi / 2.0))
            throw DomainError("theta must lie strictly inside (0, pi/2)");
        vartheta = pi / 2.0 - theta;
        const cplx e = std::polar(1.0, vartheta);
        p = {-std::conj(e), e, std::conj(e), -e};    // -1/p1 = p2 = 1/p3 = -p4 = e^{i vartheta}
        dir = {theta, pi - theta, -pi + theta, -theta};
        if (variant == Variant::Even)
            for (double& a : dir) a = pi - a;
        sigma = {1, -1, 1, -1};
        for (int j = 0; j < 4; ++j)
            c[j] = {-I * std::cos(dir[j]), -I * std::sin(dir[j]), cplx(sigma[j])};
    }

    double chart_sign() const { return variant == Variant::Odd ? 1.0 : -1.0; }
};

struct EndData {
    int j;
    double direction;
    int sigma;
    rvec2 mu;
    double nu;
    double upsilon;
    rvec3 normal;
};

inline double puncture_distance(const ScherkParams& s, cplx z) {
    double d = std::abs(z - s.p[0]);
    for (int j = 1; j < 4; ++j) d = std::min(d, std::abs(z - s.p[j]));
    return d;
}

inline cvec3 weierstrass_at(const ScherkParams& s, cplx z) {
    if (puncture_distance(s, z) < 1e-12)
        throw PoleError("evaluation at a puncture");
    cvec3 out = {0, 0, 0};
    for (int j = 0; j < 4; ++j)
        out += (1.0 / (z - s.p[j])) * s.c[j];
    return out;
}

// Stereographic Gauss map -(Phi_1 + i Phi_2)/Phi_3, evaluated with the pole at the nearest
// puncture divided out so the ratio stays finite there; a residual 0/0 (a Gauss-map zero
// colliding with the deflation point) falls back to the derivative ratio.
inline cplx gauss_map(const ScherkParams& s, cplx z) {
    int jn = 0;
    for (int j = 1; j < 4; ++j)
        if (std::abs(z - s.p[j]) < std::abs(z - s.p[jn])) jn = j;
    const cplx dz = z - s.p[jn];
    cplx num = s.c[jn][0] + I * s.c[jn][1];
    cplx den = s.c[jn][2];
    cplx dnum = 0.0, dden = 0.0;
    for (int l = 0; l < 4; ++l) {
        if (l == jn) continue;
        const cplx inv = 1.0 / (z - s.p[l]);
        const cplx cp = s.c[l][0] + I * s.c[l][1];
        num += dz * cp * inv;
        den += dz * s.c[l][2] * inv;
        dnum += cp * (inv - dz * inv * inv);
        dden += s.c[l][2] * (inv - dz * inv * inv);
    }
    if (std::abs(den) < 1e-11 && std::abs(num) < 1e-11) {
        if (std::abs(dden) < 1e-11)
            throw IndeterminateError("Gauss map 0/0 with degenerate derivative");
        return -dnum / dden;
    }
    return -num / den;
}

inline EndData end_data(const ScherkParams& s, int j) {
    if (j < 1 || j > 4) throw DomainError("end index out of range");
    const double ct = std::cos(s.theta), st = std::sin(s.theta);
    std::array<rvec2, 4> mu = {{{pi * ct, 0.0}, {0.0, pi * st}, {-pi * ct, 0.0}, {0.0, -pi * st}}};
    EndData e;
    e.j = j;
    e.direction = s.dir[j - 1];
    e.sigma = s.sigma[j - 1];
    e.mu = (s.variant == Variant::Odd) ? mu[j - 1] : mu[4 - j];
    e.nu = -s.sigma[j - 1] * std::log(st * ct);
    e.upsilon = 2.0;
    e.normal = {-s.sigma[j - 1] * std::sin(e.direction), s.sigma[j - 1] * std::cos(e.direction), 0.0};
    return e;
}

inline cplx end_coordinate(const ScherkParams& s, int j, cplx z) {
    const cplx pj = s.p[j - 1];
    if (std::abs(z + pj) < 1e-14) throw PoleError("end coordinate pole at the antipode");
    return s.chart_sign() * I * (z - pj) / (z + pj);
}

inline cplx end_coordinate_inverse(const ScherkParams& s, int j, cplx w) {
    const cplx cc = s.chart_sign() * I;
    return s.p[j - 1] * (cc + w) / (cc - w);
}

inline cvec3 end_residue(const ScherkParams& s, int j) { return s.c[j - 1]; }

// Constant term of Phi/dw_j at the end: d_i = -i s [c_ij + 2 p_j sum_{l != j} c_il/(p_j - p_l)].
inline cvec3 end_linear_coefficient(const ScherkParams& s, int j) {
    const cplx pj = s.p[j - 1];
    cvec3 acc = s.c[j - 1];
    for (int l = 0; l < 4; ++l) {
        if (l == j - 1) continue;
        acc += (2.0 * pj / (pj - s.p[l])) * s.c[l];
    }
    return (-I * s.chart_sign()) * acc;
}

// First-order end asymptotics: planar terms (mu, nu, log/arg) plus the undulation term Re(d w).
inline rvec3 end_expansion(const ScherkParams& s, int j, cplx w) {
    const double r = std::abs(w);
    if (!(r > 0.0) || !(r < 0.3)) throw DomainError("end coordinate outside 0 < |w| < 0.3");
    const EndData e = end_data(s, j);
    const cvec3 d = end_linear_coefficient(s, j);
    const double a = std::arg(w);
    rvec3 x = {e.mu[0] + std::cos(e.direction) * a + (d[0] * w).real(),
               e.mu[1] + std::sin(e.direction) * a + (d[1] * w).real(),
               e.nu + e.sigma * std::log(r) + (d[2] * w).real()};
    return x;
}

inline double x3_exact(const ScherkParams& s, cplx z) {
    double acc = 0.0;
    for (int j = 0; j < 4; ++j)
        acc += s.sigma[j] * std::log(std::abs(z - s.p[j]));
    return acc;
}

inline std::vector<cplx> plan_path(const ScherkParams& s, cplx a, cplx b, double clearance = 0.05) {
    return plan_route(std::vector<cplx>(s.p.begin(), s.p.end()), a, b, clearance);
}

// Re int_0^z Phi along the planned path; the two horizontal coordinates depend on the path's
// homotopy class, which the deterministic planner fixes.
inline rvec3 immerse(const ScherkParams& s, cplx z, int path_resolution = 16) {
    if (puncture_distance(s, z) < 1e-12) throw PoleError("immersion target is a puncture");
    const std::vector<cplx> pts = plan_path(s, 0.0, z);
    const int chunks = std::max(1, path_resolution / static_cast<int>(std::max<std::size_t>(1, pts.size() - 1)));
    cvec3 total = {0, 0, 0};
    for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
        const cplx a = pts[k], b = pts[k + 1];
        const cplx step = (b - a) / static_cast<double>(chunks);
        for (int q = 0; q < chunks; ++q) {
            const cplx a0 = a + static_cast<double>(q) * step;
            total += integrate_adaptive(
                [&](double x) { return step * weierstrass_at(s, a0 + x * step); }, 0.0, 1.0,
                1e-11);
        }
    }
    return real_part(total);
}

} // namespace scherkstack
