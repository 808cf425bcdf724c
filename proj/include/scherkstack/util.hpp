#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <vector>

#include "scherkstack/errors.hpp"

namespace scherkstack {

using cplx = std::complex<double>;
using cvec3 = std::array<cplx, 3>;
using rvec3 = std::array<double, 3>;
using rvec2 = std::array<double, 2>;

constexpr double pi = 3.14159265358979323846;
inline const cplx I{0.0, 1.0};

inline cvec3 operator+(const cvec3& a, const cvec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline cvec3 operator-(const cvec3& a, const cvec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline cvec3 operator*(const cplx& s, const cvec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline cvec3& operator+=(cvec3& a, const cvec3& b) { a = a + b; return a; }
inline rvec3 operator+(const rvec3& a, const rvec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
inline rvec3 operator-(const rvec3& a, const rvec3& b) { return {a[0] - b[0], a[1] - b[1], a[2] - b[2]}; }
inline rvec3 operator*(double s, const rvec3& a) { return {s * a[0], s * a[1], s * a[2]}; }
inline rvec3& operator+=(rvec3& a, const rvec3& b) { a = a + b; return a; }

inline double dot(const rvec3& a, const rvec3& b) { return a[0] * b[0] + a[1] * b[1] + a[2] * b[2]; }
inline rvec3 cross(const rvec3& a, const rvec3& b) {
    return {a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]};
}
inline double norm(const rvec3& a) { return std::sqrt(dot(a, a)); }
inline double norm_inf(const cvec3& a) {
    return std::max({std::abs(a[0]), std::abs(a[1]), std::abs(a[2])});
}
inline rvec3 real_part(const cvec3& a) { return {a[0].real(), a[1].real(), a[2].real()}; }

// Gauss(7) embedded in Kronrod(15) on [-1, 1]; nodes at indices 1,3,5,7 are the Gauss points.
namespace gk {
inline constexpr std::array<double, 8> xk = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
inline constexpr std::array<double, 8> wk = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
inline constexpr std::array<double, 4> wg = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};
} // namespace gk

struct PanelResult {
    cvec3 value;
    double error;
};

// One Kronrod-15 panel over [a, b]; error estimated against the embedded Gauss-7 value.
inline PanelResult gk15_panel(const std::function<cvec3(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    cvec3 resk = {0, 0, 0}, resg = {0, 0, 0};
    for (int i = 0; i < 8; ++i) {
        cvec3 v = (i == 7) ? f(c) : f(c - h * gk::xk[i]) + f(c + h * gk::xk[i]);
        resk += gk::wk[i] * v;
        if (i % 2 == 1) resg += gk::wg[i / 2] * v;
    }
    cvec3 value = cplx(h) * resk;
    cvec3 diff = cplx(h) * (resk - resg);
    return {value, norm_inf(diff)};
}

// Adaptive bisection to absolute tolerance; panel budget caps runaway subdivision near
// a singularity the caller should have routed around.
inline cvec3 integrate_adaptive(const std::function<cvec3(double)>& f, double a, double b,
                                double abs_tol = 1e-10, std::size_t max_panels = (1u << 20)) {
    struct Item { double a, b; PanelResult r; };
    std::vector<Item> stack;
    stack.push_back({a, b, gk15_panel(f, a, b)});
    cvec3 total = {0, 0, 0};
    std::size_t used = 1;
    while (!stack.empty()) {
        Item it = stack.back();
        stack.pop_back();
        if (it.r.error <= abs_tol * std::max(1e-3, (it.b - it.a) / (b - a)) || it.r.error <= 1e-16) {
            total += it.r.value;
            continue;
        }
        if (used + 2 > max_panels)
            throw ConvergenceError("quadrature panel budget exhausted");
        const double m = 0.5 * (it.a + it.b);
        stack.push_back({it.a, m, gk15_panel(f, it.a, m)});
        stack.push_back({m, it.b, gk15_panel(f, m, it.b)});
        used += 2;
    }
    return total;
}

inline cplx integrate_adaptive_scalar(const std::function<cplx(double)>& f, double a, double b,
                                      double abs_tol = 1e-10) {
    cvec3 r = integrate_adaptive([&](double x) { return cvec3{f(x), 0.0, 0.0}; }, a, b, abs_tol);
    return r[0];
}

// Trapezoid rule on the circle center + radius e^{i phi}; spectrally accurate for
// integrands analytic in an annulus around the contour.  Returns (1/2pi i) * contour integral.
inline cplx contour_mean(const std::function<cplx(cplx)>& f, cplx center, double radius, int n = 256) {
    cplx acc = 0.0;
    for (int m = 0; m < n; ++m) {
        const double phi = 2.0 * pi * m / n;
        const cplx e = std::polar(1.0, phi);
        acc += f(center + radius * e) * radius * e;
    }
    return acc / static_cast<double>(n);
}

inline cvec3 contour_mean3(const std::function<cvec3(cplx)>& f, cplx center, double radius, int n = 256) {
    cvec3 acc = {0, 0, 0};
    for (int m = 0; m < n; ++m) {
        const double phi = 2.0 * pi * m / n;
        const cplx e = std::polar(1.0, phi);
        acc += (radius * e) * f(center + radius * e);
    }
    return (1.0 / static_cast<double>(n)) * acc;
}

// Fourier coefficients a_0..a_{count-1} of g on |u - center| = radius: a_m = coefficient of u^m
// of the analytic continuation, extracted by trapezoid projection.
inline std::vector<cplx> taylor_coefficients(const std::function<cplx(cplx)>& g, cplx center,
                                             double radius, int count, int n = 256) {
    std::vector<cplx> samples(n);
    for (int m = 0; m < n; ++m)
        samples[m] = g(center + std::polar(radius, 2.0 * pi * m / n));
    std::vector<cplx> out(count);
    for (int k = 0; k < count; ++k) {
        cplx acc = 0.0;
        for (int m = 0; m < n; ++m)
            acc += samples[m] * std::polar(1.0, -2.0 * pi * k * m / n);
        out[k] = acc / (static_cast<double>(n) * std::pow(radius, k));
    }
    return out;
}

inline double sqr(double x) { return x * x; }

namespace detail_route {

inline void route_segment(const std::vector<cplx>& obstacles, cplx a, cplx b, double clearance,
                          int depth, std::vector<cplx>& out) {
    if (depth > 8) throw PathError("detour recursion exhausted");
    for (const cplx& obs : obstacles) {
        const cplx ab = b - a;
        const double len2 = std::norm(ab);
        if (len2 < 1e-28) break;
        const double tfoot = ((obs - a) * std::conj(ab)).real() / len2;
        if (tfoot <= 1e-9 || tfoot >= 1.0 - 1e-9) continue;
        const cplx foot = a + tfoot * ab;
        if (std::abs(foot - obs) >= clearance) continue;
        if (std::abs(b - obs) < clearance || std::abs(a - obs) < clearance) continue;
        cplx away = foot - obs;
        if (std::abs(away) < 1e-12) away = I * ab / std::sqrt(len2);
        const cplx waypoint = obs + (2.0 * clearance) * away / std::abs(away);
        route_segment(obstacles, a, waypoint, clearance, depth + 1, out);
        route_segment(obstacles, waypoint, b, clearance, depth + 1, out);
        return;
    }
    out.push_back(b);
}

} // namespace detail_route

// Polyline from a to b made of straight segments, detouring around any obstacle that comes
// within `clearance` of a segment interior.
inline std::vector<cplx> plan_route(const std::vector<cplx>& obstacles, cplx a, cplx b,
                                    double clearance) {
    std::vector<cplx> pts = {a};
    detail_route::route_segment(obstacles, a, b, clearance, 0, pts);
    return pts;
}

} // namespace scherkstack
