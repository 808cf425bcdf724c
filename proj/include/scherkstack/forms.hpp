#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include "scherkstack/config.hpp"
#include "scherkstack/errors.hpp"
#include "scherkstack/noded.hpp"
#include "scherkstack/util.hpp"

namespace scherkstack {

// Prescribed simple-pole data: one (f, x) pair of real 3-vectors per node index k = 0..n.
// In cyclic mode indices 0 and n name the same node; accessors canonicalize.
struct FormSpec {
    std::array<std::vector<rvec3>, 2> f;
    std::array<std::vector<rvec3>, 2> x;
};

inline FormSpec central_spec(const Configuration& cfg, double epsilon, double lambda1 = 0.0,
                             double lambda2 = 0.0) {
    FormSpec sp;
    const double tau = cfg.tau_max(epsilon);
    for (int sidx = 0; sidx < 2; ++sidx) {
        const double s = sidx == 0 ? 1.0 : -1.0;
        sp.f[static_cast<std::size_t>(sidx)].assign(static_cast<std::size_t>(cfg.n + 1), rvec3{0.0, 0.0, 1.0});
        sp.x[static_cast<std::size_t>(sidx)].resize(static_cast<std::size_t>(cfg.n + 1));
        for (int k = 0; k <= cfg.n; ++k) {
            const rvec2 T = cfg.T_of(k);
            const double lam = cfg.direction_class(k) == 1 ? lambda1 : lambda2;
            const double scale = s * (1.0 + lam * tau);
            sp.x[static_cast<std::size_t>(sidx)][static_cast<std::size_t>(k)] =
                rvec3{scale * T[0], scale * T[1], 0.0};
        }
    }
    return sp;
}

// Residue vector f - i x prescribed at puncture p_{s,k}.
inline cvec3 spec_residue(const FormSpec& sp, const Configuration& cfg, int s, int k) {
    const int kk = cfg.mode == Mode::TPMS ? cfg.canonical_node(k) : k;
    const std::size_t si = static_cast<std::size_t>(side_index(s));
    const std::size_t ki = static_cast<std::size_t>(kk);
    cvec3 r;
    for (int i = 0; i < 3; ++i)
        r[static_cast<std::size_t>(i)] = cplx(sp.f[si][ki][static_cast<std::size_t>(i)],
                                              -sp.x[si][ki][static_cast<std::size_t>(i)]);
    return r;
}

using ChartCorrections = std::array<std::vector<cplx>, 3>;  // [component][order-1], order = 1..M

// One meromorphic 1-form triple per sphere: exact simple poles at the four punctures plus
// higher-order principal parts (orders 2..M+1) in each opened node coordinate.
struct RegularForms {
    NodedSurface surface;
    FormSpec spec;
    int M = 8;
    int iterations = 0;
    std::array<std::vector<cvec3>, 2> res_p, res_q;             // [side][sphere-1]
    std::array<std::vector<ChartCorrections>, 2> cu, cv;        // [side][sphere-1]

    int next_sphere(int k) const {
        return surface.config.mode == Mode::TPMS ? (k % surface.config.n) + 1 : k + 1;
    }
};

// Full value of the component triple in the z-chart of sphere k (no region checks).
inline cvec3 form_value(const RegularForms& F, int k, const cplx& z) {
    const NodedSurface& surf = F.surface;
    const std::size_t ks = static_cast<std::size_t>(k - 1);
    const cplx w0 = chart_parity(k) * I;
    cvec3 out = {0.0, 0.0, 0.0};
    for (int sidx = 0; sidx < 2; ++sidx) {
        const std::size_t si = static_cast<std::size_t>(sidx);
        const int s = side_sign(sidx);
        for (int kind = 0; kind < 2; ++kind) {
            const cplx a = kind == 0 ? surf.p[si][ks] : surf.q[si][ks];
            const cvec3& r = kind == 0 ? F.res_p[si][ks] : F.res_q[si][ks];
            const cplx dm = z - a;
            const cplx inv = 1.0 / dm;
            for (int i = 0; i < 3; ++i) out[static_cast<std::size_t>(i)] += r[static_cast<std::size_t>(i)] * inv;
            const int node = kind == 0 ? k : k - 1;
            if (std::abs(surf.node_t(s, node)) == 0.0) continue;
            const cplx dp = z + a;
            if (std::abs(dp) < 1e-150) continue;  // chart pole: correction terms vanish there
            const auto& cc = kind == 0 ? F.cu[si][ks] : F.cv[si][ks];
            const cplx w = w0 * dm / dp;
            const cplx wp = w0 * (2.0 * a) / (dp * dp);
            const cplx invw = 1.0 / w;
            cplx pw = invw * invw;
            for (int m = 1; m <= F.M; ++m) {
                const cplx factor = pw * wp;
                for (int i = 0; i < 3; ++i)
                    out[static_cast<std::size_t>(i)] += cc[static_cast<std::size_t>(i)][static_cast<std::size_t>(m - 1)] * factor;
                pw *= invw;
            }
        }
    }
    return out;
}

inline cvec3 evaluate(const RegularForms& F, int k, const cplx& z) {
    const NodedSurface& surf = F.surface;
    auto chart_mod = [&](const cplx& a) {
        const double den = std::abs(z + a);
        if (den == 0.0) return std::numeric_limits<double>::infinity();
        return std::abs(z - a) / den;
    };
    for (int s : {+1, -1}) {
        if (std::abs(z - surf.puncture_p(s, k)) < 1e-12 || std::abs(z - surf.puncture_q(s, k)) < 1e-12)
            throw PoleError("evaluation point is a puncture");
    }
    for (int s : {+1, -1}) {
        const double tu = std::abs(surf.node_t(s, k));
        if (tu > 0.0 && chart_mod(surf.puncture_p(s, k)) < tu / surf.delta)
            throw RegionError("point lies in a disk removed by the gluing");
        const double tv = std::abs(surf.node_t(s, k - 1));
        if (tv > 0.0 && chart_mod(surf.puncture_q(s, k)) < tv / surf.delta)
            throw RegionError("point lies in a disk removed by the gluing");
    }
    return form_value(F, k, z);
}

// Taylor coefficients (orders 0..count-1) of the regular remainder of the form in the node
// chart at (kind: 0 = p, 1 = q) on sphere k, extracted by trapezoid projection on |w| = radius.
inline std::array<std::vector<cplx>, 3> chart_tail(const RegularForms& F, int kind, int s, int k,
                                                   int count, double radius, int nsamp) {
    const NodedSurface& surf = F.surface;
    const std::size_t si = static_cast<std::size_t>(side_index(s));
    const std::size_t ks = static_cast<std::size_t>(k - 1);
    const cplx a = kind == 0 ? surf.p[si][ks] : surf.q[si][ks];
    const cvec3& r = kind == 0 ? F.res_p[si][ks] : F.res_q[si][ks];
    const auto& cc = kind == 0 ? F.cu[si][ks] : F.cv[si][ks];
    const int node = kind == 0 ? k : k - 1;
    const bool active = std::abs(surf.node_t(s, node)) > 0.0;
    const cplx w0 = chart_parity(k) * I;

    std::vector<cvec3> g(static_cast<std::size_t>(nsamp));
    for (int m = 0; m < nsamp; ++m) {
        const cplx w = std::polar(radius, 2.0 * pi * m / nsamp);
        const cplx z = a * (w0 + w) / (w0 - w);
        const cplx dzdw = 2.0 * a * w0 / ((w0 - w) * (w0 - w));
        const cvec3 val = form_value(F, k, z);
        const cplx invw = 1.0 / w;
        for (int i = 0; i < 3; ++i) {
            cplx sing = r[static_cast<std::size_t>(i)] * invw;
            if (active) {
                cplx pw = invw * invw;
                for (int mm = 1; mm <= F.M; ++mm) {
                    sing += cc[static_cast<std::size_t>(i)][static_cast<std::size_t>(mm - 1)] * pw;
                    pw *= invw;
                }
            }
            g[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)] =
                val[static_cast<std::size_t>(i)] * dzdw - sing;
        }
    }
    std::array<std::vector<cplx>, 3> out;
    for (int i = 0; i < 3; ++i) out[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(count), cplx(0.0));
    for (int j = 0; j < count; ++j) {
        cvec3 acc = {0.0, 0.0, 0.0};
        for (int m = 0; m < nsamp; ++m) {
            const cplx e = std::polar(1.0, -2.0 * pi * j * m / nsamp);
            for (int i = 0; i < 3; ++i)
                acc[static_cast<std::size_t>(i)] += g[static_cast<std::size_t>(m)][static_cast<std::size_t>(i)] * e;
        }
        const double rj = std::pow(radius, j);
        for (int i = 0; i < 3; ++i)
            out[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                acc[static_cast<std::size_t>(i)] / (static_cast<double>(nsamp) * rj);
    }
    return out;
}

inline RegularForms solve_forms(const NodedSurface& surf, const FormSpec& spec, int M = 8,
                                double tol = 1e-12) {
    if (M < 4) throw DomainError("correction order must be at least 4");
    if (!(tol > 0.0)) throw DomainError("tolerance must be positive");
    const Configuration& cfg = surf.config;
    const int n = cfg.n;
    for (int sidx = 0; sidx < 2; ++sidx) {
        const std::size_t si = static_cast<std::size_t>(sidx);
        if (spec.f[si].size() != static_cast<std::size_t>(n + 1) ||
            spec.x[si].size() != static_cast<std::size_t>(n + 1))
            throw SpecError("spec must carry one (f, x) pair per node index 0..n");
    }
    const int k0 = cfg.mode == Mode::TPMS ? 1 : 0;
    cvec3 ref = {0.0, 0.0, 0.0};
    for (int k = k0; k <= n; ++k) {
        cvec3 sum = {0.0, 0.0, 0.0};
        for (int s : {+1, -1}) {
            const std::size_t si = static_cast<std::size_t>(side_index(s));
            const int kk = cfg.mode == Mode::TPMS ? cfg.canonical_node(k) : k;
            if (std::abs(spec.x[si][static_cast<std::size_t>(kk)][2]) > 1e-15)
                throw SpecError("the third component of x must vanish");
            sum += spec_residue(spec, cfg, s, k);
        }
        if (k == k0)
            ref = sum;
        else if (norm_inf(sum - ref) > 1e-12)
            throw SpecError("per-node residue sums must agree across nodes");
    }

    RegularForms F;
    F.surface = surf;
    F.spec = spec;
    F.M = M;
    for (int sidx = 0; sidx < 2; ++sidx) {
        const std::size_t si = static_cast<std::size_t>(sidx);
        F.res_p[si].resize(static_cast<std::size_t>(n));
        F.res_q[si].resize(static_cast<std::size_t>(n));
        ChartCorrections zero;
        for (int i = 0; i < 3; ++i) zero[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(M), cplx(0.0));
        F.cu[si].assign(static_cast<std::size_t>(n), zero);
        F.cv[si].assign(static_cast<std::size_t>(n), zero);
        const int s = side_sign(sidx);
        for (int k = 1; k <= n; ++k) {
            F.res_p[si][static_cast<std::size_t>(k - 1)] = spec_residue(spec, cfg, s, k);
            F.res_q[si][static_cast<std::size_t>(k - 1)] = -1.0 * spec_residue(spec, cfg, s, k - 1);
        }
    }

    const int khi = cfg.mode == Mode::TPMS ? n : n - 1;
    const double proj_radius = 0.7 * surf.delta;
    struct Update {
        std::size_t si, sphere;
        int kind;
        std::array<std::vector<cplx>, 3> c;
    };
    for (int iter = 1; iter <= 200; ++iter) {
        std::vector<Update> updates;
        for (int k = 1; k <= khi; ++k) {
            for (int s : {+1, -1}) {
                const cplx t = surf.node_t(s, k);
                const int kn = F.next_sphere(k);
                const auto tail_u = chart_tail(F, 0, s, k, M, proj_radius, 256);
                const auto tail_v = chart_tail(F, 1, s, kn, M, proj_radius, 256);
                auto transported = [&](const std::array<std::vector<cplx>, 3>& tail) {
                    std::array<std::vector<cplx>, 3> c;
                    for (int i = 0; i < 3; ++i) {
                        c[static_cast<std::size_t>(i)].assign(static_cast<std::size_t>(M), cplx(0.0));
                        cplx tp = t;
                        for (int j = 0; j < M; ++j) {
                            c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] =
                                -tp * tail[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                            tp *= t;
                        }
                    }
                    return c;
                };
                updates.push_back({static_cast<std::size_t>(side_index(s)),
                                   static_cast<std::size_t>(k - 1), 0, transported(tail_v)});
                updates.push_back({static_cast<std::size_t>(side_index(s)),
                                   static_cast<std::size_t>(kn - 1), 1, transported(tail_u)});
            }
        }
        double worst = 0.0;
        bool finite = true;
        for (const Update& up : updates) {
            auto& slot = up.kind == 0 ? F.cu[up.si][up.sphere] : F.cv[up.si][up.sphere];
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < M; ++j) {
                    const cplx nc = up.c[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
                    if (!std::isfinite(nc.real()) || !std::isfinite(nc.imag())) finite = false;
                    worst = std::max(worst, std::abs(slot[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] - nc));
                    slot[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] = nc;
                }
        }
        if (!finite)
            throw ConvergenceError("matching coefficients overflowed; node modulus exceeds the chart scale");
        F.iterations = iter;
        if (worst < tol) return F;
    }
    throw ConvergenceError("node matching did not contract to a fixed point within 200 sweeps");
}

inline cvec3 a_period(const RegularForms& F, int s, int k) {
    return (2.0 * pi * I) * F.res_p[static_cast<std::size_t>(side_index(s))][static_cast<std::size_t>(k - 1)];
}

inline cvec3 a_period_quadrature(const RegularForms& F, int s, int k, int nsamp = 512) {
    const NodedSurface& surf = F.surface;
    const cplx a = surf.puncture_p(s, k);
    const cplx w0 = chart_parity(k) * I;
    const double R = surf.delta / 1.5;
    cvec3 acc = {0.0, 0.0, 0.0};
    for (int m = 0; m < nsamp; ++m) {
        const cplx u = std::polar(R, 2.0 * pi * m / nsamp);
        const cplx z = a * (w0 + u) / (w0 - u);
        const cplx dzdu = 2.0 * a * w0 / ((w0 - u) * (w0 - u));
        acc += (u * dzdu) * form_value(F, k, z);
    }
    return (2.0 * pi * I / static_cast<double>(nsamp)) * acc;
}

// Integral of the form triple along a straight route between two points of sphere k,
// detouring around punctures.
inline cvec3 integrate_form_along(const RegularForms& F, int k, const cplx& a, const cplx& b,
                                  double tol = 1e-11) {
    const NodedSurface& surf = F.surface;
    const std::vector<cplx> obstacles = {surf.puncture_p(+1, k), surf.puncture_p(-1, k),
                                         surf.puncture_q(+1, k), surf.puncture_q(-1, k)};
    const std::vector<cplx> pts = plan_route(obstacles, a, b, 0.05);
    cvec3 total = {0.0, 0.0, 0.0};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const cplx z0 = pts[i];
        const cplx dz = pts[i + 1] - pts[i];
        total += integrate_adaptive([&](double x) { return dz * form_value(F, k, z0 + x * dz); },
                                    0.0, 1.0, tol);
    }
    return total;
}

struct BPeriod {
    cvec3 raw;
    cvec3 regularized;
};

// Branch of log t used on the annulus leg: arg t = s*pi + psi with psi = arg(-t) in (-pi, pi].
inline cplx node_log_t(const NodedSurface& surf, int s, int k) {
    const cplx t = surf.node_t(s, k);
    if (std::abs(t) == 0.0) throw AnnulusError("node is not opened");
    const double psi = std::arg(-t);
    if (psi < -pi + 1e-9) throw BranchError("annulus winding is ambiguous at phase -pi");
    return cplx(std::log(std::abs(t)), s * pi + psi);
}

inline BPeriod b_period(const RegularForms& F, int s, int k) {
    const NodedSurface& surf = F.surface;
    const cplx t = surf.node_t(s, k);
    const cplx logt = node_log_t(surf, s, k);
    const int kn = F.next_sphere(surf.config.canonical_node(k));
    const std::size_t si = static_cast<std::size_t>(side_index(s));
    const int kc = surf.config.canonical_node(k);

    const cplx za = node_coord_u_inverse(surf, s, kc, cplx(surf.delta));
    cvec3 total = integrate_form_along(F, kc, surf.base[static_cast<std::size_t>(kc - 1)], za);

    const int J = 48;
    const auto tail = chart_tail(F, 0, s, kc, J, 0.9 * surf.delta, 512);
    const cvec3& r = F.res_p[si][static_cast<std::size_t>(kc - 1)];
    const auto& cc = F.cu[si][static_cast<std::size_t>(kc - 1)];
    const double del = surf.delta;
    const cplx lam = logt - 2.0 * std::log(del);
    for (int i = 0; i < 3; ++i) total[static_cast<std::size_t>(i)] += r[static_cast<std::size_t>(i)] * lam;
    {
        cplx pa = 1.0;
        double pb = 1.0;
        const cplx d_over_t = del / t;
        const double invd = 1.0 / del;
        for (int m = 1; m <= F.M; ++m) {
            pa *= d_over_t;
            pb *= invd;
            for (int i = 0; i < 3; ++i)
                total[static_cast<std::size_t>(i)] +=
                    cc[static_cast<std::size_t>(i)][static_cast<std::size_t>(m - 1)] * (pa - pb) / static_cast<double>(-m);
        }
    }
    {
        cplx pa = t / del;
        double pb = del;
        for (int j = 0; j < J; ++j) {
            for (int i = 0; i < 3; ++i)
                total[static_cast<std::size_t>(i)] +=
                    tail[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] * (pa - pb) / static_cast<double>(j + 1);
            pa *= t / del;
            pb *= del;
        }
    }

    const cplx zb = node_coord_v_inverse(surf, s, kn, cplx(surf.delta));
    total += integrate_form_along(F, kn, zb, surf.base[static_cast<std::size_t>(kn - 1)]);

    BPeriod out;
    out.raw = total;
    for (int i = 0; i < 3; ++i)
        out.regularized[static_cast<std::size_t>(i)] =
            total[static_cast<std::size_t>(i)] - r[static_cast<std::size_t>(i)] * logt;
    return out;
}

inline cplx quadratic_differential(const RegularForms& F, int k, const cplx& z) {
    const cvec3 v = evaluate(F, k, z);
    return v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
}

// Vertical component in the reciprocal chart xi = 1/z.  The total vertical residue vanishes
// analytically; its floating-point remainder is spread over the slots so no 1/xi term survives
// to amplify roundoff near small roots.
inline cplx phi3_reciprocal_chart(const RegularForms& F, int k, const cplx& xi) {
    const NodedSurface& surf = F.surface;
    const std::size_t ks = static_cast<std::size_t>(k - 1);
    const cplx w0 = chart_parity(k) * I;
    std::array<cplx, 4> slot_a, slot_r;
    std::array<const ChartCorrections*, 4> slot_c{};
    int idx = 0;
    cplx r0 = 0.0;
    for (int sidx = 0; sidx < 2; ++sidx) {
        const std::size_t si = static_cast<std::size_t>(sidx);
        const int s = side_sign(sidx);
        for (int kind = 0; kind < 2; ++kind) {
            slot_a[static_cast<std::size_t>(idx)] = kind == 0 ? surf.p[si][ks] : surf.q[si][ks];
            slot_r[static_cast<std::size_t>(idx)] = (kind == 0 ? F.res_p[si][ks] : F.res_q[si][ks])[2];
            r0 += slot_r[static_cast<std::size_t>(idx)];
            const int node = kind == 0 ? k : k - 1;
            if (std::abs(surf.node_t(s, node)) > 0.0)
                slot_c[static_cast<std::size_t>(idx)] = kind == 0 ? &F.cu[si][ks] : &F.cv[si][ks];
            ++idx;
        }
    }
    cplx out = 0.0;
    for (int j = 0; j < 4; ++j) {
        const cplx a = slot_a[static_cast<std::size_t>(j)];
        const cplx r3 = slot_r[static_cast<std::size_t>(j)] - r0 / 4.0;
        out -= r3 * a / (1.0 - a * xi);
        if (slot_c[static_cast<std::size_t>(j)] == nullptr) continue;
        const auto& cc = *slot_c[static_cast<std::size_t>(j)];
        const cplx w = w0 * (1.0 - a * xi) / (1.0 + a * xi);
        const cplx invw = 1.0 / w;
        cplx pw = invw * invw;
        cplx sum = 0.0;
        for (int m = 1; m <= F.M; ++m) {
            sum += cc[2][static_cast<std::size_t>(m - 1)] * pw;
            pw *= invw;
        }
        out -= sum * w0 * 2.0 * a / ((1.0 + a * xi) * (1.0 + a * xi));
    }
    return out;
}

struct Phi3Zeros {
    cplx at_origin;
    cplx at_infinity;  // infinite real part encodes the point at infinity
};

inline Phi3Zeros phi3_zeros(const RegularForms& F, int k) {
    auto newton = [&](const std::function<cplx(const cplx&)>& fun, const char* what) {
        cplx z = 0.0;
        for (int it = 0; it < 60; ++it) {
            const cplx v = fun(z);
            if (std::abs(v) < 1e-12) return z;
            const double h = 1e-7;
            const cplx d = (fun(z + h) - fun(z - h)) / (2.0 * h);
            if (!(std::abs(d) > 1e-10))
                throw RootError(std::string("degenerate derivative while locating the ") + what + " zero");
            z -= v / d;
            if (std::abs(z) > 0.3)
                throw RootError(std::string("iteration left the seeding basin of the ") + what + " zero");
        }
        throw RootError(std::string("no convergence locating the ") + what + " zero");
    };
    Phi3Zeros out;
    out.at_origin = newton([&](const cplx& z) { return form_value(F, k, z)[2]; }, "central");
    const cplx xi = newton([&](const cplx& x) { return phi3_reciprocal_chart(F, k, x); }, "far");
    if (std::abs(xi) < 1e-13)
        out.at_infinity = cplx(std::numeric_limits<double>::infinity(), 0.0);
    else
        out.at_infinity = 1.0 / xi;
    return out;
}

// Mean of Q / Phi_3 on the circle |u_{s,k}| = delta/1.5: (1/2 pi i) times the contour integral.
inline cplx conform_residual_A(const RegularForms& F, int s, int k, int nsamp = 512) {
    const NodedSurface& surf = F.surface;
    const cplx a = surf.puncture_p(s, k);
    const cplx w0 = chart_parity(k) * I;
    const double R = surf.delta / 1.5;
    cplx acc = 0.0;
    for (int m = 0; m < nsamp; ++m) {
        const cplx u = std::polar(R, 2.0 * pi * m / nsamp);
        const cplx z = a * (w0 + u) / (w0 - u);
        const cvec3 v = form_value(F, k, z);
        if (std::abs(v[2]) < 1e-8) throw ContourError("contour meets a zero of the vertical component");
        const cplx q = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        const cplx dzdu = 2.0 * a * w0 / ((w0 - u) * (w0 - u));
        acc += q / v[2] * dzdu * u;
    }
    return acc / static_cast<double>(nsamp);
}

inline cplx conform_residual_zero(const RegularForms& F, int k, int nsamp = 256) {
    const Phi3Zeros zs = phi3_zeros(F, k);
    const double R = 0.05;
    cplx acc = 0.0;
    for (int m = 0; m < nsamp; ++m) {
        const cplx e = std::polar(R, 2.0 * pi * m / nsamp);
        const cplx z = zs.at_origin + e;
        const cvec3 v = form_value(F, k, z);
        if (std::abs(v[2]) < 1e-8) throw ContourError("contour meets a zero of the vertical component");
        const cplx q = v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
        acc += q / v[2] * e;
    }
    return acc / static_cast<double>(nsamp);
}

inline void dump_forms(const RegularForms& F, std::ostream& os) {
    os << "sphere,side,chart,component,order,re,im\n";
    os.precision(17);
    for (int k = 1; k <= F.surface.n(); ++k)
        for (int sidx = 0; sidx < 2; ++sidx) {
            const std::size_t si = static_cast<std::size_t>(sidx);
            const std::size_t ks = static_cast<std::size_t>(k - 1);
            for (int kind = 0; kind < 2; ++kind) {
                const char* chart = kind == 0 ? "p" : "q";
                const cvec3& r = kind == 0 ? F.res_p[si][ks] : F.res_q[si][ks];
                const auto& cc = kind == 0 ? F.cu[si][ks] : F.cv[si][ks];
                for (int i = 0; i < 3; ++i) {
                    os << k << ',' << side_sign(sidx) << ',' << chart << ',' << i + 1 << ",1,"
                       << r[static_cast<std::size_t>(i)].real() << ',' << r[static_cast<std::size_t>(i)].imag() << '\n';
                    for (int m = 1; m <= F.M; ++m) {
                        const cplx c = cc[static_cast<std::size_t>(i)][static_cast<std::size_t>(m - 1)];
                        os << k << ',' << side_sign(sidx) << ',' << chart << ',' << i + 1 << ','
                           << m + 1 << ',' << c.real() << ',' << c.imag() << '\n';
                    }
                }
            }
        }
}

} // namespace scherkstack
