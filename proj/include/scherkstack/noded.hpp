#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "scherkstack/config.hpp"
#include "scherkstack/errors.hpp"
#include "scherkstack/util.hpp"

namespace scherkstack {

inline int side_index(int s) {
    if (s == 1) return 0;
    if (s == -1) return 1;
    throw DomainError("side label must be +1 or -1");
}
inline int side_sign(int sidx) { return sidx == 0 ? 1 : -1; }

// Per-node override table: [side][node k] with k = 0..n inclusive.
// Empty vector on a side means no override on that side.
using PerNode = std::array<std::vector<double>, 2>;

inline cplx central_p(double theta, int s) {
    const cplx e = std::polar(1.0, pi / 2.0 - theta);
    return s > 0 ? -std::conj(e) : std::conj(e);
}
inline cplx central_q(double theta, int s) {
    const cplx e = std::polar(1.0, pi / 2.0 - theta);
    return s > 0 ? -e : e;
}

// Parameter value at which two unit-circle chart disks whose punctures are a
// Euclidean distance d apart would touch.
inline double chart_touch_parameter(double d) { return (2.0 - std::sqrt(4.0 - d * d)) / d; }

inline double choose_delta(double theta) {
    const double dmin = 2.0 * std::min(std::cos(theta), std::sin(theta));
    return std::min({0.4 * dmin, 0.25, 0.9 * chart_touch_parameter(dmin)});
}

// Euclidean center and radius of the disk |z - a| / |z + a| < del.
struct ChartDisk {
    cplx center;
    double radius;
};
inline ChartDisk chart_disk(const cplx& a, double del) {
    const double d2 = del * del;
    return {a * ((1.0 + d2) / (1.0 - d2)), 2.0 * del * std::abs(a) / (1.0 - d2)};
}

struct NodedSurface {
    Configuration config;
    double epsilon = 0.0;
    double delta = 0.0;
    std::array<std::vector<cplx>, 2> p;  // [side][sphere k-1]
    std::array<std::vector<cplx>, 2> q;  // [side][sphere k-1]
    std::array<std::vector<cplx>, 2> t;  // [side][node k], k = 0..n; index 0 mirrors n in TPMS mode
    std::vector<cplx> base;              // integration base point per sphere

    int n() const { return config.n; }

    cplx node_t(int s, int k) const {
        return t[static_cast<std::size_t>(side_index(s))][static_cast<std::size_t>(config.canonical_node(k))];
    }
    const cplx& puncture_p(int s, int k) const {
        return p[static_cast<std::size_t>(side_index(s))][static_cast<std::size_t>(k - 1)];
    }
    const cplx& puncture_q(int s, int k) const {
        return q[static_cast<std::size_t>(side_index(s))][static_cast<std::size_t>(k - 1)];
    }
};

inline void validate_disks(const NodedSurface& surf) {
    for (int k = 1; k <= surf.n(); ++k) {
        const std::array<cplx, 4> pts = {surf.puncture_p(+1, k), surf.puncture_p(-1, k),
                                         surf.puncture_q(+1, k), surf.puncture_q(-1, k)};
        for (int a = 0; a < 4; ++a)
            for (int b = a + 1; b < 4; ++b) {
                const ChartDisk da = chart_disk(pts[static_cast<std::size_t>(a)], surf.delta);
                const ChartDisk db = chart_disk(pts[static_cast<std::size_t>(b)], surf.delta);
                if (std::abs(da.center - db.center) <= da.radius + db.radius)
                    throw GeometryError("chart disks overlap on sphere " + std::to_string(k));
            }
    }
}

inline NodedSurface build(const Configuration& config, double epsilon,
                          const PerNode& zeta_overrides = {}, const PerNode& psi_overrides = {}) {
    config.validate();
    if (!(epsilon > 0.0)) throw DomainError("epsilon must be positive");

    NodedSurface surf;
    surf.config = config;
    surf.epsilon = epsilon;
    surf.delta = choose_delta(config.theta);
    const int n = config.n;
    for (int sidx = 0; sidx < 2; ++sidx) {
        const int s = side_sign(sidx);
        surf.p[static_cast<std::size_t>(sidx)].assign(static_cast<std::size_t>(n), central_p(config.theta, s));
        surf.q[static_cast<std::size_t>(sidx)].assign(static_cast<std::size_t>(n), central_q(config.theta, s));
        surf.t[static_cast<std::size_t>(sidx)].assign(static_cast<std::size_t>(n + 1), cplx(0.0));
    }
    surf.base.assign(static_cast<std::size_t>(n), cplx(0.0));

    const double eps2 = epsilon * epsilon;
    auto pick = [&](const PerNode& table, int sidx, int k, double fallback) {
        const auto& row = table[static_cast<std::size_t>(sidx)];
        if (row.empty()) return fallback;
        if (row.size() != static_cast<std::size_t>(n + 1))
            throw DomainError("override row must have one entry per node index 0..n");
        return row[static_cast<std::size_t>(k)];
    };

    const int k_hi = config.mode == Mode::TPMS ? n : n - 1;
    for (int k = 1; k <= k_hi; ++k) {
        for (int sidx = 0; sidx < 2; ++sidx) {
            const int s = side_sign(sidx);
            const double zeta = pick(zeta_overrides, sidx, k, 0.0);
            const double phase = pick(psi_overrides, sidx, k, s * config.psi_of(k));
            const double ell_sk = config.ell_of(k) + eps2 * zeta;
            const double mag = std::exp(-ell_sk / eps2);
            if (!(mag < surf.delta * surf.delta))
                throw RangeError("node parameter magnitude " + std::to_string(mag) + " at node (" +
                                 std::to_string(s) + "," + std::to_string(k) + ") reaches delta^2 = " +
                                 std::to_string(surf.delta * surf.delta));
            surf.t[static_cast<std::size_t>(sidx)][static_cast<std::size_t>(k)] = -std::polar(mag, phase);
        }
    }
    if (config.mode == Mode::TPMS)
        for (int sidx = 0; sidx < 2; ++sidx)
            surf.t[static_cast<std::size_t>(sidx)][0] = surf.t[static_cast<std::size_t>(sidx)][static_cast<std::size_t>(n)];

    validate_disks(surf);
    return surf;
}

inline double chart_parity(int k) { return k % 2 == 0 ? 1.0 : -1.0; }

inline cplx node_coord_u(const NodedSurface& surf, int s, int k, const cplx& z) {
    const cplx a = surf.puncture_p(s, k);
    if (std::abs(z + a) < 1e-14) throw PoleError("node coordinate pole at the antipodal point");
    return chart_parity(k) * I * (z - a) / (z + a);
}

inline cplx node_coord_u_inverse(const NodedSurface& surf, int s, int k, const cplx& u) {
    const cplx a = surf.puncture_p(s, k);
    const cplx w = chart_parity(k) * I;
    if (std::abs(w - u) < 1e-14) throw PoleError("coordinate value maps to the point at infinity");
    return a * (w + u) / (w - u);
}

inline cplx node_coord_v(const NodedSurface& surf, int s, int k, const cplx& z) {
    const cplx a = surf.puncture_q(s, k);
    if (std::abs(z + a) < 1e-14) throw PoleError("node coordinate pole at the antipodal point");
    return chart_parity(k) * I * (z - a) / (z + a);
}

inline cplx node_coord_v_inverse(const NodedSurface& surf, int s, int k, const cplx& v) {
    const cplx a = surf.puncture_q(s, k);
    const cplx w = chart_parity(k) * I;
    if (std::abs(w - v) < 1e-14) throw PoleError("coordinate value maps to the point at infinity");
    return a * (w + v) / (w - v);
}

inline cplx identify(const NodedSurface& surf, int s, int k, const cplx& u_value) {
    const cplx tval = surf.node_t(s, k);
    const double at = std::abs(tval);
    if (at == 0.0) throw AnnulusError("node (" + std::to_string(s) + "," + std::to_string(k) + ") is not opened");
    const double au = std::abs(u_value);
    if (au < at / surf.delta || au > surf.delta)
        throw AnnulusError("coordinate modulus " + std::to_string(au) + " outside the gluing annulus");
    return tval / u_value;
}

inline bool in_fixed_domain(const NodedSurface& surf, int k, const cplx& z) {
    (void)k;
    const double half = surf.delta / 2.0;
    for (int s : {+1, -1}) {
        for (const cplx& a : {central_p(surf.config.theta, s), central_q(surf.config.theta, s)}) {
            const double den = std::abs(z + a);
            if (den == 0.0) continue;
            if (std::abs(z - a) / den <= half) return false;
        }
    }
    return true;
}

} // namespace scherkstack
