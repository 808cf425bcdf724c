#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "scherkstack/analyzer.hpp"
#include "scherkstack/config.hpp"
#include "scherkstack/errors.hpp"
#include "scherkstack/forms.hpp"
#include "scherkstack/noded.hpp"
#include "scherkstack/util.hpp"

namespace scherkstack {

// Period problem for an opened stack. The unknowns are the residue direction
// coefficients per node, the gap scales and phases per interior node, one
// puncture per sphere (inner-solved), and the lattice weights. The residual
// stacks the force balance, the node cycle closure, the lattice cycle closure
// (cyclic stacks only), and the neck conformality integrals.

// ---------------------------------------------------------------------------
// Unknowns

// Slot k of alpha/beta/gamma is node k. Cyclic stacks use slots 1..n (slot 0
// aliases node n and stays frozen); free-boundary stacks use slots 0..n.
// zeta/psi slots 1..interior_nodes hold per-side gap scales and phases; the
// stored psi is the full per-side phase (central value s * psi_of(k)).
struct UnknownVector {
    std::array<std::vector<double>, 2> alpha, beta, gamma;
    std::array<std::vector<double>, 2> zeta, psi;
    std::vector<cplx> p_plus;  // one puncture per sphere, adjusted internally
    double Lambda1 = 0.0, Lambda2 = 0.0;
};

// true = frozen at its current value, excluded from the packed vector.
struct UnknownMask {
    std::array<std::vector<bool>, 2> alpha, beta, gamma, zeta, psi;
    bool Lambda1 = true, Lambda2 = true;
};

namespace detail {
inline void require_shape(const Configuration& cfg, const UnknownVector& u) {
    const std::size_t slots = static_cast<std::size_t>(cfg.n + 1);
    for (int si = 0; si < 2; ++si) {
        const std::size_t s = static_cast<std::size_t>(si);
        if (u.alpha[s].size() != slots || u.beta[s].size() != slots || u.gamma[s].size() != slots ||
            u.zeta[s].size() != slots || u.psi[s].size() != slots)
            throw DomainError("unknown vector rows must have one slot per node index 0..n");
    }
    if (u.p_plus.size() != static_cast<std::size_t>(cfg.n))
        throw DomainError("unknown vector must carry one puncture per sphere");
}

template <typename Row, typename Fn>
void for_each_coordinate(const Configuration& cfg, const std::array<Row, 2>& maskrows,
                         int first_slot, int last_slot, Fn&& fn) {
    for (int si = 0; si < 2; ++si)
        for (int k = first_slot; k <= last_slot; ++k)
            if (!maskrows[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)])
                fn(si, k);
}
} // namespace detail

inline int first_node_slot(const Configuration& cfg) { return cfg.mode == Mode::TPMS ? 1 : 0; }

inline UnknownMask default_mask(const Configuration& cfg) {
    UnknownMask m;
    const std::size_t slots = static_cast<std::size_t>(cfg.n + 1);
    for (int si = 0; si < 2; ++si) {
        const std::size_t s = static_cast<std::size_t>(si);
        m.alpha[s].assign(slots, true);
        m.beta[s].assign(slots, true);
        m.gamma[s].assign(slots, true);
        m.zeta[s].assign(slots, true);
        m.psi[s].assign(slots, true);
        for (int k = first_node_slot(cfg); k <= cfg.n; ++k) {
            m.alpha[s][static_cast<std::size_t>(k)] = false;
            m.beta[s][static_cast<std::size_t>(k)] = false;
            m.gamma[s][static_cast<std::size_t>(k)] = false;
        }
        for (int k = 1; k <= cfg.interior_nodes(); ++k) {
            m.zeta[s][static_cast<std::size_t>(k)] = false;
            m.psi[s][static_cast<std::size_t>(k)] = false;
        }
    }
    if (cfg.mode == Mode::TPMS) {
        // Both lattice weights stay at their configured values; the vertical
        // cycle equation pins the overall gap scale, so all zeta are free.
    } else {
        // Unopened boundary nodes force alpha = 0 and hypot(beta, gamma) = 1
        // exactly; alpha is frozen here and gamma is derived from beta inside
        // assemble_residual, leaving the boundary tilt beta free.
        for (int si = 0; si < 2; ++si) {
            m.alpha[static_cast<std::size_t>(si)][0] = true;
            m.alpha[static_cast<std::size_t>(si)][static_cast<std::size_t>(cfg.n)] = true;
            m.gamma[static_cast<std::size_t>(si)][0] = true;
            m.gamma[static_cast<std::size_t>(si)][static_cast<std::size_t>(cfg.n)] = true;
        }
        // Without a closing cycle the solutions form a family whose
        // coordinates are the upper gap scales and phases; the configuration
        // selects the member, so those stay at their prescribed values and
        // the lower side follows from the node closure rows.
        for (int k = 1; k <= cfg.interior_nodes(); ++k) {
            m.zeta[0][static_cast<std::size_t>(k)] = true;
            m.psi[0][static_cast<std::size_t>(k)] = true;
        }
    }
    return m;
}

inline int packed_size(const Configuration& cfg, const UnknownMask& m) {
    int count = 0;
    auto tally = [&count](int, int) { ++count; };
    detail::for_each_coordinate(cfg, m.alpha, first_node_slot(cfg), cfg.n, tally);
    detail::for_each_coordinate(cfg, m.beta, first_node_slot(cfg), cfg.n, tally);
    detail::for_each_coordinate(cfg, m.gamma, first_node_slot(cfg), cfg.n, tally);
    detail::for_each_coordinate(cfg, m.zeta, 1, cfg.interior_nodes(), tally);
    detail::for_each_coordinate(cfg, m.psi, 1, cfg.interior_nodes(), tally);
    if (!m.Lambda1) ++count;
    if (!m.Lambda2) ++count;
    return count;
}

inline Eigen::VectorXd pack(const Configuration& cfg, const UnknownVector& u, const UnknownMask& m) {
    detail::require_shape(cfg, u);
    Eigen::VectorXd out(packed_size(cfg, m));
    int i = 0;
    auto take = [&](const std::array<std::vector<double>, 2>& rows) {
        return [&rows, &out, &i](int si, int k) {
            out[i++] = rows[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)];
        };
    };
    detail::for_each_coordinate(cfg, m.alpha, first_node_slot(cfg), cfg.n, take(u.alpha));
    detail::for_each_coordinate(cfg, m.beta, first_node_slot(cfg), cfg.n, take(u.beta));
    detail::for_each_coordinate(cfg, m.gamma, first_node_slot(cfg), cfg.n, take(u.gamma));
    detail::for_each_coordinate(cfg, m.zeta, 1, cfg.interior_nodes(), take(u.zeta));
    detail::for_each_coordinate(cfg, m.psi, 1, cfg.interior_nodes(), take(u.psi));
    if (!m.Lambda1) out[i++] = u.Lambda1;
    if (!m.Lambda2) out[i++] = u.Lambda2;
    return out;
}

inline void unpack(const Configuration& cfg, const Eigen::VectorXd& v, const UnknownMask& m,
                   UnknownVector& u) {
    detail::require_shape(cfg, u);
    if (v.size() != packed_size(cfg, m))
        throw DomainError("packed vector length does not match the mask");
    int i = 0;
    auto put = [&](std::array<std::vector<double>, 2>& rows) {
        return [&rows, &v, &i](int si, int k) {
            rows[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)] = v[i++];
        };
    };
    detail::for_each_coordinate(cfg, m.alpha, first_node_slot(cfg), cfg.n, put(u.alpha));
    detail::for_each_coordinate(cfg, m.beta, first_node_slot(cfg), cfg.n, put(u.beta));
    detail::for_each_coordinate(cfg, m.gamma, first_node_slot(cfg), cfg.n, put(u.gamma));
    detail::for_each_coordinate(cfg, m.zeta, 1, cfg.interior_nodes(), put(u.zeta));
    detail::for_each_coordinate(cfg, m.psi, 1, cfg.interior_nodes(), put(u.psi));
    if (!m.Lambda1) u.Lambda1 = v[i++];
    if (!m.Lambda2) u.Lambda2 = v[i++];
}

// ---------------------------------------------------------------------------
// Seeds

// Gap-scale system with the sum constant that the cycle-closure limit actually
// produces: zeta1 + zeta2 = -4 log(sin theta cos theta). The difference
// equation matches solve_zeta.
inline std::vector<std::array<double, 2>> seed_zeta_pairs(const Configuration& cfg) {
    const double c1 = std::cos(cfg.psi_of(1));
    const double c2 = cfg.interior_nodes() >= 2 ? std::cos(cfg.psi_of(2)) : c1;
    const double sc = std::sin(cfg.theta) * std::cos(cfg.theta);
    const double sum = -4.0 * std::log(sc);
    const double P = std::exp(-sum);
    const double R = cfg.Lambda2 - cfg.Lambda1;

    std::vector<double> roots;
    if (std::abs(c2) < 1e-14) {
        if (std::abs(c1) < 1e-14) {
            if (std::abs(R) < 1e-14) roots.push_back(std::sqrt(P));
        } else if (std::abs(R) > 1e-14) {
            roots.push_back(4.0 * c1 * P / R);
        }
    } else {
        const double a = 4.0 * c2, b = R, c = -4.0 * c1 * P;
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
            if (std::abs(a) > 0.0) roots.push_back(q / a);
            if (std::abs(q) > 0.0) roots.push_back(c / q);
        }
    }
    std::vector<std::array<double, 2>> out;
    for (double Y : roots) {
        if (!(Y > 0.0) || !std::isfinite(Y)) continue;
        const double z2 = -std::log(Y);
        const double z1 = sum - z2;
        bool dup = false;
        for (const auto& z : out) dup = dup || std::abs(z[1] - z2) < 1e-12;
        if (!dup) out.push_back({z1, z2});
    }
    // Prefer the balanced pair when two roots exist.
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) {
        return std::abs(a[0] - a[1]) < std::abs(b[0] - b[1]);
    });
    return out;
}

// Leading-order start data: gap scales from the seed system, phases at their
// central values, force coefficients loaded with the first vertical
// correction, and the horizontal coefficients balancing the layer forces.
inline UnknownVector seed_unknowns(const Configuration& cfg, double epsilon,
                                   std::vector<std::string>* diagnostics = nullptr) {
    UnknownVector u;
    const std::size_t slots = static_cast<std::size_t>(cfg.n + 1);
    for (int si = 0; si < 2; ++si) {
        const std::size_t s = static_cast<std::size_t>(si);
        u.alpha[s].assign(slots, 0.0);
        u.beta[s].assign(slots, 0.0);
        u.gamma[s].assign(slots, cfg.mode == Mode::DPMS ? 1.0 : 0.0);
        u.zeta[s].assign(slots, 0.0);
        u.psi[s].assign(slots, 0.0);
    }
    u.p_plus.assign(static_cast<std::size_t>(cfg.n), central_p(cfg.theta, +1));
    u.Lambda1 = cfg.Lambda1;
    u.Lambda2 = cfg.Lambda2;

    double zetac[3] = {0.0, 0.0, 0.0};  // indexed by direction class
    if (cfg.interior_nodes() >= 1) {
        if (cfg.mode == Mode::TPMS) {
            const auto pairs = seed_zeta_pairs(cfg);
            if (pairs.empty()) {
                if (diagnostics)
                    diagnostics->push_back(
                        "NoZetaSolution: the gap-scale system has no positive real solution; "
                        "seeding from zeta = 0");
            } else {
                zetac[1] = pairs.front()[0];
                zetac[2] = pairs.front()[1];
            }
        } else {
            // Each interior node of a free-boundary stack carries the same
            // local cycle-closure constant.
            zetac[1] = zetac[2] = -2.0 * std::log(std::sin(cfg.theta) * std::cos(cfg.theta));
        }
    }

    const double eps2 = epsilon * epsilon;
    const double lmax = cfg.ell_max();
    std::array<std::array<double, 3>, 2> class_alpha{};  // [side][class]
    for (int si = 0; si < 2; ++si) {
        const int s = side_sign(si);
        for (int k = 1; k <= cfg.interior_nodes(); ++k) {
            const int cls = cfg.direction_class(k);
            const double psik = cfg.psi_of(k);
            const double tmag = std::exp(-(cfg.ell_of(k) + eps2 * zetac[cls]) / eps2);
            u.zeta[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)] = zetac[cls];
            // The crossing winding is read from arg(-t) in (-pi, pi]; keep the
            // seeded phase inside that branch.
            double phase = s * psik;
            if (phase <= -pi + 1e-9) phase += 2.0 * pi;
            u.psi[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)] = phase;
            u.alpha[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)] =
                4.0 * std::sin(psik) * tmag;
            class_alpha[static_cast<std::size_t>(si)][static_cast<std::size_t>(cls)] =
                4.0 * std::sin(psik) * tmag;
        }
        for (int k = first_node_slot(cfg); k <= cfg.n; ++k) {
            double g = 1.0;
            if (cfg.node_opened(k) && cfg.interior_nodes() >= 1 && k >= 1 &&
                k <= cfg.interior_nodes()) {
                const int cls = cfg.direction_class(k);
                const double tmag = std::exp(-(cfg.ell_of(k) + eps2 * zetac[cls]) / eps2);
                double K = 4.0 * std::cos(cfg.psi_of(k));
                if (std::abs(cfg.ell_of(k) - lmax) <= 1e-12)
                    K += (cls == 1 ? cfg.Lambda1 : cfg.Lambda2) * std::exp(zetac[cls]);
                g = 1.0 - K * tmag;
            }
            u.gamma[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)] = g;
        }
        // Horizontal balance of the class forces: beta1 T1p - beta2 T2p equals
        // alpha2 T2 - alpha1 T1, solved in closed form.
        if (cfg.mode == Mode::TPMS && cfg.interior_nodes() >= 2) {
            const double a1 = class_alpha[static_cast<std::size_t>(si)][1];
            const double a2 = class_alpha[static_cast<std::size_t>(si)][2];
            const double t2 = 2.0 * cfg.theta;
            const double b1 = a1 / std::tan(t2) + a2 / std::sin(t2);
            const double b2 = -a2 / std::tan(t2) - a1 / std::sin(t2);
            for (int k = 1; k <= cfg.n; ++k)
                u.beta[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)] =
                    cfg.direction_class(k) == 1 ? b1 : b2;
        }
    }
    if (cfg.mode == Mode::TPMS)
        for (int si = 0; si < 2; ++si) {
            u.alpha[static_cast<std::size_t>(si)][0] = 0.0;
            u.beta[static_cast<std::size_t>(si)][0] = 0.0;
            u.gamma[static_cast<std::size_t>(si)][0] = 0.0;
        }
    return u;
}

// ---------------------------------------------------------------------------
// Residual assembly

struct BlockNorms {
    double balance = 0.0;
    double B = 0.0;
    double Bk = 0.0;
    double conform1 = 0.0;
    double conform2 = 0.0;
    double total = 0.0;
};

struct InnerCache {
    std::vector<Eigen::Matrix2d> J;
    std::vector<bool> valid;
    void reset(std::size_t n) {
        J.assign(n, Eigen::Matrix2d::Zero());
        valid.assign(n, false);
    }
};

struct Assembly {
    Eigen::VectorXd residual;
    BlockNorms norms;
    RegularForms forms;
    // Row ranges inside residual, in order: balance, Bk, B, conform1.
    int balance_rows = 0, Bk_rows = 0, B_rows = 0, conform1_rows = 0;
};

// Neck conformality integral measured from the lower side of the boundary node
// below sphere k (mean of Q/Phi_3 over the circle |v| = delta/1.5).
inline cplx conform_residual_A_lower(const RegularForms& F, int s, int k, int nsamp = 512) {
    const NodedSurface& surf = F.surface;
    const cplx a = surf.puncture_q(s, k);
    const cplx w0 = chart_parity(k) * I;
    const double R = surf.delta / 1.5;
    cplx acc = 0.0;
    for (int m = 0; m < nsamp; ++m) {
        const cplx v = std::polar(R, 2.0 * pi * m / nsamp);
        const cplx z = a * (w0 + v) / (w0 - v);
        const cvec3 w = form_value(F, k, z);
        if (std::abs(w[2]) < 1e-8) throw ContourError("contour meets a zero of the vertical component");
        const cplx q = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
        const cplx dzdv = 2.0 * a * w0 / ((w0 - v) * (w0 - v));
        acc += q / w[2] * dzdv * v;
    }
    return acc / static_cast<double>(nsamp);
}

namespace detail {

inline rvec3 node_f(const Configuration& cfg, const UnknownVector& u, int si, int k) {
    const rvec2 T = cfg.T_of(k);
    const std::size_t s = static_cast<std::size_t>(si);
    const std::size_t ks = static_cast<std::size_t>(k);
    const double a = u.alpha[s][ks], b = u.beta[s][ks], g = u.gamma[s][ks];
    return {a * T[0] - b * T[1], a * T[1] + b * T[0], g};
}

// Inner stage: move the upper punctures until the residue of Q/Phi_3 at every
// vertical-component zero near the sphere centers vanishes. Chord iteration
// with per-sphere cached 2x2 Jacobians.
inline RegularForms solve_punctures(NodedSurface& surf, const FormSpec& spec, UnknownVector& u,
                                    InnerCache& cache, double tol = 1e-12, int max_sweeps = 14) {
    const int n = surf.n();
    if (cache.J.size() != static_cast<std::size_t>(n)) cache.reset(static_cast<std::size_t>(n));
    RegularForms F = solve_forms(surf, spec);
    std::vector<cplx> E(static_cast<std::size_t>(n));
    for (int sweep = 0; sweep <= max_sweeps; ++sweep) {
        double worst = 0.0;
        for (int k = 1; k <= n; ++k) {
            E[static_cast<std::size_t>(k - 1)] = conform_residual_zero(F, k);
            worst = std::max(worst, std::abs(E[static_cast<std::size_t>(k - 1)]));
        }
        if (worst < tol) return F;
        if (sweep == max_sweeps) break;
        if (sweep >= 4) cache.valid.assign(static_cast<std::size_t>(n), false);
        for (int k = 1; k <= n; ++k) {
            const std::size_t ks = static_cast<std::size_t>(k - 1);
            if (!cache.valid[ks]) {
                const double h = 1e-6;
                Eigen::Matrix2d J;
                for (int dir = 0; dir < 2; ++dir) {
                    NodedSurface probe = surf;
                    probe.p[0][ks] = u.p_plus[ks] + (dir == 0 ? cplx(h, 0.0) : cplx(0.0, h));
                    const RegularForms Fp = solve_forms(probe, spec);
                    const cplx Ep = conform_residual_zero(Fp, k);
                    J(0, dir) = (Ep.real() - E[ks].real()) / h;
                    J(1, dir) = (Ep.imag() - E[ks].imag()) / h;
                }
                if (std::abs(J.determinant()) < 1e-14)
                    throw ConvergenceError("puncture adjustment met a degenerate response on sphere " +
                                           std::to_string(k));
                cache.J[ks] = J;
                cache.valid[ks] = true;
            }
            const Eigen::Vector2d rhs(-E[ks].real(), -E[ks].imag());
            const Eigen::Vector2d dp = cache.J[ks].partialPivLu().solve(rhs);
            u.p_plus[ks] += cplx(dp[0], dp[1]);
        }
        surf.p[0] = u.p_plus;
        validate_disks(surf);
        F = solve_forms(surf, spec);
    }
    throw ConvergenceError("puncture adjustment did not reach the conformality tolerance");
}

} // namespace detail

inline Assembly assemble_residual(const Configuration& cfg, double epsilon, UnknownVector& u,
                                  InnerCache* cache = nullptr) {
    detail::require_shape(cfg, u);
    const int n = cfg.n;
    const int ninner = cfg.interior_nodes();

    // Unopened boundary nodes: alpha = 0 and hypot(beta, gamma) = 1 hold
    // exactly, so gamma is derived from the free boundary tilt beta.
    if (cfg.mode == Mode::DPMS)
        for (int si = 0; si < 2; ++si)
            for (int k : {0, n}) {
                const double b = u.beta[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)];
                if (std::abs(b) >= 1.0)
                    throw RangeError("boundary tilt " + std::to_string(b) +
                                     " at node " + std::to_string(k) + " exceeds the unit scale");
                u.gamma[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)] =
                    std::sqrt(1.0 - b * b);
            }

    PerNode zeta_ov, psi_ov;
    for (int si = 0; si < 2; ++si) {
        auto& zr = zeta_ov[static_cast<std::size_t>(si)];
        auto& pr = psi_ov[static_cast<std::size_t>(si)];
        zr.assign(static_cast<std::size_t>(n + 1), 0.0);
        pr.assign(static_cast<std::size_t>(n + 1), 0.0);
        for (int k = 1; k <= ninner; ++k) {
            zr[static_cast<std::size_t>(k)] = u.zeta[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)];
            pr[static_cast<std::size_t>(k)] = u.psi[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)];
        }
    }
    NodedSurface surf = build(cfg, epsilon, zeta_ov, psi_ov);
    surf.p[0] = u.p_plus;
    validate_disks(surf);

    FormSpec spec = central_spec(cfg, epsilon, u.Lambda1, u.Lambda2);
    const int k0 = first_node_slot(cfg);
    for (int si = 0; si < 2; ++si)
        for (int k = k0; k <= n; ++k)
            spec.f[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)] =
                detail::node_f(cfg, u, si, k);

    // Force balance: the per-node residue sums must agree along the stack.
    // The raw differences are the residual; the solved forms are built from
    // the projection onto equal sums.
    std::vector<rvec3> S(static_cast<std::size_t>(n + 1), rvec3{0.0, 0.0, 0.0});
    rvec3 mean = {0.0, 0.0, 0.0};
    for (int k = k0; k <= n; ++k) {
        S[static_cast<std::size_t>(k)] =
            spec.f[0][static_cast<std::size_t>(k)] + spec.f[1][static_cast<std::size_t>(k)];
        mean += S[static_cast<std::size_t>(k)];
    }
    mean = (1.0 / static_cast<double>(n - k0 + 1)) * mean;

    std::vector<double> balance;
    for (int k = k0 + 1; k <= n; ++k) {
        const rvec3 d = S[static_cast<std::size_t>(k)] - S[static_cast<std::size_t>(k - 1)];
        balance.insert(balance.end(), {d[0], d[1], d[2]});
    }
    for (int si = 0; si < 2; ++si)
        for (int k = k0; k <= n; ++k) {
            rvec3& f = spec.f[static_cast<std::size_t>(si)][static_cast<std::size_t>(k)];
            f = f + (-0.5) * (S[static_cast<std::size_t>(k)] - mean);
        }
    if (cfg.mode == Mode::TPMS)
        for (int si = 0; si < 2; ++si)
            spec.f[static_cast<std::size_t>(si)][0] = spec.f[static_cast<std::size_t>(si)][static_cast<std::size_t>(n)];

    InnerCache local;
    InnerCache& icache = cache ? *cache : local;
    RegularForms F = detail::solve_punctures(surf, spec, u, icache);

    double conform2 = 0.0;
    for (int k = 1; k <= n; ++k)
        conform2 = std::max(conform2, std::abs(conform_residual_zero(F, k)));

    // Node cycle closure: the real parts of the upper and lower crossings of
    // each opened node must agree.
    std::vector<double> bk;
    std::vector<cvec3> raw_plus(static_cast<std::size_t>(ninner + 1));
    for (int k = 1; k <= ninner; ++k) {
        const BPeriod bp = b_period(F, +1, k);
        const BPeriod bm = b_period(F, -1, k);
        raw_plus[static_cast<std::size_t>(k)] = bp.raw;
        const rvec3 d = real_part(bp.raw) - real_part(bm.raw);
        bk.insert(bk.end(), {d[0], d[1], d[2]});
    }

    // Lattice cycle closure (cyclic stacks): the concatenated upper crossings
    // must realize the third lattice vector. The annulus legs wind by pi per
    // node, hence the n/2 turns added to each class phase sum.
    std::vector<double> bcycle;
    if (cfg.mode == Mode::TPMS) {
        rvec3 total = {0.0, 0.0, 0.0};
        for (int k = 1; k <= n; ++k) total += real_part(raw_plus[static_cast<std::size_t>(k)]);
        const double tau = cfg.tau_max(epsilon);
        const rvec2 T1 = cfg.T1(), T2 = cfg.T2();
        const double w1 = (cfg.Psi1 + 0.5 * n * pi) * (1.0 + u.Lambda1 * tau);
        const double w2 = (cfg.Psi2 + 0.5 * n * pi) * (1.0 + u.Lambda2 * tau);
        bcycle = {total[0] - (w1 * T1[0] + w2 * T2[0]),
                  total[1] - (w1 * T1[1] + w2 * T2[1]),
                  -total[2] - 1.0 / (epsilon * epsilon)};
    }

    // Neck conformality at the opened nodes. At an unopened boundary node the
    // crossing integral reduces to an exact residue that vanishes under the
    // boundary pins, so only interior nodes contribute rows in DPMS mode.
    std::vector<double> conf;
    const int kconf_hi = cfg.mode == Mode::TPMS ? n : ninner;
    for (int si = 0; si < 2; ++si) {
        const int s = side_sign(si);
        for (int k = 1; k <= kconf_hi; ++k) {
            const cplx e = conform_residual_A(F, s, k);
            conf.insert(conf.end(), {e.real(), e.imag()});
        }
    }

    Assembly out;
    out.balance_rows = static_cast<int>(balance.size());
    out.Bk_rows = static_cast<int>(bk.size());
    out.B_rows = static_cast<int>(bcycle.size());
    out.conform1_rows = static_cast<int>(conf.size());
    out.residual.resize(out.balance_rows + out.Bk_rows + out.B_rows + out.conform1_rows);
    int i = 0;
    auto push = [&](const std::vector<double>& v, double& normslot) {
        for (double x : v) {
            out.residual[i++] = x;
            normslot = std::max(normslot, std::abs(x));
        }
    };
    push(balance, out.norms.balance);
    push(bk, out.norms.Bk);
    push(bcycle, out.norms.B);
    push(conf, out.norms.conform1);
    out.norms.conform2 = conform2;
    out.norms.total = out.residual.size() ? out.residual.cwiseAbs().maxCoeff() : 0.0;
    out.forms = std::move(F);
    return out;
}

// ---------------------------------------------------------------------------
// Newton driver

struct IterationRecord {
    int iteration = 0;
    double residual_inf = 0.0;
    BlockNorms blocks;
    double step_scale = 0.0;
};

struct SolveReport {
    bool converged = false;
    int iterations = 0;
    double epsilon = 0.0;
    Configuration config;
    BlockNorms residual_norms;
    UnknownVector solution;
    std::vector<std::string> diagnostics;
    std::vector<IterationRecord> trace;
};

// Thrown when the iteration budget or the line search is exhausted; carries
// the best state reached so the caller can inspect diagnostics and norms.
struct MaxIterFailure : MaxIterError {
    SolveReport report;
    MaxIterFailure(const std::string& m, SolveReport r)
        : MaxIterError(m), report(std::move(r)) {}
};

struct SolveOptions {
    double tol = 1e-10;
    int max_iterations = 60;
    const UnknownVector* warm = nullptr;
    const UnknownMask* mask = nullptr;
};

inline SolveReport newton_solve(const Configuration& cfg, double epsilon,
                                const SolveOptions& opt = {}) {
    SolveReport rep;
    rep.epsilon = epsilon;
    rep.config = cfg;
    UnknownVector u = opt.warm ? *opt.warm : seed_unknowns(cfg, epsilon, &rep.diagnostics);
    if (opt.warm) seed_unknowns(cfg, epsilon, &rep.diagnostics);  // keep seed diagnostics visible
    const UnknownMask mask = opt.mask ? *opt.mask : default_mask(cfg);

    InnerCache cache;
    Assembly base;
    try {
        base = assemble_residual(cfg, epsilon, u, &cache);
    } catch (const Error& e) {
        rep.converged = false;
        rep.solution = u;
        std::string msg = "initial residual evaluation failed (" + std::string(e.what()) + ")";
        for (const auto& d : rep.diagnostics) msg += "; " + d;
        throw MaxIterFailure(msg, rep);
    }
    const int dim = packed_size(cfg, mask);
    const int rows = static_cast<int>(base.residual.size());
    // Free-boundary stacks run rectangular: over-determined but consistent
    // with the default pins, or with a one-unknown surplus when a custom mask
    // frees a family coordinate (the step then picks the member nearest the
    // start). More surplus than that leaves the system under-determined.
    if (dim > rows + 1)
        throw DomainError("mask selects " + std::to_string(dim) + " unknowns but the system has " +
                          std::to_string(rows) + " equations");

    auto record = [&rep](int it, const Assembly& a, double step) {
        IterationRecord r;
        r.iteration = it;
        r.residual_inf = a.norms.total;
        r.blocks = a.norms;
        r.step_scale = step;
        rep.trace.push_back(r);
    };
    record(0, base, 0.0);

    auto fail = [&](const std::string& why) -> MaxIterFailure {
        rep.converged = false;
        rep.residual_norms = base.norms;
        rep.solution = u;
        std::string msg = why;
        for (const auto& d : rep.diagnostics) msg += "; " + d;
        return MaxIterFailure(msg, rep);
    };

    double mu = 1e-4;  // damping for the rectangular path, adapted across iterations
    for (int it = 1; it <= opt.max_iterations; ++it) {
        if (base.norms.total < opt.tol) break;

        Eigen::VectorXd u0 = pack(cfg, u, mask);
        Eigen::MatrixXd J(rows, dim);
        try {
            for (int j = 0; j < dim; ++j) {
                const double h = 1e-7 * std::max(1.0, std::abs(u0[j]));
                Eigen::VectorXd up = u0;
                up[j] += h;
                UnknownVector utrial = u;
                unpack(cfg, up, mask, utrial);
                Assembly atrial = assemble_residual(cfg, epsilon, utrial, &cache);
                J.col(j) = (atrial.residual - base.residual) / h;
            }
        } catch (const Error& e) {
            throw fail("residual linearization failed at iteration " + std::to_string(it) + " (" +
                       e.what() + ")");
        }

        bool accepted = false;
        double scale = 0.0;
        if (rows == dim) {
            Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
            lu.setThreshold(1e-10);
            if (lu.rank() < dim) {
                int kmin = 1;
                double kval = std::numeric_limits<double>::infinity();
                if (cfg.interior_nodes() >= 1) {
                    const auto K = compute_K(cfg, 0.0, 0.0);
                    for (std::size_t q = 0; q < K.size(); ++q)
                        if (std::abs(K[q]) < kval) {
                            kval = std::abs(K[q]);
                            kmin = static_cast<int>(q) + 1;
                        }
                }
                throw SingularJacobianError(
                    "residual Jacobian is rank deficient (rank " + std::to_string(lu.rank()) +
                    " of " + std::to_string(dim) + "); smallest force coefficient |K| = " +
                    std::to_string(kval) + " at node " + std::to_string(kmin));
            }
            const Eigen::VectorXd step = lu.solve(-base.residual);
            double lambda = 1.0;
            while (lambda >= std::ldexp(1.0, -20)) {
                UnknownVector utrial = u;
                unpack(cfg, u0 + lambda * step, mask, utrial);
                try {
                    Assembly atrial = assemble_residual(cfg, epsilon, utrial, &cache);
                    if (atrial.norms.total < base.norms.total * (1.0 - 1e-4 * lambda) ||
                        atrial.norms.total < opt.tol) {
                        u = std::move(utrial);
                        base = std::move(atrial);
                        accepted = true;
                        scale = lambda;
                        break;
                    }
                } catch (const Error&) {
                    // out-of-range trial state; shorten the step
                }
                lambda *= 0.5;
            }
            if (!accepted) throw fail("line search stalled at iteration " + std::to_string(it));
        } else {
            // One more unknown than equations: damped least-squares step. The
            // damping also carries the walk through the rank dip at the
            // symmetric seed point.
            const Eigen::MatrixXd JtJ = J.transpose() * J;
            const Eigen::VectorXd g = J.transpose() * base.residual;
            for (int tries = 0; tries < 16 && !accepted; ++tries) {
                Eigen::MatrixXd A = JtJ;
                A.diagonal() += mu * JtJ.diagonal().cwiseMax(1e-12);
                const Eigen::VectorXd step = A.ldlt().solve(-g);
                UnknownVector utrial = u;
                unpack(cfg, u0 + step, mask, utrial);
                try {
                    Assembly atrial = assemble_residual(cfg, epsilon, utrial, &cache);
                    if (atrial.norms.total < base.norms.total || atrial.norms.total < opt.tol) {
                        u = std::move(utrial);
                        base = std::move(atrial);
                        accepted = true;
                        scale = 1.0 / (1.0 + mu);
                        mu = std::max(mu / 3.0, 1e-12);
                        break;
                    }
                } catch (const Error&) {
                    // out-of-range trial state; increase damping
                }
                mu *= 8.0;
            }
            if (!accepted) throw fail("damped step search stalled at iteration " + std::to_string(it));
        }
        rep.iterations = it;
        record(it, base, scale);
        if (base.norms.total < opt.tol) break;
    }

    rep.residual_norms = base.norms;
    rep.solution = u;
    rep.converged = base.norms.total < opt.tol;
    if (!rep.converged) throw fail("no convergence within the iteration budget");
    return rep;
}

// ---------------------------------------------------------------------------
// Continuation and diagnostics

inline std::vector<SolveReport> continuation(const Configuration& cfg,
                                             const std::vector<double>& schedule,
                                             const SolveOptions& opt = {}) {
    if (schedule.empty()) throw DomainError("continuation needs at least one epsilon");
    std::vector<SolveReport> out;
    UnknownVector warm;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        SolveOptions o = opt;
        UnknownVector rescaled;
        if (i > 0) {
            rescaled = warm;
            const double e2n = schedule[i] * schedule[i];
            const double e2o = schedule[i - 1] * schedule[i - 1];
            for (int si = 0; si < 2; ++si)
                for (int k = 1; k <= cfg.interior_nodes(); ++k) {
                    const std::size_t s = static_cast<std::size_t>(si);
                    const std::size_t ks = static_cast<std::size_t>(k);
                    const double ratio = std::exp(-cfg.ell_of(k) * (1.0 / e2n - 1.0 / e2o));
                    rescaled.alpha[s][ks] *= ratio;
                    rescaled.beta[s][ks] *= ratio;
                    rescaled.gamma[s][ks] = 1.0 + (rescaled.gamma[s][ks] - 1.0) * ratio;
                }
            o.warm = &rescaled;
        }
        out.push_back(newton_solve(cfg, schedule[i], o));
        warm = out.back().solution;
    }
    return out;
}

// Scale-free convergence indicators of one solved stack.
struct TrendRecord {
    double epsilon = 0.0;
    std::vector<double> alpha_over_tau;          // per interior node, upper side
    std::vector<double> rho_minus_one_over_tau;  // per interior node, upper side
    std::vector<double> psi_plus;                // per interior node, upper side
};

inline TrendRecord trend_record(const SolveReport& rep) {
    TrendRecord t;
    t.epsilon = rep.epsilon;
    const Configuration& cfg = rep.config;
    const double eps2 = rep.epsilon * rep.epsilon;
    for (int k = 1; k <= cfg.interior_nodes(); ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        const double tau = std::exp(-cfg.ell_of(k) / eps2);
        const double rho = std::hypot(rep.solution.beta[0][ks], rep.solution.gamma[0][ks]);
        t.alpha_over_tau.push_back(rep.solution.alpha[0][ks] / tau);
        t.rho_minus_one_over_tau.push_back((rho - 1.0) / tau);
        t.psi_plus.push_back(rep.solution.psi[0][ks]);
    }
    return t;
}

// Defects of the lower side against the conjugated upper side.
struct SymmetryReport {
    double f_defect = 0.0;
    double t_defect = 0.0;
    double zeta_defect = 0.0;
    double psi_defect = 0.0;
    double beta_defect = 0.0;
    double max_defect() const {
        return std::max({f_defect, t_defect, zeta_defect, psi_defect, beta_defect});
    }
};

inline SymmetryReport symmetry_check(const SolveReport& rep) {
    if (!rep.converged) throw NotConvergedError("symmetry defects need a converged solution");
    const Configuration& cfg = rep.config;
    const UnknownVector& u = rep.solution;
    SymmetryReport out;
    for (int k = first_node_slot(cfg); k <= cfg.n; ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        out.f_defect = std::max({out.f_defect, std::abs(u.alpha[0][ks] - u.alpha[1][ks]),
                                 std::abs(u.gamma[0][ks] - u.gamma[1][ks])});
        out.beta_defect = std::max(out.beta_defect, std::abs(u.beta[0][ks] - u.beta[1][ks]));
    }
    const double eps2 = rep.epsilon * rep.epsilon;
    for (int k = 1; k <= cfg.interior_nodes(); ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        out.zeta_defect = std::max(out.zeta_defect, std::abs(u.zeta[0][ks] - u.zeta[1][ks]));
        out.psi_defect = std::max(out.psi_defect, std::abs(u.psi[0][ks] + u.psi[1][ks]));
        const cplx tp = -std::polar(std::exp(-(cfg.ell_of(k) + eps2 * u.zeta[0][ks]) / eps2),
                                    u.psi[0][ks]);
        const cplx tm = -std::polar(std::exp(-(cfg.ell_of(k) + eps2 * u.zeta[1][ks]) / eps2),
                                    u.psi[1][ks]);
        out.t_defect = std::max(out.t_defect, std::abs(tm - std::conj(tp)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Conformal matching at a single node with a prescribed opening parameter.
// Used to measure the response of the matched coefficients to the opening.

struct AlphaRho {
    double alpha = 0.0;
    double rho = 1.0;
};

// Solves the neck conformality integral at node (s, k) for (alpha, rho) with
// every other node held at central data. The lattice weights couple through
// tau = |t| exp(zeta_ref), the physical scale of the prescribed opening.
inline AlphaRho conformal_match(const Configuration& cfg, double epsilon, int s, int k,
                                const cplx& t_value, double zeta_ref = 0.0,
                                AlphaRho start = {0.0, 1.0}) {
    if (cfg.mode != Mode::TPMS) throw DomainError("conformal matching probe expects a cyclic stack");
    const int n = cfg.n;
    const double eps2 = epsilon * epsilon;
    const double mag = std::abs(t_value);
    if (!(mag > 0.0)) throw DomainError("the prescribed opening parameter must be nonzero");

    PerNode zeta_ov, psi_ov;
    for (int si = 0; si < 2; ++si) {
        zeta_ov[static_cast<std::size_t>(si)].assign(static_cast<std::size_t>(n + 1), 0.0);
        psi_ov[static_cast<std::size_t>(si)].assign(static_cast<std::size_t>(n + 1), 0.0);
        for (int j = 1; j <= n; ++j)
            psi_ov[static_cast<std::size_t>(si)][static_cast<std::size_t>(j)] =
                side_sign(si) * cfg.psi_of(j);
    }
    const std::size_t si = static_cast<std::size_t>(side_index(s));
    zeta_ov[si][static_cast<std::size_t>(k)] = (-eps2 * std::log(mag) - cfg.ell_of(k)) / eps2;
    psi_ov[si][static_cast<std::size_t>(k)] = std::arg(-t_value);

    NodedSurface surf = build(cfg, epsilon, zeta_ov, psi_ov);

    // Physical lattice coupling of the probe: the deformation scale follows
    // the prescribed |t|.
    const double tau_eff = mag * std::exp(zeta_ref);
    FormSpec spec;
    for (int sidx = 0; sidx < 2; ++sidx) {
        const double sgn = side_sign(sidx);
        spec.f[static_cast<std::size_t>(sidx)].assign(static_cast<std::size_t>(n + 1),
                                                      rvec3{0.0, 0.0, 1.0});
        spec.x[static_cast<std::size_t>(sidx)].resize(static_cast<std::size_t>(n + 1));
        for (int j = 0; j <= n; ++j) {
            const rvec2 T = cfg.T_of(j);
            const double lam = cfg.Lambda_of(j);
            const double scale = sgn * (1.0 + lam * tau_eff);
            spec.x[static_cast<std::size_t>(sidx)][static_cast<std::size_t>(j)] =
                rvec3{scale * T[0], scale * T[1], 0.0};
        }
    }

    const rvec2 T = cfg.T_of(k);
    UnknownVector u;  // only p_plus participates here
    u = seed_unknowns(cfg, epsilon);
    InnerCache cache;

    AlphaRho ar = start;
    auto eval = [&](const AlphaRho& x) -> cplx {
        FormSpec sp = spec;
        sp.f[si][static_cast<std::size_t>(k)] = rvec3{x.alpha * T[0], x.alpha * T[1], x.rho};
        const std::size_t so = 1 - si;
        sp.f[so][static_cast<std::size_t>(k)] =
            rvec3{-x.alpha * T[0], -x.alpha * T[1], 2.0 - x.rho};
        for (int sidx = 0; sidx < 2; ++sidx)
            sp.f[static_cast<std::size_t>(sidx)][0] =
                sp.f[static_cast<std::size_t>(sidx)][static_cast<std::size_t>(n)];
        NodedSurface sloc = surf;
        sloc.p[0] = u.p_plus;
        RegularForms F = detail::solve_punctures(sloc, sp, u, cache);
        return conform_residual_A(F, s, k);
    };

    cplx E = eval(ar);
    for (int it = 0; it < 24; ++it) {
        if (std::abs(E) < 1e-13) return ar;
        const double h = 1e-7;
        const cplx Ea = eval({ar.alpha + h, ar.rho});
        const cplx Er = eval({ar.alpha, ar.rho + h});
        Eigen::Matrix2d J;
        J << (Ea.real() - E.real()) / h, (Er.real() - E.real()) / h,
            (Ea.imag() - E.imag()) / h, (Er.imag() - E.imag()) / h;
        if (std::abs(J.determinant()) < 1e-14)
            throw ConvergenceError("conformal matching met a degenerate response");
        const Eigen::Vector2d d = J.partialPivLu().solve(Eigen::Vector2d(-E.real(), -E.imag()));
        ar.alpha += d[0];
        ar.rho += d[1];
        E = eval(ar);
    }
    if (std::abs(E) > 1e-10)
        throw ConvergenceError("conformal matching did not reach tolerance");
    return ar;
}

} // namespace scherkstack
