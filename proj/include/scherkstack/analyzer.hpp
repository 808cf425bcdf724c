#pragma once

#include <array>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "scherkstack/config.hpp"
#include "scherkstack/errors.hpp"
#include "scherkstack/util.hpp"

namespace scherkstack {

// Leading-order admissibility analysis of a stack configuration. Every check
// here is closed-form; no period problem is solved.

enum class SurfaceClass { Scherk, KMR, Meeks, TriangularSpecial, Obstructed };

inline const char* surface_class_name(SurfaceClass c) {
    switch (c) {
        case SurfaceClass::Scherk: return "Scherk";
        case SurfaceClass::KMR: return "KMR";
        case SurfaceClass::Meeks: return "Meeks";
        case SurfaceClass::TriangularSpecial: return "TriangularSpecial";
        case SurfaceClass::Obstructed: return "Obstructed";
    }
    return "Obstructed";
}

enum class LatticeVerdict { TwoDirection, Triangular, Inconsistent };

inline const char* lattice_verdict_name(LatticeVerdict v) {
    switch (v) {
        case LatticeVerdict::TwoDirection: return "TwoDirection";
        case LatticeVerdict::Triangular: return "Triangular";
        case LatticeVerdict::Inconsistent: return "Inconsistent";
    }
    return "Inconsistent";
}

// Verdict invariant: cls == Obstructed exactly when reasons is nonempty.
// zeta_solutions lists every admissible gap-scale pair (zeta1, zeta2); empty
// means the gap-scale system has no positive solution.
struct Verdict {
    SurfaceClass cls = SurfaceClass::Obstructed;
    std::vector<std::string> reasons;
    std::vector<std::array<double, 2>> zeta_solutions;
    std::vector<double> K;
};

// Flags every interior node whose gap length or phase differs from the value
// carried by its direction class representative (nodes 1 and 2). Exact input
// data, so the comparison tolerance is 1e-12.
inline std::vector<std::string> parity_check(const Configuration& cfg) {
    std::vector<std::string> findings;
    const int m = cfg.interior_nodes();
    if (m < 3) return findings;
    for (int k = 3; k <= m; ++k) {
        const int rep = cfg.direction_class(k);
        if (std::abs(cfg.ell_of(k) - cfg.ell_of(rep)) > 1e-12)
            findings.push_back("ParityGap: node " + std::to_string(k) +
                               " gap length differs from node " + std::to_string(rep));
        if (std::abs(cfg.psi_of(k) - cfg.psi_of(rep)) > 1e-12)
            findings.push_back("ParityPhase: node " + std::to_string(k) +
                               " phase differs from node " + std::to_string(rep));
    }
    return findings;
}

// Vertical force coefficient per interior node. The lattice deformation term
// contributes only at nodes whose gap attains the maximum.
inline std::vector<double> compute_K(const Configuration& cfg, double zeta1, double zeta2) {
    std::vector<double> K;
    const double lmax = cfg.ell_max();
    for (int k = 1; k <= cfg.interior_nodes(); ++k) {
        double v = 4.0 * std::cos(cfg.psi_of(k));
        if (std::abs(cfg.ell_of(k) - lmax) <= 1e-12)
            v += cfg.Lambda_of(k) * std::exp(cfg.direction_class(k) == 1 ? zeta1 : zeta2);
        K.push_back(v);
    }
    return K;
}

// Constant-gap necessity. Only applicable when every K is nonzero; a vanishing
// K leaves the vertical balance inconclusive at leading order.
inline std::vector<std::string> constant_ell_check(const Configuration& cfg,
                                                   const std::vector<double>& K) {
    std::vector<std::string> findings;
    for (std::size_t i = 0; i < K.size(); ++i) {
        if (std::abs(K[i]) < 1e-12) {
            findings.push_back("DegenerateK: force coefficient vanishes at node " +
                               std::to_string(i + 1) + "; constant-gap necessity inconclusive");
            return findings;
        }
    }
    const double lmax = cfg.ell_max();
    for (int k = 1; k <= cfg.interior_nodes(); ++k) {
        if (std::abs(cfg.ell_of(k) - lmax) > 1e-12) {
            findings.push_back(
                "NonConstantGaps: gap lengths are not constant and every force coefficient is "
                "nonzero, so the vertical balance cannot close");
            return findings;
        }
    }
    return findings;
}

// Gap-scale system for a two-direction stack:
//   zeta1 + zeta2 = 4 log(sin(theta) cos(theta))
//   4 (cos(psi1) e^{-zeta1} - cos(psi2) e^{-zeta2}) + Lambda1 - Lambda2 = 0.
// Substituting the first equation turns the second into a quadratic in
// e^{-zeta2}; each positive real root gives one solution pair. An empty result
// is a valid outcome, not an error.
inline std::vector<std::array<double, 2>> solve_zeta(const Configuration& cfg) {
    const double c1 = std::cos(cfg.psi_of(1));
    const double c2 = std::cos(cfg.psi_of(2));
    const double sc = std::sin(cfg.theta) * std::cos(cfg.theta);
    const double sum = 4.0 * std::log(sc);
    const double P = std::exp(-sum);
    const double R = cfg.Lambda2 - cfg.Lambda1;

    std::vector<double> roots;  // candidate values of Y = e^{-zeta2}
    if (std::abs(c2) < 1e-14) {
        if (std::abs(c1) < 1e-14) {
            if (std::abs(R) < 1e-14) roots.push_back(std::sqrt(P));  // underdetermined; symmetric pick
        } else if (std::abs(R) > 1e-14) {
            roots.push_back(4.0 * c1 * P / R);
        }
    } else {
        // 4 c2 Y^2 + R Y - 4 c1 P = 0
        const double a = 4.0 * c2, b = R, c = -4.0 * c1 * P;
        const double disc = b * b - 4.0 * a * c;
        if (disc >= 0.0) {
            const double sq = std::sqrt(disc);
            // Citardauq form keeps the small root accurate when b dominates.
            if (std::abs(b) + sq > 0.0) {
                const double q = -0.5 * (b + (b >= 0.0 ? sq : -sq));
                if (std::abs(a) > 0.0) roots.push_back(q / a);
                if (std::abs(q) > 0.0) roots.push_back(c / q);
            }
        }
    }

    std::vector<std::array<double, 2>> out;
    for (double Y : roots) {
        if (!(Y > 0.0) || !std::isfinite(Y)) continue;
        const double zeta2 = -std::log(Y);
        const double zeta1 = sum - zeta2;
        const double resid = 4.0 * (c1 * std::exp(-zeta1) - c2 * std::exp(-zeta2)) +
                             cfg.Lambda1 - cfg.Lambda2;
        if (std::abs(resid) > 1e-9 * (1.0 + P)) continue;
        bool dup = false;
        for (const auto& z : out) dup = dup || std::abs(z[1] - zeta2) < 1e-12;
        if (!dup) out.push_back({zeta1, zeta2});
    }
    return out;
}

// Lattice analysis of an explicit direction sequence. A sequence alternating
// between two directions needs no lattice constraint. Otherwise every
// consecutive triple of pairwise distinct unit directions must satisfy
// T_{i+1} + T_{i-1} = T_i, the only integer combination compatible with equal
// cell areas and unit length; that identity forces a triangular lattice.
inline LatticeVerdict triangle_check(const std::vector<rvec2>& dirs) {
    const auto close = [](const rvec2& a, const rvec2& b) {
        return std::abs(a[0] - b[0]) <= 1e-10 && std::abs(a[1] - b[1]) <= 1e-10;
    };
    for (std::size_t i = 0; i + 1 < dirs.size(); ++i) {
        const double crossv = dirs[i][0] * dirs[i + 1][1] - dirs[i][1] * dirs[i + 1][0];
        if (std::abs(crossv) < 1e-12)
            throw DomainError("consecutive directions must not be parallel");
    }
    bool parity = true;
    for (std::size_t i = 2; i < dirs.size(); ++i) parity = parity && close(dirs[i], dirs[i - 2]);
    if (parity) return LatticeVerdict::TwoDirection;  // covers every list shorter than 3

    for (std::size_t i = 1; i + 1 < dirs.size(); ++i) {
        if (close(dirs[i + 1], dirs[i - 1])) continue;  // locally two-direction
        const rvec2 want = {dirs[i][0] - dirs[i - 1][0], dirs[i][1] - dirs[i - 1][1]};
        if (!close(dirs[i + 1], want)) return LatticeVerdict::Inconsistent;
    }
    return LatticeVerdict::Triangular;
}

// The two generator directions span a triangular lattice exactly when they
// meet at 60 or 120 degrees.
inline bool triangular_lattice(const Configuration& cfg) {
    const rvec2 a = cfg.T1(), b = cfg.T2();
    return std::abs(std::abs(a[0] * b[0] + a[1] * b[1]) - 0.5) < 1e-9;
}

inline Verdict classify(const Configuration& cfg) {
    Verdict v;
    if (cfg.mode == Mode::DPMS) {
        if (cfg.n == 1) {
            v.cls = SurfaceClass::Scherk;
        } else if (cfg.n == 2) {
            v.cls = SurfaceClass::KMR;
            v.K = compute_K(cfg, 0.0, 0.0);
        } else {
            v.cls = SurfaceClass::Obstructed;
            v.reasons.push_back(
                "FreeEndPropagation: with free boundary layers, the balance forces every node "
                "past the second to stay closed, so a stack of " + std::to_string(cfg.n) +
                " layers cannot open all its interior nodes");
        }
        return v;
    }

    v.reasons = parity_check(cfg);
    v.zeta_solutions = solve_zeta(cfg);
    const bool have_zeta = !v.zeta_solutions.empty();
    const double z1 = have_zeta ? v.zeta_solutions.front()[0] : 0.0;
    const double z2 = have_zeta ? v.zeta_solutions.front()[1] : 0.0;
    v.K = compute_K(cfg, z1, z2);
    for (auto& f : constant_ell_check(cfg, v.K)) v.reasons.push_back(f);
    if (!have_zeta)
        v.reasons.push_back(
            "NoZetaSolution: the gap-scale system has no positive real solution");

    if (v.reasons.empty()) {
        v.cls = SurfaceClass::Meeks;
    } else if (triangular_lattice(cfg)) {
        // A triangular lattice admits gluings beyond alternating two-direction
        // stacks, so the two-direction obstructions are not conclusive.
        v.cls = SurfaceClass::TriangularSpecial;
        v.reasons.clear();
    } else {
        v.cls = SurfaceClass::Obstructed;
    }
    return v;
}

inline nlohmann::json verdict_to_json(const Verdict& v) {
    nlohmann::json j;
    j["class"] = surface_class_name(v.cls);
    j["reasons"] = v.reasons;
    j["zeta_solutions"] = nlohmann::json::array();
    for (const auto& z : v.zeta_solutions) j["zeta_solutions"].push_back({z[0], z[1]});
    j["K"] = v.K;
    return j;
}

} // namespace scherkstack
