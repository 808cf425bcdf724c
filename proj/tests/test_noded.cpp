#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>

#include "scherkstack/noded.hpp"

using namespace scherkstack;

namespace {
const double th4 = pi / 4.0;

Configuration two_layer() { return Configuration(2, {0.5, 0.5}, {0.0, 0.0}, th4); }
} // namespace

TEST_CASE("configuration validation") {
    CHECK_THROWS_AS(Configuration(3, {0.3, 0.3, 0.4}, {0, 0, 0}, th4), DomainError);
    CHECK_THROWS_AS(Configuration(2, {0.5, 0.6}, {0, 0}, th4), DomainError);
    CHECK_THROWS_AS(Configuration(2, {0.5}, {0, 0}, th4), DomainError);
    CHECK_THROWS_AS(Configuration(2, {0.5, 0.5}, {0}, th4), DomainError);
    CHECK_THROWS_AS(Configuration(2, {0.5, 0.5}, {0, 0}, 0.0), DomainError);
    CHECK_THROWS_AS(Configuration(2, {0.5, 0.5}, {0, 0}, pi / 2.0), DomainError);
    CHECK_THROWS_AS(Configuration(2, {1.2, -0.2}, {0, 0}, th4), DomainError);
    CHECK_NOTHROW(Configuration(4, {0.2, 0.3, 0.2, 0.3}, {0, 0, 0, 0}, th4));
    // the open-stack mode has n-1 interior nodes and no normalization
    CHECK_NOTHROW(Configuration(3, {0.7, 0.9}, {0.1, 0.2}, th4, 0, 0, Mode::DPMS));
    CHECK_NOTHROW(Configuration(1, {}, {}, th4, 0, 0, Mode::DPMS));
}

TEST_CASE("phase sums split by node parity") {
    Configuration c(4, {0.25, 0.25, 0.25, 0.25}, {0.1, 0.2, 0.3, 0.4}, th4);
    CHECK(c.Psi1 == doctest::Approx(0.4).epsilon(1e-15));
    CHECK(c.Psi2 == doctest::Approx(0.6).epsilon(1e-15));
    const rvec2 t3 = c.T3();
    const rvec2 t1 = c.T1(), t2 = c.T2();
    CHECK(t3[0] == doctest::Approx(0.4 * t1[0] + 0.6 * t2[0]).epsilon(1e-15));
    CHECK(t3[1] == doctest::Approx(0.4 * t1[1] + 0.6 * t2[1]).epsilon(1e-15));
}

TEST_CASE("json round trip") {
    Configuration c(2, {0.4, 0.6}, {0.3, -0.2}, 1.1, 0.5, -0.25, Mode::TPMS);
    const Configuration d = configuration_from_json(configuration_to_json(c));
    CHECK(d.n == 2);
    CHECK(d.ell == c.ell);
    CHECK(d.psi == c.psi);
    CHECK(d.theta == c.theta);
    CHECK(d.Lambda1 == c.Lambda1);
    CHECK(d.Lambda2 == c.Lambda2);
    CHECK(d.mode == c.mode);
    CHECK(d.Psi1 == doctest::Approx(c.Psi1).epsilon(1e-15));
}

TEST_CASE("json rejects missing or inconsistent fields") {
    nlohmann::json j = configuration_to_json(two_layer());
    j.erase("ell");
    CHECK_THROWS_AS(configuration_from_json(j), DomainError);
    nlohmann::json j2 = configuration_to_json(two_layer());
    j2["Psi1"] = 1.0;
    CHECK_THROWS_AS(configuration_from_json(j2), DomainError);
    nlohmann::json j3 = configuration_to_json(two_layer());
    j3["mode"] = "XYZ";
    CHECK_THROWS_AS(configuration_from_json(j3), DomainError);
}

TEST_CASE("pinned delta values") {
    CHECK(choose_delta(th4) == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(choose_delta(pi / 3.0) == doctest::Approx(0.24115427318801053).epsilon(1e-15));
    CHECK(choose_delta(pi / 6.0) == doctest::Approx(0.24115427318801053).epsilon(1e-15));
}

TEST_CASE("build pins the node parameter") {
    const NodedSurface surf = build(two_layer(), 0.4);
    CHECK(surf.delta == doctest::Approx(0.25).epsilon(1e-15));
    const cplx t = surf.node_t(+1, 1);
    CHECK(t.real() == doctest::Approx(-0.04393693362340742).epsilon(1e-15));
    CHECK(std::abs(t.imag()) < 1e-16);
    CHECK(std::abs(surf.node_t(-1, 1) - t) == 0.0);
    CHECK(std::abs(surf.node_t(+1, 2) - t) == 0.0);
    // cyclic alias: node 0 is node n
    CHECK(std::abs(surf.node_t(+1, 0) - surf.node_t(+1, 2)) == 0.0);
    CHECK(surf.config.tau_max(0.4) == doctest::Approx(0.04393693362340742).epsilon(1e-15));
}

TEST_CASE("phase pi makes the node parameter real positive") {
    Configuration c(2, {0.5, 0.5}, {pi, pi}, th4);
    const NodedSurface surf = build(c, 0.4);
    const cplx t = surf.node_t(+1, 1);
    CHECK(t.real() > 0.0);
    CHECK(std::abs(t.imag()) < 1e-15);
    CHECK(std::abs(t) == doctest::Approx(0.04393693362340742).epsilon(1e-14));
}

TEST_CASE("open stack leaves boundary nodes closed") {
    Configuration c(2, {0.5}, {0.0}, th4, 0, 0, Mode::DPMS);
    const NodedSurface surf = build(c, 0.4);
    CHECK(surf.node_t(+1, 0) == cplx(0.0));
    CHECK(surf.node_t(-1, 0) == cplx(0.0));
    CHECK(surf.node_t(+1, 2) == cplx(0.0));
    CHECK(std::abs(surf.node_t(+1, 1)) > 0.0);
}

TEST_CASE("build rejects oversized node parameters") {
    CHECK_THROWS_AS(build(two_layer(), 0.7), RangeError);
}

TEST_CASE("overrides shift magnitude and phase") {
    const Configuration c = two_layer();
    PerNode zeta;
    zeta[0] = {0, 1.0, 0};
    zeta[1] = {0, 0, 0};
    PerNode psi;
    psi[0] = {0, 0.3, 0};
    psi[1] = {0, 0, 0};
    const NodedSurface surf = build(c, 0.4, zeta, psi);
    const cplx tp = surf.node_t(+1, 1);
    CHECK(std::abs(tp) == doctest::Approx(std::exp(-3.125 - 1.0)).epsilon(1e-14));
    CHECK(std::arg(tp) == doctest::Approx(0.3 - pi).epsilon(1e-14));
    // side - kept default zero phase, default magnitude
    const cplx tm = surf.node_t(-1, 1);
    CHECK(std::abs(tm) == doctest::Approx(std::exp(-3.125)).epsilon(1e-14));
    CHECK(std::abs(std::abs(std::arg(tm)) - pi) < 1e-14);
}

TEST_CASE("default phases are antisymmetric between the sides") {
    Configuration c(2, {0.5, 0.5}, {0.25, -0.1}, th4);
    const NodedSurface surf = build(c, 0.4);
    for (int k = 1; k <= 2; ++k) {
        const cplx tp = surf.node_t(+1, k), tm = surf.node_t(-1, k);
        CHECK(std::abs(tm - std::conj(tp)) < 1e-16);
    }
}

TEST_CASE("central punctures satisfy the pinned chain") {
    const NodedSurface surf = build(two_layer(), 0.4);
    const cplx E = std::polar(1.0, pi / 2.0 - th4);
    for (int k = 1; k <= 2; ++k) {
        CHECK(std::abs(-1.0 / surf.puncture_p(+1, k) - E) < 1e-15);
        CHECK(std::abs(surf.puncture_q(-1, k) - E) < 1e-15);
        CHECK(std::abs(1.0 / surf.puncture_p(-1, k) - E) < 1e-15);
        CHECK(std::abs(-surf.puncture_q(+1, k) - E) < 1e-15);
    }
}

TEST_CASE("node coordinates vanish at their puncture and round trip") {
    const NodedSurface surf = build(two_layer(), 0.4);
    for (int s : {+1, -1})
        for (int k = 1; k <= 2; ++k) {
            CHECK(std::abs(node_coord_u(surf, s, k, surf.puncture_p(s, k))) == 0.0);
            CHECK(std::abs(node_coord_v(surf, s, k, surf.puncture_q(s, k))) == 0.0);
            for (const cplx z : {cplx(0.3, 0.4), cplx(-1.2, 0.5), cplx(0.1, -2.0)}) {
                CHECK(std::abs(node_coord_u_inverse(surf, s, k, node_coord_u(surf, s, k, z)) - z) < 1e-14);
                CHECK(std::abs(node_coord_v_inverse(surf, s, k, node_coord_v(surf, s, k, z)) - z) < 1e-14);
            }
        }
}

TEST_CASE("chart parity flips the coordinate sign between neighbor spheres") {
    const NodedSurface surf = build(two_layer(), 0.4);
    const cplx z(0.2, 0.7);
    CHECK(std::abs(node_coord_u(surf, +1, 1, z) + node_coord_u(surf, +1, 2, z)) < 1e-16);
}

TEST_CASE("node coordinate pole") {
    const NodedSurface surf = build(two_layer(), 0.4);
    CHECK_THROWS_AS(node_coord_u(surf, +1, 1, -surf.puncture_p(+1, 1)), PoleError);
}

TEST_CASE("identification is an involution on the annulus") {
    const NodedSurface surf = build(two_layer(), 0.4);
    const cplx t = surf.node_t(+1, 1);
    const cplx u = surf.delta;
    const cplx v = identify(surf, +1, 1, u);
    CHECK(std::abs(v - t / surf.delta) < 1e-17);
    CHECK(std::abs(std::abs(v) - std::abs(t) / surf.delta) < 1e-17);
    CHECK(std::abs(identify(surf, +1, 1, v) - u) < 1e-15);
    const cplx st = std::sqrt(t);
    CHECK(std::abs(identify(surf, +1, 1, st) - st) < 1e-17);
}

TEST_CASE("identification rejects points off the annulus") {
    const NodedSurface surf = build(two_layer(), 0.4);
    CHECK_THROWS_AS(identify(surf, +1, 1, cplx(0.3)), AnnulusError);
    CHECK_THROWS_AS(identify(surf, +1, 1, cplx(1e-3)), AnnulusError);
    Configuration c(2, {0.5}, {0.0}, th4, 0, 0, Mode::DPMS);
    const NodedSurface open = build(c, 0.4);
    CHECK_THROWS_AS(identify(open, +1, 2, cplx(0.1)), AnnulusError);
}

TEST_CASE("fixed domain") {
    const NodedSurface surf = build(two_layer(), 0.4);
    CHECK(in_fixed_domain(surf, 1, cplx(0.0)));
    CHECK_FALSE(in_fixed_domain(surf, 1, surf.puncture_p(+1, 1)));
    CHECK_FALSE(in_fixed_domain(surf, 2, surf.puncture_q(-1, 2)));
    // points just inside / outside the half-delta circle around p_{+,1}
    for (double f : {1.0 - 1e-9, 1.0 + 1e-9}) {
        const cplx u = f * surf.delta / 2.0;
        const cplx z = node_coord_u_inverse(surf, +1, 1, u);
        CHECK(in_fixed_domain(surf, 1, z) == (f > 1.0));
    }
}
