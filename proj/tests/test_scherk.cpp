#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <complex>
#include <random>

#include "scherkstack/scherk.hpp"

using namespace scherkstack;

namespace {
const double th4 = pi / 4.0;
const double th3 = pi / 3.0;

cplx random_point(std::mt19937_64& rng, double rmin, double rmax) {
    std::uniform_real_distribution<double> ur(rmin, rmax), ua(0.0, 2.0 * pi);
    return std::polar(ur(rng), ua(rng));
}
} // namespace

TEST_CASE("punctures sit on the unit circle in the pinned pattern") {
    ScherkParams s(th4, Variant::Odd);
    const double h = 0.70710678118654752;
    CHECK(std::abs(s.p[0] - cplx(-h, h)) < 1e-15);
    CHECK(std::abs(s.p[1] - cplx(h, h)) < 1e-15);
    CHECK(std::abs(s.p[2] - cplx(h, -h)) < 1e-15);
    CHECK(std::abs(s.p[3] - cplx(-h, -h)) < 1e-15);
    ScherkParams g(1.1, Variant::Even);
    for (int j = 0; j < 4; ++j) CHECK(std::abs(std::abs(g.p[j]) - 1.0) < 1e-15);
    CHECK(std::abs(g.p[2] + g.p[0]) < 1e-15);
    CHECK(std::abs(g.p[3] + g.p[1]) < 1e-15);
}

TEST_CASE("construction rejects boundary angles") {
    CHECK_THROWS_AS(ScherkParams(0.0, Variant::Odd), DomainError);
    CHECK_THROWS_AS(ScherkParams(pi / 2.0, Variant::Odd), DomainError);
    CHECK_THROWS_AS(ScherkParams(-0.3, Variant::Even), DomainError);
}

TEST_CASE("form values match an independent partial-fraction evaluation") {
    ScherkParams s(th3, Variant::Odd);
    const cvec3 v = weierstrass_at(s, cplx(0.0, 2.0));
    CHECK(std::abs(v[0] - cplx(0.0, -0.4123930494211614)) < 1e-13);
    CHECK(std::abs(v[1] - cplx(-0.24743582965269678, 0.0)) < 1e-13);
    CHECK(std::abs(v[2] - cplx(0.32991443953692889, 0.0)) < 1e-13);
}

TEST_CASE("form evaluation at a puncture reports a pole") {
    ScherkParams s(th4, Variant::Odd);
    CHECK_THROWS_AS(weierstrass_at(s, s.p[1]), PoleError);
    CHECK_THROWS_AS(weierstrass_at(s, s.p[1] + cplx(1e-13, 0.0)), PoleError);
}

TEST_CASE("conformality identity holds pointwise") {
    for (Variant v : {Variant::Odd, Variant::Even}) {
        for (double th : {th4, th3, 1.1}) {
            ScherkParams s(th, v);
            std::mt19937_64 rng(12345);
            for (int i = 0; i < 10000; ++i) {
                cplx z = random_point(rng, 0.0, 3.0);
                if (puncture_distance(s, z) < 1e-3) continue;
                const cvec3 f = weierstrass_at(s, z);
                const cplx q = f[0] * f[0] + f[1] * f[1] + f[2] * f[2];
                CHECK(std::abs(q) < 1e-11 * (1.0 + std::norm(f[2])));
            }
        }
    }
}

TEST_CASE("residues sum to zero per component") {
    for (Variant v : {Variant::Odd, Variant::Even}) {
        ScherkParams s(0.9, v);
        cvec3 total = {0, 0, 0};
        for (int j = 0; j < 4; ++j) total += s.c[j];
        CHECK(norm_inf(total) < 1e-15);
    }
}

TEST_CASE("vertical residues alternate +1 -1") {
    ScherkParams s(th4, Variant::Odd);
    CHECK(s.c[0][2] == cplx(1.0));
    CHECK(s.c[1][2] == cplx(-1.0));
    CHECK(s.c[2][2] == cplx(1.0));
    CHECK(s.c[3][2] == cplx(-1.0));
}

TEST_CASE("gauss map is the identity for the odd variant") {
    ScherkParams s(th4, Variant::Odd);
    CHECK(std::abs(gauss_map(s, cplx(0.5, 0.1)) - cplx(0.5, 0.1)) < 1e-13);
    std::mt19937_64 rng(777);
    for (int i = 0; i < 1000; ++i) {
        cplx z = random_point(rng, 0.1, 4.0);
        CHECK(std::abs(gauss_map(s, z) - z) < 1e-12);
    }
    ScherkParams g(th3, Variant::Odd);
    for (int i = 0; i < 1000; ++i) {
        cplx z = random_point(rng, 0.1, 4.0);
        CHECK(std::abs(gauss_map(g, z) - z) < 1e-12);
    }
}

TEST_CASE("gauss map inverts for the even variant") {
    ScherkParams s(th4, Variant::Even);
    CHECK(std::abs(gauss_map(s, cplx(2.0, 0.0)) - cplx(0.5, 0.0)) < 1e-13);
    std::mt19937_64 rng(778);
    for (int i = 0; i < 1000; ++i) {
        cplx z = random_point(rng, 0.2, 4.0);
        CHECK(std::abs(gauss_map(s, z) - 1.0 / z) < 1e-12);
    }
}

TEST_CASE("gauss map extends holomorphically to the punctures") {
    for (double th : {th4, th3, 0.8}) {
        ScherkParams s(th, Variant::Odd);
        for (int j = 0; j < 4; ++j)
            CHECK(std::abs(gauss_map(s, s.p[j]) - s.p[j]) < 1e-12);
        ScherkParams g(th, Variant::Even);
        for (int j = 0; j < 4; ++j)
            CHECK(std::abs(gauss_map(g, g.p[j]) - 1.0 / g.p[j]) < 1e-12);
    }
}

TEST_CASE("gauss map survives its zero at the origin") {
    ScherkParams s(th4, Variant::Odd);
    CHECK(std::abs(gauss_map(s, cplx(0.0, 0.0))) < 1e-12);
}

TEST_CASE("end constants at theta = pi/4") {
    ScherkParams s(th4, Variant::Odd);
    const EndData e1 = end_data(s, 1);
    CHECK(e1.mu[0] == doctest::Approx(2.2214414690791831).epsilon(1e-14));
    CHECK(e1.mu[1] == 0.0);
    CHECK(e1.nu == doctest::Approx(0.69314718055994529).epsilon(1e-14));
    CHECK(e1.upsilon == 2.0);
    const EndData e2 = end_data(s, 2);
    CHECK(e2.nu == doctest::Approx(-0.69314718055994529).epsilon(1e-14));
    for (int j = 1; j <= 4; ++j) {
        const EndData e = end_data(s, j);
        CHECK(std::abs(norm(e.normal) - 1.0) < 1e-14);
        CHECK(e.normal[2] == 0.0);
    }
}

TEST_CASE("even variant permutes the rhombus vertices") {
    ScherkParams o(th3, Variant::Odd), e(th3, Variant::Even);
    const EndData odd4 = end_data(o, 4), even1 = end_data(e, 1);
    CHECK(even1.mu[0] == doctest::Approx(odd4.mu[0]).epsilon(1e-14));
    CHECK(even1.mu[1] == doctest::Approx(odd4.mu[1]).epsilon(1e-14));
    CHECK(even1.mu[1] == doctest::Approx(-2.7206990463513265).epsilon(1e-13));
    for (int j = 1; j <= 4; ++j)
        CHECK(end_data(e, j).nu == doctest::Approx(end_data(o, j).nu).epsilon(1e-14));
}

TEST_CASE("rhombus sides all have length pi") {
    for (double th : {th4, th3, 0.55}) {
        ScherkParams s(th, Variant::Odd);
        for (int j = 1; j <= 4; ++j) {
            const rvec2 a = end_data(s, j).mu;
            const rvec2 b = end_data(s, j % 4 + 1).mu;
            const double side = std::hypot(a[0] - b[0], a[1] - b[1]);
            CHECK(side == doctest::Approx(pi).epsilon(1e-12));
        }
    }
}

TEST_CASE("end coordinate round trip and pinned values") {
    ScherkParams s(th4, Variant::Odd);
    const double vt = s.vartheta;
    CHECK(std::abs(end_coordinate(s, 1, s.p[1]) - cplx(1.0 / std::tan(vt))) < 1e-14);
    CHECK(std::abs(end_coordinate(s, 1, s.p[3]) - cplx(-std::tan(vt))) < 1e-14);
    CHECK(std::abs(end_coordinate(s, 1, cplx(0.0)) - cplx(0.0, -1.0)) < 1e-15);
    std::mt19937_64 rng(4242);
    for (Variant v : {Variant::Odd, Variant::Even}) {
        ScherkParams g(1.0, v);
        for (int j = 1; j <= 4; ++j)
            for (int i = 0; i < 50; ++i) {
                cplx z = random_point(rng, 0.1, 3.0);
                if (std::abs(z + g.p[j - 1]) < 0.05) continue;
                CHECK(std::abs(end_coordinate_inverse(g, j, end_coordinate(g, j, z)) - z) < 1e-13);
            }
    }
}

TEST_CASE("undulation coefficients are purely imaginary horizontally") {
    for (Variant v : {Variant::Odd, Variant::Even}) {
        for (double th : {th4, th3, 1.2}) {
            ScherkParams s(th, v);
            for (int j = 1; j <= 4; ++j) {
                const cvec3 d = end_linear_coefficient(s, j);
                CHECK(std::abs(d[0].real()) < 1e-12);
                CHECK(std::abs(d[1].real()) < 1e-12);
                CHECK(std::abs(d[2].imag()) < 1e-12);
            }
        }
    }
}

TEST_CASE("pinned undulation coefficients") {
    ScherkParams s(th4, Variant::Odd);
    const cvec3 d = end_linear_coefficient(s, 1);
    const double r2 = 1.4142135623730951;
    CHECK(std::abs(d[0] - cplx(0.0, -r2)) < 1e-13);
    CHECK(std::abs(d[1] - cplx(0.0, r2)) < 1e-13);
    CHECK(std::abs(d[2]) < 1e-13);
    ScherkParams o3(th3, Variant::Odd), e3(th3, Variant::Even);
    for (int j = 1; j <= 4; ++j) {
        CHECK(end_linear_coefficient(o3, j)[2].real() == doctest::Approx(-1.15470053837925).epsilon(1e-12));
        CHECK(end_linear_coefficient(e3, j)[2].real() == doctest::Approx(1.15470053837925).epsilon(1e-12));
    }
}

TEST_CASE("undulation amplitude is 2 in the normal direction") {
    for (Variant v : {Variant::Odd, Variant::Even}) {
        ScherkParams s(0.95, v);
        for (int j = 1; j <= 4; ++j) {
            const EndData e = end_data(s, j);
            const cvec3 d = end_linear_coefficient(s, j);
            const cplx nd = e.normal[0] * d[0] + e.normal[1] * d[1];
            CHECK(std::abs(nd) == doctest::Approx(2.0).epsilon(1e-12));
            const double r = 0.02;
            double worst = 0.0;
            for (int m = 0; m < 128; ++m) {
                const rvec3 x = end_expansion(s, j, std::polar(r, 2.0 * pi * m / 128.0));
                const double dev = e.normal[0] * (x[0] - e.mu[0]) + e.normal[1] * (x[1] - e.mu[1]);
                worst = std::max(worst, std::abs(dev));
            }
            CHECK(worst == doctest::Approx(2.0 * r).epsilon(1e-3));
        }
    }
}

TEST_CASE("gauss-map derivative oracle also gives amplitude 2") {
    for (Variant v : {Variant::Odd, Variant::Even}) {
        ScherkParams s(th3, v);
        for (int j = 1; j <= 4; ++j) {
            const double h = 1e-6;
            const cplx gp = gauss_map(s, end_coordinate_inverse(s, j, cplx(h)));
            const cplx gm = gauss_map(s, end_coordinate_inverse(s, j, cplx(-h)));
            const cplx g0 = gauss_map(s, s.p[j - 1]);
            const cplx dgdw = (gp - gm) / (2.0 * h);
            CHECK(std::abs(I / g0 * dgdw - cplx(2.0)) < 1e-5);
        }
    }
}

TEST_CASE("end expansion rejects out-of-range coordinates") {
    ScherkParams s(th4, Variant::Odd);
    CHECK_THROWS_AS(end_expansion(s, 1, cplx(0.0)), DomainError);
    CHECK_THROWS_AS(end_expansion(s, 1, cplx(0.31, 0.0)), DomainError);
    CHECK_NOTHROW(end_expansion(s, 1, cplx(0.29, 0.0)));
}

TEST_CASE("end expansion vertical coordinate at w = 0.1") {
    ScherkParams s(th4, Variant::Odd);
    const rvec3 x = end_expansion(s, 1, cplx(0.1, 0.0));
    CHECK(x[2] == doctest::Approx(-1.6094379124341001).epsilon(1e-12));
}

TEST_CASE("immersion of the base point is the origin") {
    ScherkParams s(th4, Variant::Odd);
    const rvec3 x = immerse(s, cplx(0.0));
    CHECK(std::abs(x[0]) < 1e-12);
    CHECK(std::abs(x[1]) < 1e-12);
    CHECK(std::abs(x[2]) < 1e-12);
}

TEST_CASE("imaginary axis maps to the x-axis") {
    ScherkParams s(th4, Variant::Odd);
    for (double y : {0.5, 1.5, -0.8}) {
        const rvec3 x = immerse(s, cplx(0.0, y));
        CHECK(std::abs(x[1]) < 1e-9);
        CHECK(std::abs(x[2]) < 1e-9);
    }
}

TEST_CASE("arc between first two punctures maps to the vertical line over mu1") {
    ScherkParams s(th4, Variant::Odd);
    const EndData e1 = end_data(s, 1);
    for (double f : {0.3, 0.7}) {
        const double a = s.vartheta + f * (pi - 2.0 * s.vartheta);
        const rvec3 x = immerse(s, std::polar(1.0, a));
        CHECK(std::abs(x[0] - e1.mu[0]) < 1e-8);
        CHECK(std::abs(x[1] - e1.mu[1]) < 1e-8);
    }
}

TEST_CASE("closed-form height agrees with the integrated height") {
    std::mt19937_64 rng(909);
    for (Variant v : {Variant::Odd, Variant::Even}) {
        ScherkParams s(1.05, v);
        for (int i = 0; i < 20; ++i) {
            cplx z = random_point(rng, 0.1, 2.0);
            if (puncture_distance(s, z) < 0.1) continue;
            CHECK(immerse(s, z)[2] == doctest::Approx(x3_exact(s, z)).epsilon(1e-9));
        }
    }
}

TEST_CASE("inversion across the unit circle is an order-2 rotation about the vertex line") {
    ScherkParams s(th4, Variant::Odd);
    const EndData e1 = end_data(s, 1);
    for (double r : {0.8, 0.65}) {
        for (double f : {0.35, 0.6}) {
            const double a = s.vartheta + f * (pi - 2.0 * s.vartheta);
            const cplx z = std::polar(r, a);
            const cplx sz = 1.0 / std::conj(z);
            const rvec3 xa = immerse(s, z), xb = immerse(s, sz);
            CHECK(std::abs(xa[0] + xb[0] - 2.0 * e1.mu[0]) < 1e-8);
            CHECK(std::abs(xa[1] + xb[1] - 2.0 * e1.mu[1]) < 1e-8);
            CHECK(std::abs(xa[2] - xb[2]) < 1e-9);
        }
    }
}

TEST_CASE("end expansion approximates the immersion to second order") {
    for (Variant v : {Variant::Odd, Variant::Even}) {
        ScherkParams s(th4, v);
        for (int j = 1; j <= 4; ++j) {
            for (double r : {0.1, 0.05, 0.025}) {
                for (double a : {0.3, 2.0, -2.5}) {
                    const cplx w = std::polar(r, a);
                    const cplx z = end_coordinate_inverse(s, j, w);
                    const rvec3 xe = end_expansion(s, j, w);
                    const rvec3 xi = immerse(s, z);
                    // the horizontal coordinates of the two routes may differ by full turns
                    const double err = std::max({std::abs(std::remainder(xe[0] - xi[0], 2.0 * pi * std::abs(std::cos(s.dir[j - 1])))),
                                                 std::abs(std::remainder(xe[1] - xi[1], 2.0 * pi * std::abs(std::sin(s.dir[j - 1])))),
                                                 std::abs(xe[2] - xi[2])});
                    CHECK(err <= 10.0 * r * r);
                }
            }
        }
    }
}

TEST_CASE("path planner detours around punctures") {
    ScherkParams s(th4, Variant::Odd);
    // target behind p2: the straight segment from 0 passes through the puncture
    const cplx z = 1.6 * s.p[1];
    const std::vector<cplx> pts = plan_path(s, 0.0, z);
    CHECK(pts.size() >= 3);
    for (std::size_t k = 0; k + 1 < pts.size(); ++k)
        for (int m = 0; m <= 16; ++m) {
            const cplx q = pts[k] + (static_cast<double>(m) / 16.0) * (pts[k + 1] - pts[k]);
            CHECK(puncture_distance(s, q) > 0.02);
        }
    const rvec3 x = immerse(s, z);
    CHECK(std::isfinite(x[0]));
    CHECK(std::isfinite(x[2]));
}
