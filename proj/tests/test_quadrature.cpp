#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gpe/quadrature.hpp"
#include "oracles.hpp"

#include <random>

using namespace gpe;

namespace {

double quad_integrate(Vec2 a, Vec2 b, Vec2 c, int p, int q) {
    const double jac = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    double s = 0.0;
    for (const auto& pt : QuadratureRule::degree4()) {
        const double x = pt.l0 * a.x + pt.l1 * b.x + pt.l2 * c.x;
        const double y = pt.l0 * a.y + pt.l1 * b.y + pt.l2 * c.y;
        s += pt.w * std::pow(x, p) * std::pow(y, q);
    }
    return jac * s;
}

} // namespace

TEST_CASE("weights sum to the reference area") {
    double s = 0.0;
    for (const auto& pt : QuadratureRule::degree4()) {
        s += pt.w;
        CHECK(pt.l0 + pt.l1 + pt.l2 == doctest::Approx(1.0).epsilon(1e-15));
        CHECK(pt.w > 0.0);
    }
    CHECK(s == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("exact for all monomials up to degree 4 on random triangles") {
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    int checked = 0;
    while (checked < 10) {
        Vec2 a{coord(rng), coord(rng)};
        Vec2 b{coord(rng), coord(rng)};
        Vec2 c{coord(rng), coord(rng)};
        const double area2 = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        if (area2 < 0.1) {
            continue; // positively oriented, non-degenerate
        }
        ++checked;
        for (int p = 0; p <= 4; ++p) {
            for (int q = 0; p + q <= 4; ++q) {
                const double exact = oracle::integrate_monomial(a, b, c, p, q);
                const double approx = quad_integrate(a, b, c, p, q);
                const double scale = std::max(1e-30, std::abs(exact));
                CHECK(std::abs(approx - exact) / scale < 1e-13);
            }
        }
    }
}

TEST_CASE("degree 5 is not integrated exactly (rule is tight)") {
    const Vec2 a{0, 0}, b{1, 0}, c{0, 1};
    const double exact = oracle::integrate_monomial(a, b, c, 5, 0);
    const double approx = quad_integrate(a, b, c, 5, 0);
    CHECK(std::abs(approx - exact) > 1e-8);
}
