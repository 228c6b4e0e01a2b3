#pragma once

#include <array>

namespace gpe {

/// Quadrature on the reference triangle in barycentric coordinates.
/// Weights sum to the reference area 1/2; a physical integral is
/// 2*|K| * sum_q w_q f(x_q).
struct QuadratureRule {
    struct Point {
        double l0, l1, l2;
        double w;
    };

    /// 6-point rule, exact for all polynomials of degree <= 4. The P1
    /// integrands here are at most quartic (w^2 * phi_i * phi_j), so
    /// assembly with this rule is exact.
    static const std::array<Point, 6>& degree4();
};

} // namespace gpe
