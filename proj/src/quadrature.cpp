#include "gpe/quadrature.hpp"

namespace gpe {

const std::array<QuadratureRule::Point, 6>& QuadratureRule::degree4() {
    // Two symmetry orbits; barycentric points (1-2a, a, a) and weights from
    // the closed forms a = (8 - sqrt(10) +/- sqrt(38 - 44*sqrt(2/5)))/18,
    // w = (620 +/- sqrt(213125 - 53320*sqrt(10)))/3720, halved so the sum
    // equals the reference area.
    static constexpr double a1 = 0.44594849091596489;
    static constexpr double b1 = 1.0 - 2.0 * a1;
    static constexpr double w1 = 0.22338158967801147 / 2.0;
    static constexpr double a2 = 0.09157621350977074;
    static constexpr double b2 = 1.0 - 2.0 * a2;
    static constexpr double w2 = 0.10995174365532187 / 2.0;
    static const std::array<Point, 6> rule = {{
        {b1, a1, a1, w1},
        {a1, b1, a1, w1},
        {a1, a1, b1, w1},
        {b2, a2, a2, w2},
        {a2, b2, a2, w2},
        {a2, a2, b2, w2},
    }};
    return rule;
}

} // namespace gpe
