#pragma once

#include "gpe/assembly.hpp"

#include <vector>

namespace gpe {

/// Recovery-based error indicators: eta_K = ||G(u_h) - grad u_h||_{L2(K)}
/// with G the area-weighted per-vertex average of adjacent element gradients.
struct ZzIndicators {
    Vector per_element; // eta_K >= 0
    double total = 0.0; // (sum eta_K^2)^(1/2)
};

ZzIndicators zz_estimate(const Mesh& mesh, const FeFunction& u);

/// Same recovery applied to a field given at every vertex (no homogeneous
/// boundary assumption).
ZzIndicators zz_estimate_vertex(const Mesh& mesh, const Vector& vertex_values);

/// Minimal prefix of elements, sorted by decreasing indicator, whose squared
/// indicators reach theta^2 times the squared total.
std::vector<int> dorfler_mark(const ZzIndicators& indicators, double theta);

} // namespace gpe
