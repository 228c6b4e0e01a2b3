#include "gpe/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace gpe {

ZzIndicators zz_estimate(const Mesh& mesh, const FeFunction& u) {
    if (u.level_id != mesh.level_id) {
        throw std::invalid_argument("zz_estimate: function lives on a different level");
    }
    return zz_estimate_vertex(mesh, to_vertex_values(mesh, u));
}

ZzIndicators zz_estimate_vertex(const Mesh& mesh, const Vector& values) {
    if (values.size() != mesh.n_vertices()) {
        throw std::invalid_argument("zz_estimate: value count does not match the mesh");
    }
    const int nt = mesh.n_triangles();
    const int nv = mesh.n_vertices();

    std::vector<double> gx(nt), gy(nt), area(nt);
    Vector rx = Vector::Zero(nv), ry = Vector::Zero(nv), weight = Vector::Zero(nv);
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh.triangles[t];
        const Vec2& a = mesh.vertices[tri[0]];
        const Vec2& b = mesh.vertices[tri[1]];
        const Vec2& c = mesh.vertices[tri[2]];
        const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        area[t] = 0.5 * det;
        const double v0 = values[tri[0]], v1 = values[tri[1]], v2 = values[tri[2]];
        gx[t] = (v0 * (b.y - c.y) + v1 * (c.y - a.y) + v2 * (a.y - b.y)) / det;
        gy[t] = (v0 * (c.x - b.x) + v1 * (a.x - c.x) + v2 * (b.x - a.x)) / det;
        for (int i = 0; i < 3; ++i) {
            rx[tri[i]] += area[t] * gx[t];
            ry[tri[i]] += area[t] * gy[t];
            weight[tri[i]] += area[t];
        }
    }
    for (int v = 0; v < nv; ++v) {
        rx[v] /= weight[v];
        ry[v] /= weight[v];
    }

    ZzIndicators out;
    out.per_element.resize(nt);
    double total2 = 0.0;
    for (int t = 0; t < nt; ++t) {
        const auto& tri = mesh.triangles[t];
        double eta2 = 0.0;
        // exact L2 norm of the linear difference via the P1 mass matrix
        for (const auto& [recovered, raw] : {std::pair{&rx, gx[t]}, std::pair{&ry, gy[t]}}) {
            const double d0 = (*recovered)[tri[0]] - raw;
            const double d1 = (*recovered)[tri[1]] - raw;
            const double d2 = (*recovered)[tri[2]] - raw;
            eta2 += area[t] / 6.0 * (d0 * d0 + d1 * d1 + d2 * d2 + d0 * d1 + d0 * d2 + d1 * d2);
        }
        out.per_element[t] = std::sqrt(std::max(0.0, eta2));
        total2 += eta2;
    }
    out.total = std::sqrt(total2);
    return out;
}

std::vector<int> dorfler_mark(const ZzIndicators& indicators, double theta) {
    if (!(theta > 0.0 && theta < 1.0)) {
        throw std::invalid_argument("dorfler_mark: theta must be in (0, 1)");
    }
    const int nt = static_cast<int>(indicators.per_element.size());
    std::vector<int> order(nt);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        return indicators.per_element[a] > indicators.per_element[b];
    });

    const double target = theta * theta * indicators.total * indicators.total;
    std::vector<int> marked;
    double acc = 0.0;
    for (int t : order) {
        if (acc >= target) {
            break;
        }
        marked.push_back(t);
        acc += indicators.per_element[t] * indicators.per_element[t];
    }
    std::sort(marked.begin(), marked.end());
    return marked;
}

} // namespace gpe
