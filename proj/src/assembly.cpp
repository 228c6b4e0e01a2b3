#include "gpe/assembly.hpp"

#include "gpe/quadrature.hpp"

#include <cmath>
#include <stdexcept>

namespace gpe {

namespace {

struct ElementGeometry {
    std::array<int, 3> v;
    double area;
    // gradients of the barycentric basis functions
    std::array<double, 3> gx;
    std::array<double, 3> gy;
};

ElementGeometry element_geometry(const Mesh& mesh, int t) {
    const auto& tri = mesh.triangles[t];
    const Vec2& a = mesh.vertices[tri[0]];
    const Vec2& b = mesh.vertices[tri[1]];
    const Vec2& c = mesh.vertices[tri[2]];
    const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
    if (det <= 0.0) {
        throw std::runtime_error("assembly: degenerate triangle at index " + std::to_string(t));
    }
    ElementGeometry g;
    g.v = tri;
    g.area = 0.5 * det;
    g.gx = {(b.y - c.y) / det, (c.y - a.y) / det, (a.y - b.y) / det};
    g.gy = {(c.x - b.x) / det, (a.x - c.x) / det, (b.x - a.x) / det};
    return g;
}

template <typename LocalFn>
SparseMatrix assemble(const Mesh& mesh, const DofMap& dofs, LocalFn&& local) {
    std::vector<SparseMatrix::Triplet> triplets;
    triplets.reserve(9 * mesh.triangles.size());
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementGeometry g = element_geometry(mesh, t);
        const std::array<std::array<double, 3>, 3> k = local(g);
        for (int i = 0; i < 3; ++i) {
            const int di = dofs.vertex_to_dof[g.v[i]];
            if (di < 0) {
                continue;
            }
            for (int j = 0; j < 3; ++j) {
                const int dj = dofs.vertex_to_dof[g.v[j]];
                if (dj >= 0) {
                    triplets.push_back({di, dj, k[i][j]});
                }
            }
        }
    }
    return SparseMatrix::from_triplets(dofs.n_dofs, dofs.n_dofs, std::move(triplets));
}

} // namespace

void ProblemSpec::validate() const {
    if (!(gamma1 > 0.0) || !(gamma2 > 0.0)) {
        throw std::invalid_argument("ProblemSpec: gamma coefficients must be positive");
    }
    if (!(zeta >= 0.0)) {
        throw std::invalid_argument("ProblemSpec: zeta must be nonnegative");
    }
}

DofMap DofMap::interior(const Mesh& mesh) {
    return DofMap{mesh.free_dof, mesh.n_interior};
}

DofMap DofMap::all_vertices(const Mesh& mesh) {
    DofMap d;
    d.vertex_to_dof.resize(mesh.n_vertices());
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        d.vertex_to_dof[v] = v;
    }
    d.n_dofs = mesh.n_vertices();
    return d;
}

Vector to_vertex_values(const Mesh& mesh, const FeFunction& u) {
    if (u.coeffs.size() != mesh.n_interior) {
        throw std::invalid_argument("to_vertex_values: coefficient count does not match level");
    }
    Vector full = Vector::Zero(mesh.n_vertices());
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        if (mesh.free_dof[v] >= 0) {
            full[v] = u.coeffs[mesh.free_dof[v]];
        }
    }
    return full;
}

FeFunction from_vertex_values(const Mesh& mesh, const Vector& vertex_values) {
    if (vertex_values.size() != mesh.n_vertices()) {
        throw std::invalid_argument("from_vertex_values: value count does not match level");
    }
    FeFunction u;
    u.level_id = mesh.level_id;
    u.coeffs.resize(mesh.n_interior);
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        if (mesh.free_dof[v] >= 0) {
            u.coeffs[mesh.free_dof[v]] = vertex_values[v];
        }
    }
    return u;
}

SparseMatrix assemble_stiffness(const Mesh& mesh, const DofMap& dofs) {
    return assemble(mesh, dofs, [](const ElementGeometry& g) {
        std::array<std::array<double, 3>, 3> k;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                k[i][j] = g.area * (g.gx[i] * g.gx[j] + g.gy[i] * g.gy[j]);
            }
        }
        return k;
    });
}

SparseMatrix assemble_mass(const Mesh& mesh, const DofMap& dofs) {
    return assemble(mesh, dofs, [](const ElementGeometry& g) {
        const double s = g.area / 12.0;
        std::array<std::array<double, 3>, 3> k;
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                k[i][j] = s * (i == j ? 2.0 : 1.0);
            }
        }
        return k;
    });
}

SparseMatrix assemble_potential_fn(const Mesh& mesh,
                                   const std::function<double(double, double)>& w,
                                   const DofMap& dofs) {
    const auto& rule = QuadratureRule::degree4();
    return assemble(mesh, dofs, [&](const ElementGeometry& g) {
        const Vec2& a = mesh.vertices[g.v[0]];
        const Vec2& b = mesh.vertices[g.v[1]];
        const Vec2& c = mesh.vertices[g.v[2]];
        std::array<std::array<double, 3>, 3> k{};
        for (const auto& q : rule) {
            const double x = q.l0 * a.x + q.l1 * b.x + q.l2 * c.x;
            const double y = q.l0 * a.y + q.l1 * b.y + q.l2 * c.y;
            const double f = 2.0 * g.area * q.w * w(x, y);
            const std::array<double, 3> phi = {q.l0, q.l1, q.l2};
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    k[i][j] += f * phi[i] * phi[j];
                }
            }
        }
        return k;
    });
}

SparseMatrix assemble_potential(const Mesh& mesh, const ProblemSpec& spec, const DofMap& dofs) {
    spec.validate();
    return assemble_potential_fn(
        mesh, [&spec](double x, double y) { return spec.potential(x, y); }, dofs);
}

namespace {

std::array<std::array<double, 3>, 3> local_nonlinear(const ElementGeometry& g,
                                                     const std::array<double, 3>& wv,
                                                     double zeta) {
    std::array<std::array<double, 3>, 3> k{};
    for (const auto& q : QuadratureRule::degree4()) {
        const double wq = q.l0 * wv[0] + q.l1 * wv[1] + q.l2 * wv[2];
        const double f = 2.0 * g.area * q.w * zeta * wq * wq;
        const std::array<double, 3> phi = {q.l0, q.l1, q.l2};
        for (int i = 0; i < 3; ++i) {
            for (int j = 0; j < 3; ++j) {
                k[i][j] += f * phi[i] * phi[j];
            }
        }
    }
    return k;
}

} // namespace

SparseMatrix assemble_nonlinear_vertex(const Mesh& mesh, const Vector& w_vertex_values,
                                       double zeta, const DofMap& dofs) {
    if (w_vertex_values.size() != mesh.n_vertices()) {
        throw std::invalid_argument("assemble_nonlinear: density values do not match level");
    }
    return assemble(mesh, dofs, [&](const ElementGeometry& g) {
        return local_nonlinear(g, {w_vertex_values[g.v[0]], w_vertex_values[g.v[1]],
                                   w_vertex_values[g.v[2]]},
                               zeta);
    });
}

void for_each_nonlinear_element(
    const Mesh& mesh, const Vector& w_vertex_values, double zeta,
    const std::function<void(const std::array<int, 3>&,
                             const std::array<std::array<double, 3>, 3>&)>& visit) {
    if (w_vertex_values.size() != mesh.n_vertices()) {
        throw std::invalid_argument("assemble_nonlinear: density values do not match level");
    }
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        const ElementGeometry g = element_geometry(mesh, t);
        visit(g.v, local_nonlinear(g, {w_vertex_values[g.v[0]], w_vertex_values[g.v[1]],
                                       w_vertex_values[g.v[2]]},
                                   zeta));
    }
}

SparseMatrix assemble_nonlinear(const Mesh& mesh, const FeFunction& w, double zeta,
                                const DofMap& dofs) {
    if (w.level_id != mesh.level_id) {
        throw std::invalid_argument("assemble_nonlinear: density lives on a different level");
    }
    return assemble_nonlinear_vertex(mesh, to_vertex_values(mesh, w), zeta, dofs);
}

SparseMatrix assemble_stiffness(const Mesh& mesh) {
    return assemble_stiffness(mesh, DofMap::interior(mesh));
}

SparseMatrix assemble_mass(const Mesh& mesh) {
    return assemble_mass(mesh, DofMap::interior(mesh));
}

SparseMatrix assemble_potential(const Mesh& mesh, const ProblemSpec& spec) {
    return assemble_potential(mesh, spec, DofMap::interior(mesh));
}

SparseMatrix assemble_nonlinear(const Mesh& mesh, const FeFunction& w, double zeta) {
    return assemble_nonlinear(mesh, w, zeta, DofMap::interior(mesh));
}

OperatorParts assemble_parts(const Mesh& mesh, const ProblemSpec& spec) {
    spec.validate();
    OperatorParts parts;
    parts.mesh = &mesh;
    parts.zeta = spec.zeta;
    parts.stiffness = assemble_stiffness(mesh);
    parts.potential = assemble_potential(mesh, spec);
    parts.mass = assemble_mass(mesh);
    return parts;
}

Vector apply_operator(const OperatorParts& parts, const FeFunction& u) {
    if (parts.mesh == nullptr || u.level_id != parts.mesh->level_id) {
        throw std::invalid_argument("apply_operator: level mismatch");
    }
    const SparseMatrix n = assemble_nonlinear(*parts.mesh, u, parts.zeta);
    return parts.stiffness.apply(u.coeffs) + parts.potential.apply(u.coeffs) + n.apply(u.coeffs);
}

double rayleigh(const OperatorParts& parts, const FeFunction& u) {
    const double mu = u.coeffs.dot(parts.mass.apply(u.coeffs));
    if (!(mu > 0.0)) {
        throw std::invalid_argument("rayleigh: u^T M u must be positive");
    }
    return u.coeffs.dot(apply_operator(parts, u)) / mu;
}

double m_norm(const SparseMatrix& mass, const Vector& u) {
    return std::sqrt(std::max(0.0, u.dot(mass.apply(u))));
}

} // namespace gpe
