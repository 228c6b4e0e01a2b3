#pragma once

#include "gpe/mesh.hpp"
#include "gpe/sparse.hpp"

#include <functional>

namespace gpe {

/// Problem data of the non-dimensionalized equation
///   -div(grad u) + W u + zeta |u|^2 u = lambda u,  W(x) = gamma1 x1^2 + gamma2 x2^2.
struct ProblemSpec {
    Domain domain = Domain::UnitSquare;
    double gamma1 = 1.0;
    double gamma2 = 1.0;
    double zeta = 1.0; // zeta = 0 is the linear-limit test mode

    void validate() const;
    double potential(double x, double y) const { return gamma1 * x * x + gamma2 * y * y; }
};

/// Map from mesh vertices to matrix dofs. The solver path uses the interior
/// map (homogeneous Dirichlet dofs eliminated); the all-vertex map exists for
/// partition-of-unity style checks on the unreduced forms.
struct DofMap {
    std::vector<int> vertex_to_dof; // -1 where eliminated
    int n_dofs = 0;

    static DofMap interior(const Mesh& mesh);
    static DofMap all_vertices(const Mesh& mesh);
};

/// P1 coefficients over the interior dofs of one level; boundary values are
/// implicitly zero.
struct FeFunction {
    int level_id = 0;
    Vector coeffs;
};

/// Expand interior coefficients to per-vertex values (zeros on the boundary).
Vector to_vertex_values(const Mesh& mesh, const FeFunction& u);
FeFunction from_vertex_values(const Mesh& mesh, const Vector& vertex_values);

SparseMatrix assemble_stiffness(const Mesh& mesh, const DofMap& dofs);
SparseMatrix assemble_mass(const Mesh& mesh, const DofMap& dofs);
SparseMatrix assemble_potential(const Mesh& mesh, const ProblemSpec& spec, const DofMap& dofs);

/// Potential form for an arbitrary coefficient W(x, y), integrated with the
/// degree-4 rule. assemble_potential forwards here with the quadratic W.
SparseMatrix assemble_potential_fn(const Mesh& mesh,
                                   const std::function<double(double, double)>& w,
                                   const DofMap& dofs);

/// State-dependent term N(w) with entries zeta * int w^2 phi_i phi_j, the
/// fixed-point linearization at frozen density w^2. Exact for P1.
SparseMatrix assemble_nonlinear(const Mesh& mesh, const FeFunction& w, double zeta,
                                const DofMap& dofs);

/// Same, with the density given at every vertex (boundary included).
SparseMatrix assemble_nonlinear_vertex(const Mesh& mesh, const Vector& w_vertex_values,
                                       double zeta, const DofMap& dofs);

/// Element-wise traversal of the frozen-density form: calls `visit` with the
/// vertex triple and the local 3x3 matrix of zeta * int w^2 phi_i phi_j.
/// Lets congruence consumers skip the assembled global matrix.
void for_each_nonlinear_element(
    const Mesh& mesh, const Vector& w_vertex_values, double zeta,
    const std::function<void(const std::array<int, 3>&,
                             const std::array<std::array<double, 3>, 3>&)>& visit);

// Interior-dof convenience overloads.
SparseMatrix assemble_stiffness(const Mesh& mesh);
SparseMatrix assemble_mass(const Mesh& mesh);
SparseMatrix assemble_potential(const Mesh& mesh, const ProblemSpec& spec);
SparseMatrix assemble_nonlinear(const Mesh& mesh, const FeFunction& w, double zeta);

/// State-independent pieces of the operator on one level.
struct OperatorParts {
    const Mesh* mesh = nullptr;
    double zeta = 0.0;
    SparseMatrix stiffness; // (grad u, grad v)
    SparseMatrix potential; // (W u, v)
    SparseMatrix mass;      // (u, v)

    SparseMatrix linear() const { return stiffness.plus(potential); }
    int dim() const { return stiffness.rows(); }
};

OperatorParts assemble_parts(const Mesh& mesh, const ProblemSpec& spec);

/// (A_stiff + A_W + N(u)) u.
Vector apply_operator(const OperatorParts& parts, const FeFunction& u);

/// u^T (A_stiff + A_W + N(u)) u / u^T M u; equals the eigenvalue when u is a
/// discrete eigenfunction normalized by u^T M u = 1.
double rayleigh(const OperatorParts& parts, const FeFunction& u);

double m_norm(const SparseMatrix& mass, const Vector& u);

} // namespace gpe
