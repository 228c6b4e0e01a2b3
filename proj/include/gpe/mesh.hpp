#pragma once

#include "gpe/sparse.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace gpe {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

enum class Domain { UnitSquare, LShape, Imported };

std::string domain_name(Domain d);
Domain domain_from_name(const std::string& name);

/// Conforming triangulation with positively oriented triangles.
///
/// Triangle vertex order encodes the newest-vertex-bisection state: the
/// refinement edge is (v2, v0) and the peak (newest vertex) is v1. Builders
/// initialize the refinement edge as the longest edge of each triangle.
/// Vertex indices of a coarse mesh are a prefix of every refinement of it.
struct Mesh {
    Domain domain = Domain::Imported;
    int level_id = 0;
    std::vector<Vec2> vertices;
    std::vector<std::array<int, 3>> triangles;
    std::vector<std::uint8_t> on_boundary; // per vertex
    std::vector<int> free_dof;             // vertex -> interior dof index, -1 on boundary
    int n_interior = 0;

    int n_vertices() const { return static_cast<int>(vertices.size()); }
    int n_triangles() const { return static_cast<int>(triangles.size()); }

    double signed_area(int t) const;
    double triangle_area(int t) const { return signed_area(t); }
    double total_area() const;
    double triangle_diameter(int t) const;
    double max_diameter() const;
    double min_angle() const;

    /// Mean-element-size proxy h^2 = 4*|Omega|/#triangles; equals the squared
    /// max diameter on the structured uniform meshes built here.
    double hsq_proxy() const;

    /// Recompute boundary flags (edges incident to one triangle) and the
    /// interior dof numbering. Called by all builders.
    void finalize();
};

/// Coefficient transfer from a coarse mesh to a nested refinement of it.
/// Stored at vertex level: each fine-vertex row is a single 1.0 entry
/// (inherited vertex) or two 0.5 entries (midpoint of a coarse edge).
struct Prolongation {
    SparseMatrix vertex_map; // fine_vertices x coarse_vertices

    Vector apply_vertex(const Vector& coarse_vertex_values) const {
        return vertex_map.apply(coarse_vertex_values);
    }

    /// Restriction to interior dofs: fine_interior x coarse_interior.
    SparseMatrix interior_map(const Mesh& coarse, const Mesh& fine) const;
};

Mesh build_unit_square(int n);
Mesh build_lshape(int n);

/// Split every triangle into 4 similar children through the edge midpoints.
std::pair<Mesh, Prolongation> refine_regular(const Mesh& mesh);

/// Newest-vertex bisection of the marked triangles plus the closure needed
/// to keep the mesh conforming. The refined space contains the input space.
std::pair<Mesh, Prolongation> bisect_marked(const Mesh& mesh, const std::vector<int>& marked);

struct Hierarchy {
    std::vector<Mesh> meshes;
    std::vector<Prolongation> prolongations; // [k] maps level k -> k+1
    int coarse_index = 0;                    // level hosting V_H
    int beta = 2;

    int levels() const { return static_cast<int>(meshes.size()); }
    const Mesh& mesh(int level) const { return meshes.at(level); }
    const Mesh& finest() const { return meshes.back(); }

    void append(Mesh mesh, Prolongation p);

    SparseMatrix composite_vertex_map(int from_level, int to_level) const;
    SparseMatrix composite_interior_map(int from_level, int to_level) const;

    /// Interior one-level transfer ops from coarse_index up to `level`,
    /// the ladder a multigrid workspace climbs.
    std::vector<SparseMatrix> interior_ladder(int level) const;
};

Hierarchy build_uniform_hierarchy(Domain domain, int base_n, int levels);

/// Composite transfer as a standalone operation (vertex level).
SparseMatrix composite_prolongation(const Hierarchy& hier, int from_level, int to_level);

bool is_conforming(const Mesh& mesh, std::string* why = nullptr);
bool on_domain_boundary(Domain domain, Vec2 p, double tol = 1e-12);
double domain_area(Domain domain);

/// Point evaluation of a P1 function given by per-vertex values.
double eval_p1(const Mesh& mesh, const Vector& vertex_values, Vec2 p);

void write_mesh(const Mesh& mesh, const std::string& path);
Mesh read_mesh(const std::string& path);

} // namespace gpe
