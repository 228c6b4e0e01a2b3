#include "gpe/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

namespace gpe {

namespace {

using Edge = std::pair<int, int>;

Edge make_edge(int a, int b) {
    return a < b ? Edge{a, b} : Edge{b, a};
}

double dist2(const Vec2& a, const Vec2& b) {
    const double dx = a.x - b.x;
    const double dy = a.y - b.y;
    return dx * dx + dy * dy;
}

/// Rotate vertex order so the longest edge becomes (v2, v0). Ties prefer the
/// current refinement edge, then (v0,v1), then (v1,v2).
std::array<int, 3> tag_longest_edge(const Mesh& m, std::array<int, 3> t) {
    const double l20 = dist2(m.vertices[t[2]], m.vertices[t[0]]);
    const double l01 = dist2(m.vertices[t[0]], m.vertices[t[1]]);
    const double l12 = dist2(m.vertices[t[1]], m.vertices[t[2]]);
    if (l01 > l20 && l01 >= l12) {
        return {t[1], t[2], t[0]};
    }
    if (l12 > l20 && l12 > l01) {
        return {t[2], t[0], t[1]};
    }
    return t;
}

std::map<Edge, int> edge_incidence(const Mesh& m) {
    std::map<Edge, int> count;
    for (const auto& t : m.triangles) {
        ++count[make_edge(t[0], t[1])];
        ++count[make_edge(t[1], t[2])];
        ++count[make_edge(t[2], t[0])];
    }
    return count;
}

} // namespace

std::string domain_name(Domain d) {
    switch (d) {
    case Domain::UnitSquare: return "unit-square";
    case Domain::LShape: return "l-shape";
    case Domain::Imported: return "imported";
    }
    return "imported";
}

Domain domain_from_name(const std::string& name) {
    if (name == "unit-square" || name == "unit_square" || name == "square") {
        return Domain::UnitSquare;
    }
    if (name == "l-shape" || name == "l_shape" || name == "lshape") {
        return Domain::LShape;
    }
    throw std::invalid_argument("unknown domain: " + name);
}

double domain_area(Domain domain) {
    switch (domain) {
    case Domain::UnitSquare: return 1.0;
    case Domain::LShape: return 3.0;
    case Domain::Imported: return std::numeric_limits<double>::quiet_NaN();
    }
    return std::numeric_limits<double>::quiet_NaN();
}

bool on_domain_boundary(Domain domain, Vec2 p, double tol) {
    auto near = [tol](double a, double b) { return std::abs(a - b) <= tol; };
    auto within = [tol](double v, double lo, double hi) {
        return v >= lo - tol && v <= hi + tol;
    };
    switch (domain) {
    case Domain::UnitSquare:
        return (near(p.x, 0.0) || near(p.x, 1.0)) ? within(p.y, 0.0, 1.0)
               : (near(p.y, 0.0) || near(p.y, 1.0)) && within(p.x, 0.0, 1.0);
    case Domain::LShape:
        if (near(p.x, -1.0) && within(p.y, -1.0, 1.0)) return true;
        if (near(p.y, 1.0) && within(p.x, -1.0, 1.0)) return true;
        if (near(p.x, 1.0) && within(p.y, 0.0, 1.0)) return true;
        if (near(p.y, -1.0) && within(p.x, -1.0, 0.0)) return true;
        if (near(p.x, 0.0) && within(p.y, -1.0, 0.0)) return true;
        if (near(p.y, 0.0) && within(p.x, 0.0, 1.0)) return true;
        return false;
    case Domain::Imported:
        return false;
    }
    return false;
}

double Mesh::signed_area(int t) const {
    const Vec2& a = vertices[triangles[t][0]];
    const Vec2& b = vertices[triangles[t][1]];
    const Vec2& c = vertices[triangles[t][2]];
    return 0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y));
}

double Mesh::total_area() const {
    double s = 0.0;
    for (int t = 0; t < n_triangles(); ++t) {
        s += signed_area(t);
    }
    return s;
}

double Mesh::triangle_diameter(int t) const {
    const Vec2& a = vertices[triangles[t][0]];
    const Vec2& b = vertices[triangles[t][1]];
    const Vec2& c = vertices[triangles[t][2]];
    return std::sqrt(std::max({dist2(a, b), dist2(b, c), dist2(c, a)}));
}

double Mesh::max_diameter() const {
    double h = 0.0;
    for (int t = 0; t < n_triangles(); ++t) {
        h = std::max(h, triangle_diameter(t));
    }
    return h;
}

double Mesh::min_angle() const {
    double amin = std::numeric_limits<double>::max();
    for (const auto& t : triangles) {
        for (int i = 0; i < 3; ++i) {
            const Vec2& p = vertices[t[i]];
            const Vec2& q = vertices[t[(i + 1) % 3]];
            const Vec2& r = vertices[t[(i + 2) % 3]];
            const double ux = q.x - p.x, uy = q.y - p.y;
            const double vx = r.x - p.x, vy = r.y - p.y;
            const double cosang = (ux * vx + uy * vy) /
                                  (std::sqrt(ux * ux + uy * uy) * std::sqrt(vx * vx + vy * vy));
            amin = std::min(amin, std::acos(std::clamp(cosang, -1.0, 1.0)));
        }
    }
    return amin;
}

double Mesh::hsq_proxy() const {
    return 4.0 * total_area() / static_cast<double>(n_triangles());
}

void Mesh::finalize() {
    for (int t = 0; t < n_triangles(); ++t) {
        if (signed_area(t) <= 0.0) {
            throw std::runtime_error("Mesh: nonpositive triangle area at index " + std::to_string(t));
        }
    }
    on_boundary.assign(vertices.size(), 0);
    for (const auto& [edge, count] : edge_incidence(*this)) {
        if (count == 1) {
            on_boundary[edge.first] = 1;
            on_boundary[edge.second] = 1;
        }
    }
    free_dof.assign(vertices.size(), -1);
    n_interior = 0;
    for (int v = 0; v < n_vertices(); ++v) {
        if (!on_boundary[v]) {
            free_dof[v] = n_interior++;
        }
    }
}

Mesh build_unit_square(int n) {
    if (n < 1) {
        throw std::invalid_argument("build_unit_square: n must be >= 1");
    }
    Mesh m;
    m.domain = Domain::UnitSquare;
    const int np = n + 1;
    m.vertices.reserve(static_cast<std::size_t>(np) * np);
    for (int j = 0; j < np; ++j) {
        for (int i = 0; i < np; ++i) {
            m.vertices.push_back({static_cast<double>(i) / n, static_cast<double>(j) / n});
        }
    }
    auto vid = [np](int i, int j) { return j * np + i; };
    m.triangles.reserve(2 * static_cast<std::size_t>(n) * n);
    for (int j = 0; j < n; ++j) {
        for (int i = 0; i < n; ++i) {
            m.triangles.push_back(tag_longest_edge(m, {vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)}));
            m.triangles.push_back(tag_longest_edge(m, {vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)}));
        }
    }
    m.finalize();
    return m;
}

Mesh build_lshape(int n) {
    if (n < 1) {
        throw std::invalid_argument("build_lshape: n must be >= 1");
    }
    Mesh m;
    m.domain = Domain::LShape;
    const int np = 2 * n + 1;
    const double h = 1.0 / n;
    std::vector<int> vid(static_cast<std::size_t>(np) * np, -1);
    for (int j = 0; j < np; ++j) {
        for (int i = 0; i < np; ++i) {
            const double x = -1.0 + i * h;
            const double y = -1.0 + j * h;
            if (x > 0.0 && y < 0.0) {
                continue; // inside the removed quadrant
            }
            vid[static_cast<std::size_t>(j) * np + i] = m.n_vertices();
            m.vertices.push_back({x, y});
        }
    }
    auto at = [&](int i, int j) { return vid[static_cast<std::size_t>(j) * np + i]; };
    for (int j = 0; j < 2 * n; ++j) {
        for (int i = 0; i < 2 * n; ++i) {
            const double xc = -1.0 + (i + 0.5) * h;
            const double yc = -1.0 + (j + 0.5) * h;
            if (xc > 0.0 && yc < 0.0) {
                continue;
            }
            const int v00 = at(i, j), v10 = at(i + 1, j);
            const int v01 = at(i, j + 1), v11 = at(i + 1, j + 1);
            m.triangles.push_back(tag_longest_edge(m, {v00, v10, v11}));
            m.triangles.push_back(tag_longest_edge(m, {v00, v11, v01}));
        }
    }
    m.finalize();
    return m;
}

SparseMatrix Prolongation::interior_map(const Mesh& coarse, const Mesh& fine) const {
    std::vector<SparseMatrix::Triplet> t;
    for (int fv = 0; fv < fine.n_vertices(); ++fv) {
        const int row = fine.free_dof[fv];
        if (row < 0) {
            continue;
        }
        for (int k = vertex_map.row_begin(fv); k < vertex_map.row_end(fv); ++k) {
            const int col = coarse.free_dof[vertex_map.col_index(k)];
            if (col >= 0) {
                t.push_back({row, col, vertex_map.value(k)});
            }
        }
    }
    return SparseMatrix::from_triplets(fine.n_interior, coarse.n_interior, std::move(t));
}

std::pair<Mesh, Prolongation> refine_regular(const Mesh& mesh) {
    Mesh fine;
    fine.domain = mesh.domain;
    fine.level_id = mesh.level_id + 1;
    fine.vertices = mesh.vertices;

    std::map<Edge, int> midpoint;
    auto mid = [&](int a, int b) {
        const Edge e = make_edge(a, b);
        auto it = midpoint.find(e);
        if (it != midpoint.end()) {
            return it->second;
        }
        const int v = fine.n_vertices();
        fine.vertices.push_back({0.5 * (mesh.vertices[a].x + mesh.vertices[b].x),
                                 0.5 * (mesh.vertices[a].y + mesh.vertices[b].y)});
        midpoint.emplace(e, v);
        return v;
    };

    fine.triangles.reserve(4 * mesh.triangles.size());
    for (const auto& t : mesh.triangles) {
        const int m01 = mid(t[0], t[1]);
        const int m12 = mid(t[1], t[2]);
        const int m20 = mid(t[2], t[0]);
        fine.triangles.push_back({t[0], m01, m20});
        fine.triangles.push_back({t[1], m12, m01});
        fine.triangles.push_back({t[2], m20, m12});
        fine.triangles.push_back({m01, m12, m20});
    }
    for (auto& t : fine.triangles) {
        t = tag_longest_edge(fine, t);
    }
    fine.finalize();

    std::vector<SparseMatrix::Triplet> pt;
    pt.reserve(mesh.vertices.size() + 2 * midpoint.size());
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        pt.push_back({v, v, 1.0});
    }
    for (const auto& [edge, v] : midpoint) {
        pt.push_back({v, edge.first, 0.5});
        pt.push_back({v, edge.second, 0.5});
    }
    Prolongation p{SparseMatrix::from_triplets(fine.n_vertices(), mesh.n_vertices(), std::move(pt))};
    return {std::move(fine), std::move(p)};
}

std::pair<Mesh, Prolongation> bisect_marked(const Mesh& mesh, const std::vector<int>& marked) {
    for (int t : marked) {
        if (t < 0 || t >= mesh.n_triangles()) {
            throw std::invalid_argument("bisect_marked: triangle index out of range");
        }
    }

    // Phase 1: close the set of edges to split. A triangle may only be cut
    // through its refinement edge first, so any split edge forces the owner's
    // refinement edge into the set.
    std::map<Edge, int> split; // edge -> midpoint vertex (assigned later)
    for (int t : marked) {
        const auto& tri = mesh.triangles[t];
        split.emplace(make_edge(tri[2], tri[0]), -1);
    }
    const int max_sweeps = mesh.n_triangles() + 1;
    int sweep = 0;
    for (; sweep < max_sweeps; ++sweep) {
        bool grew = false;
        for (const auto& tri : mesh.triangles) {
            const bool any = split.count(make_edge(tri[0], tri[1])) ||
                             split.count(make_edge(tri[1], tri[2])) ||
                             split.count(make_edge(tri[2], tri[0]));
            if (any && split.emplace(make_edge(tri[2], tri[0]), -1).second) {
                grew = true;
            }
        }
        if (!grew) {
            break;
        }
    }
    if (sweep == max_sweeps) {
        throw std::runtime_error("bisect_marked: conformity closure did not terminate (tagging bug)");
    }

    Mesh fine;
    fine.domain = mesh.domain;
    fine.level_id = mesh.level_id + 1;
    fine.vertices = mesh.vertices;
    for (auto& [edge, v] : split) {
        v = fine.n_vertices();
        fine.vertices.push_back({0.5 * (mesh.vertices[edge.first].x + mesh.vertices[edge.second].x),
                                 0.5 * (mesh.vertices[edge.first].y + mesh.vertices[edge.second].y)});
    }

    // Phase 2: cut. Children of (v0,v1,v2) through midpoint m of (v2,v0) are
    // (v1,m,v0) and (v2,m,v1); their refinement edges are the parent's other
    // two edges, so recursion depth is at most two.
    auto emit = [&](auto&& self, int v0, int v1, int v2) -> void {
        const auto it = split.find(make_edge(v2, v0));
        if (it == split.end()) {
            fine.triangles.push_back({v0, v1, v2});
            return;
        }
        const int m = it->second;
        self(self, v1, m, v0);
        self(self, v2, m, v1);
    };
    for (const auto& tri : mesh.triangles) {
        emit(emit, tri[0], tri[1], tri[2]);
    }
    fine.finalize();

    std::string why;
    if (!is_conforming(fine, &why)) {
        throw std::runtime_error("bisect_marked: refined mesh not conforming: " + why);
    }

    std::vector<SparseMatrix::Triplet> pt;
    pt.reserve(mesh.vertices.size() + 2 * split.size());
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        pt.push_back({v, v, 1.0});
    }
    for (const auto& [edge, v] : split) {
        pt.push_back({v, edge.first, 0.5});
        pt.push_back({v, edge.second, 0.5});
    }
    Prolongation p{SparseMatrix::from_triplets(fine.n_vertices(), mesh.n_vertices(), std::move(pt))};
    return {std::move(fine), std::move(p)};
}

void Hierarchy::append(Mesh mesh, Prolongation p) {
    if (meshes.empty()) {
        throw std::logic_error("Hierarchy::append: no base mesh");
    }
    if (p.vertex_map.rows() != mesh.n_vertices() ||
        p.vertex_map.cols() != meshes.back().n_vertices()) {
        throw std::invalid_argument("Hierarchy::append: prolongation shape mismatch");
    }
    meshes.push_back(std::move(mesh));
    prolongations.push_back(std::move(p));
}

SparseMatrix Hierarchy::composite_vertex_map(int from_level, int to_level) const {
    if (from_level < 0 || to_level >= levels() || from_level > to_level) {
        throw std::invalid_argument("composite_vertex_map: level out of range");
    }
    SparseMatrix result = SparseMatrix::identity(meshes[from_level].n_vertices());
    for (int k = from_level; k < to_level; ++k) {
        result = prolongations[k].vertex_map.multiply(result);
    }
    return result;
}

SparseMatrix Hierarchy::composite_interior_map(int from_level, int to_level) const {
    const SparseMatrix vmap = composite_vertex_map(from_level, to_level);
    const Mesh& coarse = meshes[from_level];
    const Mesh& fine = meshes[to_level];
    std::vector<SparseMatrix::Triplet> t;
    for (int fv = 0; fv < fine.n_vertices(); ++fv) {
        const int row = fine.free_dof[fv];
        if (row < 0) {
            continue;
        }
        for (int k = vmap.row_begin(fv); k < vmap.row_end(fv); ++k) {
            const int col = coarse.free_dof[vmap.col_index(k)];
            if (col >= 0) {
                t.push_back({row, col, vmap.value(k)});
            }
        }
    }
    return SparseMatrix::from_triplets(fine.n_interior, coarse.n_interior, std::move(t));
}

std::vector<SparseMatrix> Hierarchy::interior_ladder(int level) const {
    std::vector<SparseMatrix> ladder;
    for (int k = coarse_index; k < level; ++k) {
        ladder.push_back(prolongations[k].interior_map(meshes[k], meshes[k + 1]));
    }
    return ladder;
}

SparseMatrix composite_prolongation(const Hierarchy& hier, int from_level, int to_level) {
    return hier.composite_vertex_map(from_level, to_level);
}

Hierarchy build_uniform_hierarchy(Domain domain, int base_n, int levels) {
    if (levels < 1) {
        throw std::invalid_argument("build_uniform_hierarchy: levels must be >= 1");
    }
    Hierarchy hier;
    hier.meshes.push_back(domain == Domain::UnitSquare ? build_unit_square(base_n)
                                                       : build_lshape(base_n));
    for (int k = 1; k < levels; ++k) {
        auto [fine, p] = refine_regular(hier.meshes.back());
        hier.append(std::move(fine), std::move(p));
    }
    return hier;
}

bool is_conforming(const Mesh& mesh, std::string* why) {
    auto fail = [&](const std::string& msg) {
        if (why) {
            *why = msg;
        }
        return false;
    };
    for (int t = 0; t < mesh.n_triangles(); ++t) {
        if (mesh.signed_area(t) <= 0.0) {
            return fail("triangle " + std::to_string(t) + " has nonpositive area");
        }
    }
    for (const auto& [edge, count] : edge_incidence(mesh)) {
        if (count > 2) {
            return fail("edge shared by more than two triangles");
        }
        if (count == 1 && mesh.domain != Domain::Imported) {
            const Vec2& a = mesh.vertices[edge.first];
            const Vec2& b = mesh.vertices[edge.second];
            const Vec2 m{0.5 * (a.x + b.x), 0.5 * (a.y + b.y)};
            if (!on_domain_boundary(mesh.domain, a) || !on_domain_boundary(mesh.domain, b) ||
                !on_domain_boundary(mesh.domain, m)) {
                return fail("interior edge with a single incident triangle (hanging node)");
            }
        }
    }
    const double area = domain_area(mesh.domain);
    if (!std::isnan(area) && std::abs(mesh.total_area() - area) > 1e-12 * area) {
        return fail("triangle areas do not sum to the domain area");
    }
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        if (mesh.domain != Domain::Imported) {
            const bool geom = on_domain_boundary(mesh.domain, mesh.vertices[v]);
            if (geom != static_cast<bool>(mesh.on_boundary[v])) {
                return fail("boundary flag mismatch at vertex " + std::to_string(v));
            }
        }
    }
    return true;
}

double eval_p1(const Mesh& mesh, const Vector& vertex_values, Vec2 p) {
    if (vertex_values.size() != mesh.n_vertices()) {
        throw std::invalid_argument("eval_p1: value vector must cover all vertices");
    }
    constexpr double tol = 1e-12;
    for (const auto& t : mesh.triangles) {
        const Vec2& a = mesh.vertices[t[0]];
        const Vec2& b = mesh.vertices[t[1]];
        const Vec2& c = mesh.vertices[t[2]];
        const double det = (b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y);
        const double l1 = ((p.x - a.x) * (c.y - a.y) - (c.x - a.x) * (p.y - a.y)) / det;
        const double l2 = ((b.x - a.x) * (p.y - a.y) - (p.x - a.x) * (b.y - a.y)) / det;
        const double l0 = 1.0 - l1 - l2;
        if (l0 >= -tol && l1 >= -tol && l2 >= -tol) {
            return l0 * vertex_values[t[0]] + l1 * vertex_values[t[1]] + l2 * vertex_values[t[2]];
        }
    }
    throw std::invalid_argument("eval_p1: point outside the mesh");
}

void write_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) {
        throw std::runtime_error("write_mesh: cannot open " + path);
    }
    out << mesh.n_vertices() << ' ' << mesh.n_triangles() << '\n';
    char line[128];
    for (int v = 0; v < mesh.n_vertices(); ++v) {
        std::snprintf(line, sizeof(line), "%.17g %.17g %d\n", mesh.vertices[v].x,
                      mesh.vertices[v].y, static_cast<int>(mesh.on_boundary[v]));
        out << line;
    }
    for (const auto& t : mesh.triangles) {
        out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
    }
}

Mesh read_mesh(const std::string& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("read_mesh: cannot open " + path);
    }
    int nv = 0, nt = 0;
    if (!(in >> nv >> nt) || nv <= 0 || nt <= 0) {
        throw std::runtime_error("read_mesh: bad header in " + path);
    }
    Mesh m;
    m.domain = Domain::Imported;
    m.vertices.resize(nv);
    std::vector<int> flags(nv);
    for (int v = 0; v < nv; ++v) {
        if (!(in >> m.vertices[v].x >> m.vertices[v].y >> flags[v])) {
            throw std::runtime_error("read_mesh: truncated vertex list in " + path);
        }
    }
    m.triangles.resize(nt);
    for (int t = 0; t < nt; ++t) {
        auto& tri = m.triangles[t];
        if (!(in >> tri[0] >> tri[1] >> tri[2])) {
            throw std::runtime_error("read_mesh: truncated triangle list in " + path);
        }
        for (int v : tri) {
            if (v < 0 || v >= nv) {
                throw std::runtime_error("read_mesh: triangle index out of range in " + path);
            }
        }
        tri = tag_longest_edge(m, tri);
    }
    m.finalize();
    for (int v = 0; v < nv; ++v) {
        if (flags[v] != static_cast<int>(m.on_boundary[v])) {
            throw std::runtime_error("read_mesh: stored boundary flags disagree with mesh topology");
        }
    }
    return m;
}

} // namespace gpe
