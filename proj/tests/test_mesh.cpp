#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "gpe/mesh.hpp"

#include <cstdio>
#include <filesystem>
#include <random>
#include <set>

using namespace gpe;

TEST_CASE("unit square builder: counts, area, boundary flags") {
    CHECK_THROWS_AS(build_unit_square(0), std::invalid_argument);

    const Mesh m1 = build_unit_square(1);
    CHECK(m1.n_vertices() == 4);
    CHECK(m1.n_triangles() == 2);
    CHECK(m1.n_interior == 0);

    const Mesh m2 = build_unit_square(2);
    CHECK(m2.n_vertices() == 9);
    CHECK(m2.n_triangles() == 8);
    CHECK(m2.n_interior == 1);

    const Mesh m6 = build_unit_square(6);
    CHECK(m6.n_vertices() == 49);
    CHECK(m6.n_triangles() == 72);
    CHECK(m6.total_area() == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(is_conforming(m6));
}

TEST_CASE("l-shape builder: counts, area, reentrant corner") {
    CHECK_THROWS_AS(build_lshape(0), std::invalid_argument);

    const Mesh m1 = build_lshape(1);
    CHECK(m1.n_vertices() == 8);
    CHECK(m1.n_triangles() == 6);

    const Mesh m2 = build_lshape(2);
    CHECK(m2.n_vertices() == 21);
    CHECK(m2.n_triangles() == 24);
    CHECK(m2.total_area() == doctest::Approx(3.0).epsilon(1e-13));

    for (int n : {1, 2, 3, 5}) {
        const Mesh m = build_lshape(n);
        CHECK(is_conforming(m));
        bool corner_found = false;
        for (int v = 0; v < m.n_vertices(); ++v) {
            if (m.vertices[v].x == 0.0 && m.vertices[v].y == 0.0) {
                corner_found = true;
                CHECK(m.on_boundary[v] == 1);
            }
        }
        CHECK(corner_found);
    }
}

TEST_CASE("regular refinement: counts, similarity, prolongation") {
    const Mesh coarse = build_unit_square(1);
    auto [fine, p] = refine_regular(coarse);
    CHECK(fine.n_triangles() == 8);
    CHECK(fine.n_vertices() == 9);
    CHECK(is_conforming(fine));

    SUBCASE("max diameter halves exactly") {
        CHECK(fine.max_diameter() == doctest::Approx(0.5 * coarse.max_diameter()).epsilon(1e-15));
    }
    SUBCASE("min angle is preserved (similar children)") {
        CHECK(fine.min_angle() == doctest::Approx(coarse.min_angle()).epsilon(1e-13));
    }
    SUBCASE("affine reproduction x1 + 2 x2") {
        Vector vc(coarse.n_vertices()), vf(fine.n_vertices());
        for (int v = 0; v < coarse.n_vertices(); ++v) {
            vc[v] = coarse.vertices[v].x + 2.0 * coarse.vertices[v].y;
        }
        for (int v = 0; v < fine.n_vertices(); ++v) {
            vf[v] = fine.vertices[v].x + 2.0 * fine.vertices[v].y;
        }
        const Vector prolonged = p.apply_vertex(vc);
        CHECK((prolonged - vf).cwiseAbs().maxCoeff() < 1e-15);
    }
    SUBCASE("row structure: one 1.0 or two 0.5") {
        const SparseMatrix& vm = p.vertex_map;
        for (int r = 0; r < vm.rows(); ++r) {
            const int entries = vm.row_end(r) - vm.row_begin(r);
            if (entries == 1) {
                CHECK(vm.value(vm.row_begin(r)) == 1.0);
            } else {
                REQUIRE(entries == 2);
                CHECK(vm.value(vm.row_begin(r)) == 0.5);
                CHECK(vm.value(vm.row_begin(r) + 1) == 0.5);
            }
        }
    }
}

TEST_CASE("area conservation and shape regularity across uniform levels") {
    Hierarchy hier = build_uniform_hierarchy(Domain::LShape, 2, 4);
    const double angle0 = hier.mesh(0).min_angle();
    for (int k = 0; k < hier.levels(); ++k) {
        CHECK(hier.mesh(k).total_area() == doctest::Approx(3.0).epsilon(1e-12));
        CHECK(hier.mesh(k).min_angle() == doctest::Approx(angle0).epsilon(1e-12));
        CHECK(is_conforming(hier.mesh(k)));
    }
    SUBCASE("triangle count quadruples, diameter halves") {
        for (int k = 1; k < hier.levels(); ++k) {
            CHECK(hier.mesh(k).n_triangles() == 4 * hier.mesh(k - 1).n_triangles());
            CHECK(hier.mesh(k).max_diameter() ==
                  doctest::Approx(0.5 * hier.mesh(k - 1).max_diameter()).epsilon(1e-14));
        }
    }
}

TEST_CASE("bisect_marked: empty, all, single with closure") {
    const Mesh m = build_unit_square(2);

    SUBCASE("empty marking keeps the mesh and yields the identity") {
        auto [same, p] = bisect_marked(m, {});
        CHECK(same.n_triangles() == m.n_triangles());
        CHECK(same.n_vertices() == m.n_vertices());
        for (int r = 0; r < p.vertex_map.rows(); ++r) {
            REQUIRE(p.vertex_map.row_end(r) - p.vertex_map.row_begin(r) == 1);
            CHECK(p.vertex_map.value(p.vertex_map.row_begin(r)) == 1.0);
            CHECK(p.vertex_map.col_index(p.vertex_map.row_begin(r)) == r);
        }
    }
    SUBCASE("marking everything bisects every triangle and keeps the area") {
        std::vector<int> all(m.n_triangles());
        for (int t = 0; t < m.n_triangles(); ++t) all[t] = t;
        auto [fine, p] = bisect_marked(m, all);
        CHECK(fine.n_triangles() >= 2 * m.n_triangles());
        CHECK(fine.total_area() == doctest::Approx(1.0).epsilon(1e-13));
        CHECK(is_conforming(fine));
    }
    SUBCASE("single mark pulls in its refinement-edge neighbour") {
        // the marked triangle and the sibling sharing its hypotenuse split,
        // one midpoint vertex appears: 8 - 2 + 4 = 10 triangles
        auto [fine, p] = bisect_marked(m, {0});
        CHECK(is_conforming(fine));
        CHECK(fine.n_triangles() == 10);
        CHECK(fine.n_vertices() == m.n_vertices() + 1);
        CHECK(fine.n_triangles() - m.n_triangles() >= 2);
    }
    SUBCASE("rejects out-of-range indices") {
        CHECK_THROWS_AS(bisect_marked(m, {99}), std::invalid_argument);
    }
}

TEST_CASE("bisection chains stay conforming and nested") {
    Mesh m = build_lshape(1);
    std::mt19937 rng(7);
    for (int round = 0; round < 6; ++round) {
        std::uniform_int_distribution<int> pick(0, m.n_triangles() - 1);
        std::set<int> marked;
        for (int i = 0; i < std::max(1, m.n_triangles() / 4); ++i) marked.insert(pick(rng));
        auto [fine, p] = bisect_marked(m, {marked.begin(), marked.end()});
        CHECK(is_conforming(fine));
        CHECK(fine.total_area() == doctest::Approx(3.0).epsilon(1e-12));

        // nestedness: prolonged coarse values agree with the coarse function
        // at sampled points
        Vector vc(m.n_vertices());
        for (int v = 0; v < m.n_vertices(); ++v) {
            vc[v] = std::sin(1.0 + v); // arbitrary but fixed
        }
        const Vector vf = p.apply_vertex(vc);
        std::uniform_real_distribution<double> coord(-0.99, 0.99);
        int tested = 0;
        while (tested < 20) {
            Vec2 pt{coord(rng), coord(rng)};
            if (pt.x > 0.0 && pt.y < 0.0) continue;
            CHECK(eval_p1(m, vc, pt) == doctest::Approx(eval_p1(fine, vf, pt)).epsilon(1e-12));
            ++tested;
        }
        m = fine;
    }
}

TEST_CASE("composite prolongation") {
    Hierarchy hier = build_uniform_hierarchy(Domain::UnitSquare, 2, 3);

    SUBCASE("from == to is the identity") {
        const SparseMatrix eye = composite_prolongation(hier, 1, 1);
        CHECK(eye.rows() == hier.mesh(1).n_vertices());
        for (int r = 0; r < eye.rows(); ++r) {
            REQUIRE(eye.row_end(r) - eye.row_begin(r) == 1);
            CHECK(eye.value(eye.row_begin(r)) == 1.0);
        }
    }
    SUBCASE("original vertices keep a single unit entry after two refinements") {
        const SparseMatrix p = composite_prolongation(hier, 0, 2);
        for (int r = 0; r < hier.mesh(0).n_vertices(); ++r) {
            REQUIRE(p.row_end(r) - p.row_begin(r) == 1);
            CHECK(p.value(p.row_begin(r)) == 1.0);
            CHECK(p.col_index(p.row_begin(r)) == r);
        }
    }
    SUBCASE("prolonged hat function: 1 at its vertex, 0 at non-neighbours") {
        const SparseMatrix p = composite_prolongation(hier, 0, 2);
        const Mesh& coarse = hier.mesh(0);
        const Mesh& fine = hier.mesh(2);
        const int center = 4; // vertex (0.5, 0.5) of the n=2 square
        REQUIRE(coarse.vertices[center].x == 0.5);
        REQUIRE(coarse.vertices[center].y == 0.5);
        Vector hat = Vector::Zero(coarse.n_vertices());
        hat[center] = 1.0;
        const Vector fine_values = p.apply(hat);
        for (int v = 0; v < coarse.n_vertices(); ++v) {
            const double expected = eval_p1(coarse, hat, coarse.vertices[v]);
            CHECK(eval_p1(fine, fine_values, coarse.vertices[v]) ==
                  doctest::Approx(expected).epsilon(1e-14));
        }
        CHECK(eval_p1(fine, fine_values, {0.5, 0.5}) == doctest::Approx(1.0));
        CHECK(eval_p1(fine, fine_values, {0.0, 0.0}) == doctest::Approx(0.0));
    }
    SUBCASE("nestedness at random points across the whole ladder") {
        const SparseMatrix p = composite_prolongation(hier, 0, 2);
        Vector vc(hier.mesh(0).n_vertices());
        for (int v = 0; v < vc.size(); ++v) vc[v] = 0.3 * v * v - v;
        const Vector vf = p.apply(vc);
        std::mt19937 rng(11);
        std::uniform_real_distribution<double> coord(0.0, 1.0);
        for (int i = 0; i < 100; ++i) {
            const Vec2 pt{coord(rng), coord(rng)};
            CHECK(eval_p1(hier.mesh(0), vc, pt) ==
                  doctest::Approx(eval_p1(hier.mesh(2), vf, pt)).epsilon(1e-12));
        }
    }
    SUBCASE("level out of range") {
        CHECK_THROWS_AS(composite_prolongation(hier, 2, 1), std::invalid_argument);
        CHECK_THROWS_AS(composite_prolongation(hier, 0, 3), std::invalid_argument);
    }
}

TEST_CASE("mesh text I/O round trip") {
    const Mesh m = build_lshape(2);
    const std::string path = (std::filesystem::temp_directory_path() / "gpe_mesh_io.txt").string();
    write_mesh(m, path);
    const Mesh r = read_mesh(path);
    REQUIRE(r.n_vertices() == m.n_vertices());
    REQUIRE(r.n_triangles() == m.n_triangles());
    for (int v = 0; v < m.n_vertices(); ++v) {
        CHECK(r.vertices[v].x == m.vertices[v].x);
        CHECK(r.vertices[v].y == m.vertices[v].y);
        CHECK(r.on_boundary[v] == m.on_boundary[v]);
    }
    CHECK(r.total_area() == doctest::Approx(3.0).epsilon(1e-13));
    std::filesystem::remove(path);
}
