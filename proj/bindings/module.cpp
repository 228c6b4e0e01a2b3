#include "gpe/correction.hpp"
#include "gpe/estimator.hpp"
#include "gpe/harness.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

namespace py = pybind11;

namespace {

Eigen::MatrixXd vertex_array(const gpe::Mesh& m) {
    Eigen::MatrixXd out(m.n_vertices(), 2);
    for (int v = 0; v < m.n_vertices(); ++v) {
        out(v, 0) = m.vertices[v].x;
        out(v, 1) = m.vertices[v].y;
    }
    return out;
}

Eigen::MatrixXi triangle_array(const gpe::Mesh& m) {
    Eigen::MatrixXi out(m.n_triangles(), 3);
    for (int t = 0; t < m.n_triangles(); ++t) {
        for (int i = 0; i < 3; ++i) {
            out(t, i) = m.triangles[t][i];
        }
    }
    return out;
}

Eigen::VectorXi boundary_array(const gpe::Mesh& m) {
    Eigen::VectorXi out(m.n_vertices());
    for (int v = 0; v < m.n_vertices(); ++v) {
        out[v] = m.on_boundary[v];
    }
    return out;
}

py::tuple coo_tuple(const gpe::SparseMatrix& a) {
    const int nnz = a.nnz();
    Eigen::VectorXi rows(nnz), cols(nnz);
    Eigen::VectorXd vals(nnz);
    int k = 0;
    for (int r = 0; r < a.rows(); ++r) {
        for (int i = a.row_begin(r); i < a.row_end(r); ++i, ++k) {
            rows[k] = r;
            cols[k] = a.col_index(i);
            vals[k] = a.value(i);
        }
    }
    return py::make_tuple(rows, cols, vals, py::make_tuple(a.rows(), a.cols()));
}

py::dict work_dict(const gpe::WorkReport& w) {
    py::list levels;
    for (const auto& l : w.levels) {
        py::dict d;
        d["level"] = l.level;
        d["n_dofs"] = l.n_dofs;
        d["vcycles"] = l.vcycles;
        d["scf_iters"] = l.scf_iters;
        d["scf_converged"] = l.scf_converged;
        d["t_total"] = l.t_total;
        levels.append(d);
    }
    py::dict out;
    out["levels"] = levels;
    out["composite_dim"] = w.composite_dim;
    out["mh_proxy"] = w.mh_proxy;
    out["mh1_time"] = w.mh1_time;
    out["total_time"] = w.total_time;
    return out;
}

gpe::FeFunction make_function(const gpe::Mesh& mesh, const gpe::Vector& coeffs) {
    if (coeffs.size() != mesh.n_interior) {
        throw std::invalid_argument("coefficient count does not match the mesh's interior dofs");
    }
    return gpe::FeFunction{mesh.level_id, coeffs};
}

} // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Finite element ground states of the Gross-Pitaevskii equation: "
              "multilevel-correction multigrid scheme and direct baseline";

    py::class_<gpe::Mesh>(m, "Mesh")
        .def_property_readonly("n_vertices", &gpe::Mesh::n_vertices)
        .def_property_readonly("n_triangles", &gpe::Mesh::n_triangles)
        .def_readonly("n_interior", &gpe::Mesh::n_interior)
        .def_readonly("level_id", &gpe::Mesh::level_id)
        .def_property_readonly("vertices", &vertex_array)
        .def_property_readonly("triangles", &triangle_array)
        .def_property_readonly("boundary", &boundary_array)
        .def("total_area", &gpe::Mesh::total_area)
        .def("max_diameter", &gpe::Mesh::max_diameter)
        .def("min_angle", &gpe::Mesh::min_angle);

    py::class_<gpe::SparseMatrix>(m, "SparseMatrix")
        .def_property_readonly("shape",
                               [](const gpe::SparseMatrix& a) {
                                   return py::make_tuple(a.rows(), a.cols());
                               })
        .def_property_readonly("nnz", &gpe::SparseMatrix::nnz)
        .def("to_coo", &coo_tuple)
        .def("todense", &gpe::SparseMatrix::dense)
        .def("dot", [](const gpe::SparseMatrix& a, const gpe::Vector& x) { return a.apply(x); });

    py::class_<gpe::Prolongation>(m, "Prolongation")
        .def_readonly("vertex_map", &gpe::Prolongation::vertex_map);

    py::class_<gpe::Hierarchy>(m, "Hierarchy")
        .def_property_readonly("levels", &gpe::Hierarchy::levels)
        .def("mesh", &gpe::Hierarchy::mesh, py::return_value_policy::reference_internal)
        .def("composite_vertex_map", &gpe::Hierarchy::composite_vertex_map)
        .def("refine_regular",
             [](gpe::Hierarchy& h) {
                 auto [fine, p] = gpe::refine_regular(h.finest());
                 h.append(std::move(fine), std::move(p));
             })
        .def("bisect_marked", [](gpe::Hierarchy& h, const std::vector<int>& marked) {
            auto [fine, p] = gpe::bisect_marked(h.finest(), marked);
            h.append(std::move(fine), std::move(p));
        });

    py::class_<gpe::ProblemSpec>(m, "ProblemSpec")
        .def(py::init([](const std::string& domain, double gamma1, double gamma2, double zeta) {
                 gpe::ProblemSpec spec{gpe::domain_from_name(domain), gamma1, gamma2, zeta};
                 spec.validate();
                 return spec;
             }),
             py::arg("domain") = "unit-square", py::arg("gamma1") = 1.0, py::arg("gamma2") = 1.0,
             py::arg("zeta") = 1.0)
        .def_readonly("gamma1", &gpe::ProblemSpec::gamma1)
        .def_readonly("gamma2", &gpe::ProblemSpec::gamma2)
        .def_readonly("zeta", &gpe::ProblemSpec::zeta);

    py::class_<gpe::ScfConfig>(m, "ScfConfig")
        .def(py::init<>())
        .def_readwrite("lambda_tol", &gpe::ScfConfig::lambda_tol)
        .def_readwrite("du_tol", &gpe::ScfConfig::du_tol)
        .def_readwrite("max_iters", &gpe::ScfConfig::max_iters)
        .def_readwrite("mixing", &gpe::ScfConfig::mixing)
        .def_readwrite("dense_threshold", &gpe::ScfConfig::dense_threshold);

    py::class_<gpe::EigenPair>(m, "EigenPair")
        .def_readonly("lambda_", &gpe::EigenPair::lambda)
        .def_property_readonly("coeffs",
                               [](const gpe::EigenPair& p) { return p.u.coeffs; })
        .def_readonly("residual", &gpe::EigenPair::residual)
        .def_readonly("scf_iters", &gpe::EigenPair::scf_iters)
        .def_readonly("converged", &gpe::EigenPair::converged);

    m.def("build_unit_square", &gpe::build_unit_square, py::arg("n"));
    m.def("build_lshape", &gpe::build_lshape, py::arg("n"));
    m.def(
        "build_hierarchy",
        [](const std::string& domain, int base_n, int levels) {
            return gpe::build_uniform_hierarchy(gpe::domain_from_name(domain), base_n, levels);
        },
        py::arg("domain"), py::arg("base_n"), py::arg("levels"));

    m.def("assemble_stiffness",
          py::overload_cast<const gpe::Mesh&>(&gpe::assemble_stiffness));
    m.def("assemble_mass", py::overload_cast<const gpe::Mesh&>(&gpe::assemble_mass));
    m.def("assemble_potential",
          py::overload_cast<const gpe::Mesh&, const gpe::ProblemSpec&>(&gpe::assemble_potential));
    m.def(
        "assemble_nonlinear",
        [](const gpe::Mesh& mesh, const gpe::Vector& coeffs, double zeta) {
            return gpe::assemble_nonlinear(mesh, make_function(mesh, coeffs), zeta);
        },
        py::arg("mesh"), py::arg("coeffs"), py::arg("zeta"));

    m.def(
        "solve_direct",
        [](const gpe::Hierarchy& hier, int level, const gpe::ProblemSpec& spec,
           const gpe::ScfConfig& cfg) { return gpe::solve_gpe_direct(hier, level, spec, cfg); },
        py::arg("hierarchy"), py::arg("level"), py::arg("spec"),
        py::arg("config") = gpe::ScfConfig{});

    m.def(
        "multigrid_scheme",
        [](const gpe::Hierarchy& hier, const gpe::ProblemSpec& spec, double c_mg, double c_scf,
           const gpe::ScfConfig& scf) {
            gpe::MlcOptions options;
            options.c_mg = c_mg;
            options.c_scf = c_scf;
            options.scf = scf;
            auto [pair, work] = gpe::multigrid_scheme(hier, spec, options);
            return py::make_tuple(pair, work_dict(work));
        },
        py::arg("hierarchy"), py::arg("spec"), py::arg("c_mg") = 0.1, py::arg("c_scf") = 0.01,
        py::arg("scf") = gpe::ScfConfig{});

    m.def(
        "zz_estimate",
        [](const gpe::Mesh& mesh, const gpe::Vector& coeffs) {
            const gpe::ZzIndicators est = gpe::zz_estimate(mesh, make_function(mesh, coeffs));
            return py::make_tuple(est.per_element, est.total);
        },
        py::arg("mesh"), py::arg("coeffs"));

    m.def(
        "dorfler_mark",
        [](const gpe::Vector& per_element, double theta) {
            gpe::ZzIndicators est;
            est.per_element = per_element;
            est.total = std::sqrt(per_element.squaredNorm());
            return gpe::dorfler_mark(est, theta);
        },
        py::arg("indicators"), py::arg("theta"));

    m.def(
        "nondimensionalize",
        [](double mass, double scattering_length, double n_atoms, double trap_c1, double trap_c2,
           double hbar, const std::string& domain) {
            const gpe::NondimResult r = gpe::nondimensionalize(
                gpe::PhysicalParams{mass, scattering_length, n_atoms, trap_c1, trap_c2, hbar, domain});
            return py::make_tuple(r.spec, r.lambda_to_mu);
        },
        py::arg("mass"), py::arg("scattering_length"), py::arg("n_atoms"), py::arg("trap_c1") = 1.0,
        py::arg("trap_c2") = 1.0, py::arg("hbar") = 1.0, py::arg("domain") = "unit-square");
}
