#include "gpe/correction.hpp"

#include <Eigen/Cholesky>

#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gpe {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

bool has_mixed_sign(const Vector& u) {
    const double scale = u.cwiseAbs().maxCoeff();
    if (scale == 0.0) {
        return false;
    }
    const double tol = 1e-6 * scale;
    return u.minCoeff() < -tol && u.maxCoeff() > tol;
}

} // namespace

void MlcOptions::validate() const {
    if (!(c_mg > 0.0) || !(c_scf > 0.0)) {
        throw std::invalid_argument("MlcOptions: tolerance constants must be positive");
    }
    if (vh_level < 0) {
        throw std::invalid_argument("MlcOptions: vh_level must be >= 0");
    }
    scf.validate();
}

Vector CorrectionSpace::expand(const Vector& y) const {
    if (y.size() != dim()) {
        throw std::invalid_argument("CorrectionSpace::expand: dimension mismatch");
    }
    const int nh = dim() - 1;
    return p_h.apply(y.head(nh)) + y[nh] * u_tilde;
}

namespace {

/// [P | u]^T N(w) [P | u] accumulated element by element, skipping the
/// assembled fine-level matrix. Runs once per composite SCF iteration.
Eigen::MatrixXd composite_nonlinear_block(const Mesh& mesh, const SparseMatrix& p_h,
                                          const Vector& u_tilde, const Vector& w_interior,
                                          double zeta) {
    const int nh = p_h.cols();
    Eigen::MatrixXd block = Eigen::MatrixXd::Zero(nh + 1, nh + 1);
    const Vector w_vertex = to_vertex_values(mesh, FeFunction{mesh.level_id, w_interior});

    struct Entry {
        int col;
        double val;
    };
    for_each_nonlinear_element(
        mesh, w_vertex, zeta,
        [&](const std::array<int, 3>& verts, const std::array<std::array<double, 3>, 3>& k) {
            std::array<std::array<Entry, 8>, 3> rows;
            std::array<int, 3> counts{};
            for (int i = 0; i < 3; ++i) {
                const int dof = mesh.free_dof[verts[i]];
                if (dof < 0) {
                    continue;
                }
                // a composite row holds the coarse hat values at one point:
                // at most three entries, plus the enrichment column
                if (p_h.row_end(dof) - p_h.row_begin(dof) > 7) {
                    throw std::logic_error("composite prolongation row wider than expected");
                }
                for (int e = p_h.row_begin(dof); e < p_h.row_end(dof); ++e) {
                    rows[i][counts[i]++] = {p_h.col_index(e), p_h.value(e)};
                }
                if (u_tilde[dof] != 0.0) {
                    rows[i][counts[i]++] = {nh, u_tilde[dof]};
                }
            }
            for (int i = 0; i < 3; ++i) {
                for (int j = 0; j < 3; ++j) {
                    const double kij = k[i][j];
                    for (int a = 0; a < counts[i]; ++a) {
                        for (int b = 0; b < counts[j]; ++b) {
                            block(rows[i][a].col, rows[j][b].col) +=
                                rows[i][a].val * kij * rows[j][b].val;
                        }
                    }
                }
            }
        });
    return block;
}

/// P^T X P accumulated densely; the composite dimension is small, so this
/// avoids building a sorted sparse result per SCF iteration.
Eigen::MatrixXd dense_congruence(const SparseMatrix& x, const SparseMatrix& p) {
    Eigen::MatrixXd out = Eigen::MatrixXd::Zero(p.cols(), p.cols());
    for (int i = 0; i < x.rows(); ++i) {
        for (int k = x.row_begin(i); k < x.row_end(i); ++k) {
            const int j = x.col_index(k);
            const double v = x.value(k);
            for (int ki = p.row_begin(i); ki < p.row_end(i); ++ki) {
                for (int kj = p.row_begin(j); kj < p.row_end(j); ++kj) {
                    out(p.col_index(ki), p.col_index(kj)) += p.value(ki) * v * p.value(kj);
                }
            }
        }
    }
    return out;
}

} // namespace

Eigen::MatrixXd CorrectionSpace::congruence(const SparseMatrix& fine_matrix) const {
    const int nh = dim() - 1;
    Eigen::MatrixXd block(nh + 1, nh + 1);
    block.topLeftCorner(nh, nh) = dense_congruence(fine_matrix, p_h);
    const Vector xu = fine_matrix.apply(u_tilde);
    block.block(0, nh, nh, 1) = p_h.apply_transpose(xu);
    block.block(nh, 0, 1, nh) = block.block(0, nh, nh, 1).transpose();
    block(nh, nh) = u_tilde.dot(xu);
    return block;
}

Vector aux_rhs(double lambda, const FeFunction& u_bar, const OperatorParts& fine_parts) {
    return lambda * fine_parts.mass.apply(u_bar.coeffs) - apply_operator(fine_parts, u_bar);
}

CorrectionSpace build_correction_space(const Hierarchy& hier, int level, Vector u_tilde,
                                       const OperatorParts& fine_parts, int vh_level) {
    CorrectionSpace cs;
    cs.p_h = hier.composite_interior_map(vh_level, level);
    const int nh = cs.p_h.cols();

    const SparseMatrix& mass = fine_parts.mass;
    const Eigen::MatrixXd b_hh = dense_congruence(mass, cs.p_h);
    Eigen::LLT<Eigen::MatrixXd> llt(b_hh);
    if (nh > 0 && llt.info() != Eigen::Success) {
        throw std::runtime_error("build_correction_space: coarse mass block is not SPD");
    }

    const double suu = u_tilde.dot(mass.apply(u_tilde));
    if (!(suu > 0.0)) {
        throw std::runtime_error("build_correction_space: enrichment direction has zero mass norm");
    }
    cs.coarse_component = Vector::Zero(nh);
    if (nh > 0) {
        const Vector b = cs.p_h.apply_transpose(mass.apply(u_tilde));
        const Vector c = llt.solve(b);
        const double schur = suu - b.dot(c);
        cs.schur_ratio = schur / suu;
        if (cs.schur_ratio <= 1e-10) {
            // u_tilde is numerically inside V_H; M-orthogonalize it against
            // the coarse space. The span of the composite basis is unchanged.
            u_tilde -= cs.p_h.apply(c);
            cs.coarse_component = c;
            cs.orthogonalized = true;
            const double rem = u_tilde.dot(mass.apply(u_tilde));
            if (!(rem > 1e-14 * suu)) {
                std::ostringstream msg;
                msg << "build_correction_space: composite space is rank deficient "
                    << "(M-Schur ratio " << cs.schur_ratio << ", remainder " << rem
                    << " after orthogonalization); enrichment lies in V_H";
                throw std::runtime_error(msg.str());
            }
        }
    }
    cs.u_tilde = std::move(u_tilde);

    const SparseMatrix linear = fine_parts.linear();
    cs.a0_block = cs.congruence(linear);
    cs.m_block = cs.congruence(mass);

    Eigen::LLT<Eigen::MatrixXd> check(cs.m_block);
    if (check.info() != Eigen::Success) {
        throw std::runtime_error("build_correction_space: composite mass indefinite after guard");
    }
    return cs;
}

EigenPair one_correction_step(const Hierarchy& hier, const ProblemSpec& spec, int target_level,
                              double lambda_k, const FeFunction& u_k, const MlcOptions& options,
                              WorkReport::Level* stats, const OperatorParts* fine_parts) {
    options.validate();
    spec.validate();
    if (target_level < 0 || target_level >= hier.levels()) {
        throw std::invalid_argument("one_correction_step: target level out of range");
    }
    const int source_level = u_k.level_id;
    if (source_level < 0 || source_level > target_level) {
        throw std::invalid_argument("one_correction_step: iterate level must not exceed the target");
    }
    const Mesh& mesh = hier.mesh(target_level);

    WorkReport::Level local;
    local.level = target_level;
    local.n_dofs = mesh.n_interior;
    const auto t_start = Clock::now();

    OperatorParts assembled;
    if (fine_parts == nullptr) {
        assembled = assemble_parts(mesh, spec);
        fine_parts = &assembled;
    }

    // Step 1: auxiliary problem on the pure stiffness form, solved by
    // multigrid to an accuracy proportional to h^2.
    const auto t_aux = Clock::now();
    Vector u_bar_coeffs;
    if (source_level == target_level) {
        u_bar_coeffs = u_k.coeffs;
    } else {
        u_bar_coeffs = hier.composite_interior_map(source_level, target_level).apply(u_k.coeffs);
    }
    const FeFunction u_bar{mesh.level_id, u_bar_coeffs};
    const Vector rhs = aux_rhs(lambda_k, u_bar, *fine_parts);

    const MgWorkspace mg(fine_parts->stiffness, hier.interior_ladder(target_level));
    local.mg_rel_tol = options.c_mg * mesh.hsq_proxy();
    const MgWorkspace::SolveResult aux = mg.solve(rhs, local.mg_rel_tol);
    if (!aux.converged && rhs.norm() > 0.0) {
        std::ostringstream msg;
        msg << "one_correction_step: auxiliary multigrid solve stopped at relative residual "
            << aux.rel_residual << " after " << aux.cycles << " cycles";
        throw std::runtime_error(msg.str());
    }
    local.vcycles = aux.cycles;
    const Vector u_tilde = u_bar_coeffs + aux.x;
    local.t_aux = seconds_since(t_aux);

    // Step 2: eigenproblem on V_H + span{u_tilde}.
    const auto t_space = Clock::now();
    const CorrectionSpace cs =
        build_correction_space(hier, target_level, u_tilde, *fine_parts, options.vh_level);
    const SparseMatrix a0 = SparseMatrix::from_dense(cs.a0_block);
    const SparseMatrix m = SparseMatrix::from_dense(cs.m_block);
    local.t_space = seconds_since(t_space);

    const auto t_eigen = Clock::now();
    ScfProblem problem;
    problem.linear = &a0;
    problem.mass = &m;
    problem.nonlinear = [&](const Vector& y) {
        return SparseMatrix::from_dense(
            composite_nonlinear_block(mesh, cs.p_h, cs.u_tilde, cs.expand(y), spec.zeta));
    };
    problem.smallest_pair = [&](const SparseMatrix& a) {
        auto [lambda, y] = smallest_pair_dense(a.dense(), m.dense());
        return std::make_pair(lambda, std::move(y));
    };

    ScfConfig scf = options.scf;
    const double floor = options.c_scf * mesh.hsq_proxy();
    scf.lambda_tol = std::max(scf.lambda_tol, floor);
    scf.du_tol = std::max(scf.du_tol, floor);

    Vector initial = Vector::Zero(cs.dim());
    initial.head(cs.dim() - 1) = cs.coarse_component;
    initial[cs.dim() - 1] = 1.0;

    const ScfResult r = scf_iterate(problem, scf, initial);
    local.t_eigen = seconds_since(t_eigen);
    local.scf_iters = r.iterations;
    local.scf_converged = r.converged;

    EigenPair pair;
    pair.lambda = r.lambda;
    pair.u = FeFunction{mesh.level_id, normalize_msign(fine_parts->mass, cs.expand(r.u))};
    pair.scf_iters = r.iterations;
    pair.converged = r.converged;
    pair.residual = (apply_operator(*fine_parts, pair.u) -
                     pair.lambda * fine_parts->mass.apply(pair.u.coeffs))
                        .norm();
    local.sign_mixed = has_mixed_sign(pair.u.coeffs);
    local.t_total = seconds_since(t_start);
    if (stats) {
        *stats = local;
    }
    return pair;
}

std::pair<EigenPair, WorkReport> multigrid_scheme(const Hierarchy& hier, const ProblemSpec& spec,
                                                  const MlcOptions& options,
                                                  std::vector<EigenPair>* per_level) {
    options.validate();
    spec.validate();
    if (hier.levels() < 1) {
        throw std::invalid_argument("multigrid_scheme: empty hierarchy");
    }
    if (options.vh_level >= hier.levels()) {
        throw std::invalid_argument("multigrid_scheme: vh_level out of range");
    }

    WorkReport report;
    const auto t_start = Clock::now();

    const auto t_first = Clock::now();
    EigenPair pair = solve_gpe_direct(hier, options.vh_level, spec, options.scf);
    report.mh1_time = seconds_since(t_first);
    if (per_level) {
        per_level->clear();
        per_level->push_back(pair);
    }

    WorkReport::Level base;
    base.level = options.vh_level;
    base.n_dofs = hier.mesh(options.vh_level).n_interior;
    base.scf_iters = pair.scf_iters;
    base.scf_converged = pair.converged;
    base.sign_mixed = has_mixed_sign(pair.u.coeffs);
    base.t_eigen = report.mh1_time;
    base.t_total = report.mh1_time;
    report.levels.push_back(base);

    report.composite_dim = hier.mesh(options.vh_level).n_interior + 1;
    for (int level = options.vh_level + 1; level < hier.levels(); ++level) {
        WorkReport::Level stats;
        pair = one_correction_step(hier, spec, level, pair.lambda, pair.u, options, &stats);
        report.mh_proxy += static_cast<double>(stats.scf_iters) *
                           std::pow(static_cast<double>(report.composite_dim), 3);
        report.levels.push_back(stats);
        if (per_level) {
            per_level->push_back(pair);
        }
    }
    report.total_time = seconds_since(t_start);
    return {std::move(pair), std::move(report)};
}

} // namespace gpe
