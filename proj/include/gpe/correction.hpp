#pragma once

#include "gpe/eigensolver.hpp"

#include <string>

namespace gpe {

/// Coarse space V_H enriched with one fine-level direction:
/// V = span{P_H} + span{u_tilde}. Matrices on V are always congruences of
/// fine-level operators with [P_H | u_tilde]; the state-independent blocks
/// are cached, N(w) is re-congruenced per SCF iteration.
struct CorrectionSpace {
    SparseMatrix p_h;  // interior dofs, V_H -> fine level
    Vector u_tilde;    // enrichment direction, possibly M-orthogonalized
    bool orthogonalized = false;
    double schur_ratio = 1.0; // M-Schur complement of u_tilde vs u^T M u
    Vector coarse_component;  // c with original u_tilde = P_H c + stored u_tilde

    Eigen::MatrixXd a0_block; // [P|u]^T (A_stiff + A_W) [P|u]
    Eigen::MatrixXd m_block;  // [P|u]^T M [P|u]

    int dim() const { return p_h.cols() + 1; }
    Vector expand(const Vector& y) const;
    Eigen::MatrixXd congruence(const SparseMatrix& fine_matrix) const;
};

struct MlcOptions {
    double c_mg = 0.1;  // auxiliary-solve tolerance c_mg * h^2
    double c_scf = 0.01; // composite SCF tolerance floor c_scf * h^2
    ScfConfig scf;       // base tolerances; per-level floors applied on top
    int vh_level = 0;    // hierarchy level hosting V_H (and the initial solve)

    void validate() const;
};

/// Per-level instrumentation of the multilevel scheme.
struct WorkReport {
    struct Level {
        int level = 0;
        long n_dofs = 0;
        int vcycles = 0;
        int scf_iters = 0;      // the nonlinear iteration count on this level
        bool scf_converged = true;
        bool sign_mixed = false; // ground-state candidate changed sign
        double t_aux = 0.0;      // rhs + multigrid solve [s]
        double t_space = 0.0;    // composite-space construction [s]
        double t_eigen = 0.0;    // composite eigensolve [s]
        double t_total = 0.0;
        double mg_rel_tol = 0.0;
    };
    std::vector<Level> levels;
    int composite_dim = 0;
    double mh_proxy = 0.0;  // sum of scf_iters * composite_dim^3 over corrections
    double mh1_time = 0.0;  // measured initial-level solve time [s]
    double total_time = 0.0;
};

/// Right-hand side of the auxiliary boundary value problem at the fine
/// level: lambda * M u - (A_stiff + A_W + N(u)) u for the prolonged iterate.
Vector aux_rhs(double lambda, const FeFunction& u_bar, const OperatorParts& fine_parts);

CorrectionSpace build_correction_space(const Hierarchy& hier, int level, Vector u_tilde,
                                       const OperatorParts& fine_parts, int vh_level);

/// One correction step: multigrid solve of the auxiliary problem on the pure
/// stiffness form, enrichment u_tilde = prolonged u + correction, then the
/// small nonlinear eigensolve on V_H + span{u_tilde}. Returns the new pair
/// expanded to the target level.
EigenPair one_correction_step(const Hierarchy& hier, const ProblemSpec& spec, int target_level,
                              double lambda_k, const FeFunction& u_k, const MlcOptions& options,
                              WorkReport::Level* stats = nullptr,
                              const OperatorParts* fine_parts = nullptr);

/// Full multilevel scheme: nonlinear solve on the V_H level, then one
/// correction step per finer level. When `per_level` is given it receives
/// the accepted eigenpair of every level in order.
std::pair<EigenPair, WorkReport> multigrid_scheme(const Hierarchy& hier, const ProblemSpec& spec,
                                                  const MlcOptions& options,
                                                  std::vector<EigenPair>* per_level = nullptr);

} // namespace gpe
