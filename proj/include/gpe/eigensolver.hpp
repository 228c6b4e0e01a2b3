#pragma once

#include "gpe/assembly.hpp"
#include "gpe/multigrid.hpp"

#include <functional>
#include <optional>

namespace gpe {

/// Discrete eigenpair with diagnostics. u is M-normalized with the sign
/// convention 1^T M u >= 0; residual is ||(A_stiff + A_W + N(u))u - lambda M u||_2.
struct EigenPair {
    double lambda = 0.0;
    FeFunction u;
    double residual = 0.0;
    int scf_iters = 0;
    bool converged = false;
};

struct ScfConfig {
    double lambda_tol = 1e-10; // on |d lambda| / max(1, |lambda|)
    double du_tol = 1e-8;      // on ||u_{i+1} - u_i||_M
    int max_iters = 100;
    double mixing = 0.6; // in (0, 1]; halved when the eigenvalue oscillates
    int dense_threshold = 2000;

    void validate() const;
};

/// Smallest eigenpair of the pencil (A, M), dense path. The returned vector
/// is M-normalized and sign-fixed; the residual is validated against
/// 1e-10 * ||A||_max.
std::pair<double, Vector> smallest_pair_dense(const SparseMatrix& a, const SparseMatrix& m,
                                              int max_dim = 2000);
std::pair<double, Vector> smallest_pair_dense(const Eigen::MatrixXd& a,
                                              const Eigen::MatrixXd& m);

struct IterativeStats {
    int outer_iterations = 0;
    long cg_iterations = 0;
};

/// Smallest eigenpair by inverse iteration with (optionally multigrid
/// preconditioned) conjugate-gradient inner solves. Matches the dense path
/// to 1e-8 relative in lambda; the converged eigenvalue does not depend on
/// the starting vector.
std::pair<double, Vector> smallest_pair_iterative(const SparseMatrix& a, const SparseMatrix& m,
                                                  const MgWorkspace* preconditioner,
                                                  IterativeStats* stats = nullptr,
                                                  const Vector* initial = nullptr);

/// u / sqrt(u^T M u), sign-flipped so that 1^T M u >= 0.
Vector normalize_msign(const SparseMatrix& m, Vector u);
FeFunction normalize(const FeFunction& u, const SparseMatrix& m);

/// One self-consistent-field problem: fixed linear part, mass, a builder for
/// the frozen-density matrix N(w), and the inner eigensolve strategy.
struct ScfProblem {
    const SparseMatrix* linear = nullptr;
    const SparseMatrix* mass = nullptr;
    std::function<SparseMatrix(const Vector&)> nonlinear;
    std::function<std::pair<double, Vector>(const SparseMatrix&)> smallest_pair;
};

struct ScfResult {
    double lambda = 0.0;
    Vector u;
    double residual = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Damped fixed-point iteration u_{i+1} = normalize((1-alpha) u_i + alpha v)
/// where v is the smallest eigenvector of the pencil linearized at u_i.
/// Convergence requires both the lambda and the iterate-change tolerance.
ScfResult scf_iterate(const ScfProblem& problem, const ScfConfig& config,
                      const std::optional<Vector>& initial = std::nullopt);

/// Direct solve of the discrete problem on one hierarchy level: dense inner
/// eigensolves below the threshold, preconditioned inverse iteration above.
EigenPair solve_gpe_direct(const Hierarchy& hier, int level, const ProblemSpec& spec,
                           const ScfConfig& config,
                           const std::optional<FeFunction>& initial = std::nullopt);

/// u^T (A_stiff + A_W) u + 1/2 u^T N(u) u, minimized by the ground state
/// over nested spaces.
double energy(const OperatorParts& parts, const FeFunction& u);

} // namespace gpe
