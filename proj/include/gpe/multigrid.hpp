#pragma once

#include "gpe/sparse.hpp"

#include <Eigen/Cholesky>
#include <vector>

namespace gpe {

struct MgOptions {
    int pre_sweeps = 2;  // forward Gauss-Seidel, ascending dof order
    int post_sweeps = 2; // backward Gauss-Seidel, descending dof order
    int max_cycles = 200;
};

/// Geometric V-cycle for an SPD system on a nested hierarchy. Coarse
/// matrices are Galerkin products P^T A P (also valid on adaptively refined
/// ladders), the coarsest level is factorized densely. With equal sweep
/// counts and the reversed post-smoothing order the cycle is symmetric and
/// can precondition conjugate gradients.
class MgWorkspace {
public:
    /// `ladder[k]` maps interior dofs of level k to level k+1; the finest
    /// matrix must match the last map's row count.
    MgWorkspace(SparseMatrix fine_matrix, std::vector<SparseMatrix> ladder,
                MgOptions options = {});

    int levels() const { return static_cast<int>(matrices_.size()); }
    const SparseMatrix& finest() const { return matrices_.back(); }
    const SparseMatrix& matrix(int level) const { return matrices_.at(level); }

    /// One V-cycle for A x = b starting from x (updated in place).
    void vcycle(const Vector& b, Vector& x) const;

    /// Preconditioner action: one V-cycle from a zero initial guess.
    Vector precondition(const Vector& r) const;

    struct SolveResult {
        Vector x;
        int cycles = 0;
        bool converged = false;
        double rel_residual = 0.0;
    };

    /// V-cycle iteration until ||b - Ax||/||b|| <= rel_tol. Residual growth
    /// over three consecutive cycles aborts.
    SolveResult solve(const Vector& b, double rel_tol, int max_cycles = 0) const;

    /// Nonzeros touched by smoothing/residual/transfer work since the last
    /// reset; the per-cycle cost stays proportional to nnz of the finest
    /// matrix.
    long work_units() const { return work_units_; }
    void reset_work_units() const { work_units_ = 0; }

private:
    void cycle_recursive(int level, const Vector& b, Vector& x) const;
    void smooth(int level, const Vector& b, Vector& x, bool forward, int sweeps) const;

    std::vector<SparseMatrix> matrices_; // [0] coarsest .. [L-1] finest
    std::vector<SparseMatrix> ladder_;   // [k]: level k -> k+1 (local indexing)
    Eigen::LLT<Eigen::MatrixXd> coarse_solver_;
    MgOptions options_;
    mutable long work_units_ = 0;
};

struct CgResult {
    Vector x;
    int iterations = 0;
    bool converged = false;
};

/// Conjugate gradients with an optional V-cycle preconditioner.
CgResult conjugate_gradient(const SparseMatrix& a, const Vector& b,
                            const MgWorkspace* preconditioner, double rel_tol,
                            int max_iterations);

} // namespace gpe
