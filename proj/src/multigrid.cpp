#include "gpe/multigrid.hpp"

#include <cmath>
#include <stdexcept>

namespace gpe {

MgWorkspace::MgWorkspace(SparseMatrix fine_matrix, std::vector<SparseMatrix> ladder,
                         MgOptions options)
    : ladder_(std::move(ladder)), options_(options) {
    if (!ladder_.empty() && ladder_.back().rows() != fine_matrix.rows()) {
        throw std::invalid_argument("MgWorkspace: finest matrix does not match the transfer ladder");
    }
    const int depth = static_cast<int>(ladder_.size()) + 1;
    matrices_.resize(depth);
    matrices_[depth - 1] = std::move(fine_matrix);
    for (int k = depth - 2; k >= 0; --k) {
        matrices_[k] = matrices_[k + 1].congruence(ladder_[k]);
    }
    const Eigen::MatrixXd coarse = matrices_[0].dense();
    coarse_solver_.compute(coarse);
    if (coarse.rows() > 0 && coarse_solver_.info() != Eigen::Success) {
        throw std::runtime_error("MgWorkspace: coarsest matrix is not SPD");
    }
}

void MgWorkspace::smooth(int level, const Vector& b, Vector& x, bool forward,
                         int sweeps) const {
    const SparseMatrix& a = matrices_[level];
    const int n = a.rows();
    for (int s = 0; s < sweeps; ++s) {
        for (int ii = 0; ii < n; ++ii) {
            const int i = forward ? ii : n - 1 - ii;
            double sum = b[i];
            double diag = 0.0;
            for (int k = a.row_begin(i); k < a.row_end(i); ++k) {
                const int j = a.col_index(k);
                if (j == i) {
                    diag = a.value(k);
                } else {
                    sum -= a.value(k) * x[j];
                }
            }
            x[i] = sum / diag;
        }
        work_units_ += a.nnz();
    }
}

void MgWorkspace::cycle_recursive(int level, const Vector& b, Vector& x) const {
    if (level == 0) {
        if (b.size() > 0) {
            x = coarse_solver_.solve(b);
            work_units_ += static_cast<long>(b.size()) * b.size();
        }
        return;
    }
    smooth(level, b, x, true, options_.pre_sweeps);

    const SparseMatrix& p = ladder_[level - 1];
    const Vector residual = b - matrices_[level].apply(x);
    work_units_ += matrices_[level].nnz();
    const Vector coarse_residual = p.apply_transpose(residual);
    work_units_ += p.nnz();

    Vector coarse_correction = Vector::Zero(coarse_residual.size());
    cycle_recursive(level - 1, coarse_residual, coarse_correction);

    x += p.apply(coarse_correction);
    work_units_ += p.nnz();

    smooth(level, b, x, false, options_.post_sweeps);
}

void MgWorkspace::vcycle(const Vector& b, Vector& x) const {
    if (b.size() != finest().rows() || x.size() != finest().rows()) {
        throw std::invalid_argument("MgWorkspace::vcycle: dimension mismatch");
    }
    if (!b.allFinite() || !x.allFinite()) {
        throw std::invalid_argument("MgWorkspace::vcycle: non-finite input");
    }
    cycle_recursive(levels() - 1, b, x);
}

Vector MgWorkspace::precondition(const Vector& r) const {
    Vector x = Vector::Zero(r.size());
    vcycle(r, x);
    return x;
}

MgWorkspace::SolveResult MgWorkspace::solve(const Vector& b, double rel_tol,
                                            int max_cycles) const {
    if (!(rel_tol > 0.0 && rel_tol < 1.0)) {
        throw std::invalid_argument("MgWorkspace::solve: rel_tol must be in (0,1)");
    }
    if (max_cycles <= 0) {
        max_cycles = options_.max_cycles;
    }
    SolveResult result;
    result.x = Vector::Zero(finest().rows());
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        result.converged = true;
        return result;
    }
    double prev = bnorm;
    int growth_streak = 0;
    for (int cycle = 0; cycle < max_cycles; ++cycle) {
        vcycle(b, result.x);
        ++result.cycles;
        const double res = (b - finest().apply(result.x)).norm();
        result.rel_residual = res / bnorm;
        if (!std::isfinite(res)) {
            throw std::runtime_error("MgWorkspace::solve: non-finite residual");
        }
        if (result.rel_residual <= rel_tol) {
            result.converged = true;
            return result;
        }
        growth_streak = res > prev ? growth_streak + 1 : 0;
        if (growth_streak >= 3) {
            throw std::runtime_error("MgWorkspace::solve: residual grew over three consecutive cycles");
        }
        prev = res;
    }
    return result; // max_cycles reached, converged stays false
}

CgResult conjugate_gradient(const SparseMatrix& a, const Vector& b,
                            const MgWorkspace* preconditioner, double rel_tol,
                            int max_iterations) {
    CgResult result;
    result.x = Vector::Zero(a.rows());
    const double bnorm = b.norm();
    if (bnorm == 0.0) {
        result.converged = true;
        return result;
    }
    Vector r = b;
    Vector z = preconditioner ? preconditioner->precondition(r) : r;
    Vector p = z;
    double rz = r.dot(z);
    for (int it = 0; it < max_iterations; ++it) {
        const Vector ap = a.apply(p);
        const double pap = p.dot(ap);
        if (!(pap > 0.0)) {
            throw std::runtime_error("conjugate_gradient: matrix is not positive definite");
        }
        const double alpha = rz / pap;
        result.x += alpha * p;
        r -= alpha * ap;
        ++result.iterations;
        if (r.norm() <= rel_tol * bnorm) {
            result.converged = true;
            return result;
        }
        z = preconditioner ? preconditioner->precondition(r) : r;
        const double rz_next = r.dot(z);
        p = z + (rz_next / rz) * p;
        rz = rz_next;
    }
    return result;
}

} // namespace gpe
