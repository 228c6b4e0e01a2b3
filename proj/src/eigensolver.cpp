#include "gpe/eigensolver.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>
#include <stdexcept>

namespace gpe {

namespace {

double sum_m(const SparseMatrix& m, const Vector& u) {
    return m.apply(u).sum();
}

} // namespace

void ScfConfig::validate() const {
    if (!(lambda_tol > 0.0) || !(du_tol > 0.0)) {
        throw std::invalid_argument("ScfConfig: tolerances must be positive");
    }
    if (max_iters < 1) {
        throw std::invalid_argument("ScfConfig: max_iters must be >= 1");
    }
    if (!(mixing > 0.0 && mixing <= 1.0)) {
        throw std::invalid_argument("ScfConfig: mixing must be in (0, 1]");
    }
}

Vector normalize_msign(const SparseMatrix& m, Vector u) {
    const double norm2 = u.dot(m.apply(u));
    if (!(norm2 > 0.0)) {
        throw std::invalid_argument("normalize: u^T M u must be positive");
    }
    u /= std::sqrt(norm2);
    if (sum_m(m, u) < 0.0) {
        u = -u;
    }
    return u;
}

FeFunction normalize(const FeFunction& u, const SparseMatrix& m) {
    return FeFunction{u.level_id, normalize_msign(m, u.coeffs)};
}

std::pair<double, Vector> smallest_pair_dense(const Eigen::MatrixXd& a,
                                              const Eigen::MatrixXd& m) {
    const Eigen::LLT<Eigen::MatrixXd> mass_llt(m);
    if (m.rows() > 0 && mass_llt.info() != Eigen::Success) {
        throw std::runtime_error("smallest_pair_dense: mass matrix factorization failed (not SPD)");
    }
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(a, m,
                                                                     Eigen::ComputeEigenvectors |
                                                                         Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success) {
        throw std::runtime_error("smallest_pair_dense: eigensolve failed");
    }
    const double lambda = solver.eigenvalues()[0];
    Vector v = solver.eigenvectors().col(0);

    const double amax = a.cwiseAbs().maxCoeff();
    const double res = (a * v - lambda * (m * v)).norm();
    // negated comparison so a NaN residual (e.g. from an indefinite M) fails
    if (!(res <= 1e-10 * std::max(1e-300, amax))) {
        std::ostringstream msg;
        msg << "smallest_pair_dense: residual " << res << " exceeds 1e-10 * ||A||_max";
        throw std::runtime_error(msg.str());
    }
    if (v.sum() < 0.0) {
        v = -v; // deterministic sign; M-weighted convention applied by callers
    }
    return {lambda, std::move(v)};
}

std::pair<double, Vector> smallest_pair_dense(const SparseMatrix& a, const SparseMatrix& m,
                                              int max_dim) {
    if (a.rows() > max_dim) {
        throw std::invalid_argument("smallest_pair_dense: dimension exceeds the dense threshold");
    }
    auto [lambda, v] = smallest_pair_dense(a.dense(), m.dense());
    return {lambda, normalize_msign(m, std::move(v))};
}

std::pair<double, Vector> smallest_pair_iterative(const SparseMatrix& a, const SparseMatrix& m,
                                                  const MgWorkspace* preconditioner,
                                                  IterativeStats* stats, const Vector* initial) {
    constexpr double lambda_tol = 1e-12;
    constexpr double inner_tol = 1e-12;
    constexpr int max_outer = 400;
    constexpr int max_inner = 100000;

    Vector x = normalize_msign(m, initial ? *initial : Vector::Ones(a.rows()));
    double lambda = x.dot(a.apply(x));
    IterativeStats local;
    for (int outer = 0; outer < max_outer; ++outer) {
        const CgResult cg =
            conjugate_gradient(a, m.apply(x), preconditioner, inner_tol, max_inner);
        local.cg_iterations += cg.iterations;
        ++local.outer_iterations;
        if (!cg.converged) {
            throw std::runtime_error("smallest_pair_iterative: inner solve did not converge");
        }
        x = normalize_msign(m, cg.x);
        const double next = x.dot(a.apply(x));
        const bool done = std::abs(next - lambda) <= lambda_tol * std::max(1.0, std::abs(next));
        lambda = next;
        if (done) {
            if (stats) {
                *stats = local;
            }
            return {lambda, std::move(x)};
        }
    }
    const double res = (a.apply(x) - lambda * m.apply(x)).norm();
    std::ostringstream msg;
    msg << "smallest_pair_iterative: no convergence within " << max_outer
        << " iterations, last residual " << res;
    throw std::runtime_error(msg.str());
}

ScfResult scf_iterate(const ScfProblem& problem, const ScfConfig& config,
                      const std::optional<Vector>& initial) {
    config.validate();
    const SparseMatrix& m = *problem.mass;

    Vector u;
    double lambda;
    if (initial.has_value()) {
        u = normalize_msign(m, *initial);
        lambda = u.dot(problem.linear->apply(u)) + u.dot(problem.nonlinear(u).apply(u));
    } else {
        auto [lambda0, u0] = problem.smallest_pair(*problem.linear);
        u = normalize_msign(m, std::move(u0));
        lambda = lambda0 + u.dot(problem.nonlinear(u).apply(u));
    }

    double alpha = config.mixing;
    double prev_dlambda = 0.0;
    int flips = 0;

    ScfResult result;
    result.u = u;
    result.lambda = lambda;
    for (int iter = 1; iter <= config.max_iters; ++iter) {
        const SparseMatrix n = problem.nonlinear(u);
        auto [mu, v] = problem.smallest_pair(problem.linear->plus(n));
        v = normalize_msign(m, std::move(v));

        Vector u_next = normalize_msign(m, (1.0 - alpha) * u + alpha * v);
        const double du = m_norm(m, u_next - u);
        const double dlambda = mu - lambda;

        result.iterations = iter;
        result.lambda = mu;
        result.u = u_next;

        if (std::abs(dlambda) <= config.lambda_tol * std::max(1.0, std::abs(mu)) &&
            du <= config.du_tol) {
            result.converged = true;
            u = std::move(u_next);
            lambda = mu;
            break;
        }

        // Oscillation damping: two consecutive sign alternations halve alpha.
        if (dlambda * prev_dlambda < 0.0) {
            if (++flips >= 2) {
                alpha = std::max(0.05, 0.5 * alpha);
                flips = 0;
            }
        } else {
            flips = 0;
        }
        prev_dlambda = dlambda;
        u = std::move(u_next);
        lambda = mu;
    }

    const SparseMatrix n_final = problem.nonlinear(result.u);
    result.residual =
        (problem.linear->apply(result.u) + n_final.apply(result.u) - result.lambda * m.apply(result.u))
            .norm();
    return result;
}

EigenPair solve_gpe_direct(const Hierarchy& hier, int level, const ProblemSpec& spec,
                           const ScfConfig& config, const std::optional<FeFunction>& initial) {
    config.validate();
    spec.validate();
    const Mesh& mesh = hier.mesh(level);
    const OperatorParts parts = assemble_parts(mesh, spec);
    const SparseMatrix linear = parts.linear();
    const bool dense = parts.dim() <= config.dense_threshold;

    std::vector<SparseMatrix> ladder;
    if (!dense) {
        ladder = hier.interior_ladder(level);
    }

    ScfProblem problem;
    problem.linear = &linear;
    problem.mass = &parts.mass;
    problem.nonlinear = [&](const Vector& w) {
        return assemble_nonlinear(mesh, FeFunction{mesh.level_id, w}, spec.zeta);
    };
    if (dense) {
        problem.smallest_pair = [&](const SparseMatrix& a) {
            return smallest_pair_dense(a, parts.mass, config.dense_threshold);
        };
    } else {
        problem.smallest_pair = [&](const SparseMatrix& a) {
            if (ladder.empty()) {
                return smallest_pair_iterative(a, parts.mass, nullptr);
            }
            const MgWorkspace precond(a, ladder);
            return smallest_pair_iterative(a, parts.mass, &precond);
        };
    }

    std::optional<Vector> initial_vec;
    if (initial.has_value()) {
        if (initial->level_id != mesh.level_id) {
            throw std::invalid_argument("solve_gpe_direct: initial guess level mismatch");
        }
        initial_vec = initial->coeffs;
    }

    const ScfResult r = scf_iterate(problem, config, initial_vec);
    EigenPair pair;
    pair.lambda = r.lambda;
    pair.u = FeFunction{mesh.level_id, r.u};
    pair.residual = r.residual;
    pair.scf_iters = r.iterations;
    pair.converged = r.converged;
    return pair;
}

double energy(const OperatorParts& parts, const FeFunction& u) {
    const SparseMatrix n = assemble_nonlinear(*parts.mesh, u, parts.zeta);
    return u.coeffs.dot(parts.stiffness.apply(u.coeffs)) +
           u.coeffs.dot(parts.potential.apply(u.coeffs)) +
           0.5 * u.coeffs.dot(n.apply(u.coeffs));
}

} // namespace gpe
