#include "pd/reduced.h"

#include <chrono>
#include <cmath>

#include "pd/errors.h"

namespace pd {

ReducedSystem::ReducedSystem(const PrefactoredSystem& full, const Basis& basis)
    : U_(basis.U),
      mean_shape_(basis.mean_shape),
      mass_(full.mass()),
      dt_(full.dt()) {
    if (basis.num_vertices() != full.size())
        throw ArgumentError("basis has " + std::to_string(basis.num_vertices()) +
                            " vertices but the system has " + std::to_string(full.size()));
    if (basis.size() < 1) throw ArgumentError("basis has no columns");
    if (mean_shape_.rows() != U_.rows())
        throw ArgumentError("basis mean shape does not match column length");

    const Matrix AU = full.matrix() * U_;
    Er_ = U_.transpose() * AU;
    Er_ = 0.5 * (Er_ + Er_.transpose()).eval();
    llt_.compute(Er_);
    if (llt_.info() != Eigen::Success || llt_.rcond() < 1e-12)
        throw DegenerateBasisError("reduced system is ill-conditioned at size k = " +
                                   std::to_string(Er_.rows()));

    gram_.compute(U_.transpose() * mass_.diag.asDiagonal() * U_);
    if (gram_.info() != Eigen::Success)
        throw DegenerateBasisError("basis columns are numerically dependent at size k = " +
                                   std::to_string(Er_.rows()));

    mean_rhs_.resize(mean_shape_.rows(), 3);
    for (int d = 0; d < 3; ++d) mean_rhs_.col(d) = full.matrix() * mean_shape_.col(d);
    mean_rhs_reduced_ = U_.transpose() * mean_rhs_;
}

Matrix ReducedSystem::project(const Positions& deviation) const {
    if (deviation.rows() != U_.rows())
        throw ArgumentError("position row count does not match the basis");
    return gram_.solve(U_.transpose() * (mass_.diag.asDiagonal() * deviation));
}

ReducedSystem reduce_system(const PrefactoredSystem& full, const Basis& basis) {
    return ReducedSystem(full, basis);
}

ReducedState reduce_state(const SimState& state, const ReducedSystem& rsys) {
    ReducedState reduced;
    reduced.q_tilde = rsys.project(state.q - rsys.mean_shape());
    reduced.q = rsys.mean_shape() + rsys.U() * reduced.q_tilde;
    reduced.v = state.v;
    reduced.frame = state.frame;
    return reduced;
}

ReducedState reduced_step(const ReducedState& state, const ReducedSystem& rsys,
                          const ConstraintSet& constraints, const SolverConfig& config,
                          ReducedStepStats* stats) {
    const Index n = rsys.num_vertices();
    const double dt = rsys.dt();
    const MassMatrix& mass = rsys.mass();

    Positions f_ext(n, 3);
    for (Index i = 0; i < n; ++i) f_ext.row(i) = mass.diag[i] * config.gravity.transpose();

    SimState full_view;
    full_view.q = state.q;
    full_view.v = state.v;
    full_view.frame = state.frame;
    const Positions s_k = inertia_target(full_view, f_ext, mass, dt);

    Positions inertia_rhs(n, 3);
    const double inv_dt2 = 1.0 / (dt * dt);
    for (Index i = 0; i < n; ++i) inertia_rhs.row(i) = (mass.diag[i] * inv_dt2) * s_k.row(i);

    Matrix q_tilde = rsys.project(s_k - rsys.mean_shape());
    Positions q = rsys.mean_shape() + rsys.U() * q_tilde;

    double solve_seconds = 0.0;
    double max_residual = 0.0;
    for (int iter = 0; iter < config.iterations; ++iter) {
        const Positions b = assemble_rhs(constraints, q, inertia_rhs);

        const auto t0 = std::chrono::steady_clock::now();
        const Matrix rhs = rsys.U().transpose() * b - rsys.reduced_mean_rhs();
        q_tilde = rsys.solve(rhs);
        const auto t1 = std::chrono::steady_clock::now();
        solve_seconds += std::chrono::duration<double>(t1 - t0).count();

        if (!q_tilde.allFinite())
            throw DivergenceError("non-finite reduced coordinates at frame " +
                                      std::to_string(state.frame) + ", iteration " +
                                      std::to_string(iter),
                                  state.frame, iter);
        q = rsys.mean_shape() + rsys.U() * q_tilde;

        if (stats) {
            stats->objective_per_iteration.push_back(
                objective(q, s_k, mass, constraints, dt));
            const double rn = rhs.lpNorm<Eigen::Infinity>();
            if (rn > 0.0) {
                const double res =
                    (rsys.reduced_matrix() * q_tilde - rhs).lpNorm<Eigen::Infinity>() / rn;
                max_residual = std::max(max_residual, res);
            }
        }
    }

    if (stats) {
        stats->max_solve_residual = max_residual;
        stats->global_solve_seconds = solve_seconds;
    }

    ReducedState next;
    next.q_tilde = q_tilde;
    next.q = q;
    next.v = (q - state.q) / dt;
    next.frame = state.frame + 1;
    return next;
}

Positions lift(const Matrix& q_tilde, const Basis& basis) {
    if (q_tilde.rows() != basis.size() || q_tilde.cols() != 3)
        throw ArgumentError("reduced coordinates do not match the basis size");
    return basis.mean_shape + basis.U * q_tilde;
}

}  // namespace pd
