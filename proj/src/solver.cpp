#include "pd/solver.h"

#include <chrono>
#include <cmath>

#include "pd/errors.h"

namespace pd {

void SolverConfig::validate() const {
    if (!(dt > 0.0) || !std::isfinite(dt))
        throw ConfigError("time step must be positive and finite, got " + std::to_string(dt));
    if (iterations < 1)
        throw ConfigError("iteration count must be at least 1, got " + std::to_string(iterations));
    if (!gravity.allFinite()) throw ConfigError("gravity vector must be finite");
    if (!(density > 0.0) || !std::isfinite(density))
        throw ConfigError("density must be positive and finite, got " + std::to_string(density));
}

SimState SimState::rest(const Mesh& mesh) {
    SimState state;
    state.q = mesh.vertices;
    state.v = Positions::Zero(mesh.num_vertices(), 3);
    state.frame = 0;
    return state;
}

PrefactoredSystem::PrefactoredSystem(const MassMatrix& mass, const ConstraintSet& constraints,
                                     double dt)
    : mass_(mass), dt_(dt) {
    const Index n = mass.diag.size();
    std::vector<Triplet> triplets;
    triplets.reserve(static_cast<size_t>(n) + constraints.size() * 16);
    const double inv_dt2 = 1.0 / (dt * dt);
    for (Index i = 0; i < n; ++i) triplets.emplace_back(i, i, mass.diag[i] * inv_dt2);

    // w_j S_j^T S_j, formed row by row of each selector.
    std::vector<Triplet> selector;
    for (const Constraint& c : constraints) {
        selector.clear();
        c.selector_triplets(selector, 0);
        for (const Triplet& a : selector)
            for (const Triplet& b : selector)
                if (a.row() == b.row())
                    triplets.emplace_back(a.col(), b.col(), c.weight * a.value() * b.value());
    }

    A_.resize(n, n);
    A_.setFromTriplets(triplets.begin(), triplets.end());
    A_.makeCompressed();
    llt_.compute(A_);
    if (llt_.info() != Eigen::Success)
        throw SolverError("global system factorization failed; matrix is not positive definite");
}

PrefactoredSystem assemble_global(const Mesh& mesh, const MassMatrix& mass,
                                  const ConstraintSet& constraints, double dt) {
    if (mass.diag.size() != mesh.num_vertices())
        throw ArgumentError("mass matrix size does not match vertex count");
    return PrefactoredSystem(mass, constraints, dt);
}

Positions inertia_target(const SimState& state, const Positions& f_ext,
                         const MassMatrix& mass, double dt) {
    Positions s = state.q + dt * state.v;
    for (Index i = 0; i < s.rows(); ++i)
        s.row(i) += (dt * dt / mass.diag[i]) * f_ext.row(i);
    return s;
}

Positions assemble_rhs(const ConstraintSet& constraints, const Positions& q,
                       const Positions& inertia_rhs) {
    Positions b = inertia_rhs;
    Matrix3 p;
    std::vector<Triplet> selector;
    for (const Constraint& c : constraints) {
        c.project(q, p);
        selector.clear();
        c.selector_triplets(selector, 0);
        // S_j^T p_j scatters each projection row into the selected columns.
        for (const Triplet& t : selector)
            b.row(t.col()) += c.weight * t.value() * p.row(t.row());
    }
    return b;
}

double objective(const Positions& q, const Positions& s_k, const MassMatrix& mass,
                 const ConstraintSet& constraints, double dt) {
    double inertia = 0.0;
    for (Index i = 0; i < q.rows(); ++i)
        inertia += mass.diag[i] * (q.row(i) - s_k.row(i)).squaredNorm();
    inertia /= 2.0 * dt * dt;

    double elastic = 0.0;
    Matrix3 sq, p;
    for (const Constraint& c : constraints) {
        c.apply_selector(q, sq);
        c.project(q, p);
        const int r = c.rows();
        elastic += 0.5 * c.weight * (sq.topRows(r) - p.topRows(r)).squaredNorm();
    }
    return inertia + elastic;
}

SimState step(const SimState& state, const PrefactoredSystem& system,
              const ConstraintSet& constraints, const SolverConfig& config,
              StepStats* stats) {
    const Index n = state.q.rows();
    const double dt = system.dt();
    const MassMatrix& mass = system.mass();

    Positions f_ext(n, 3);
    for (Index i = 0; i < n; ++i) f_ext.row(i) = mass.diag[i] * config.gravity.transpose();

    const Positions s_k = inertia_target(state, f_ext, mass, dt);
    Positions inertia_rhs(n, 3);
    const double inv_dt2 = 1.0 / (dt * dt);
    for (Index i = 0; i < n; ++i) inertia_rhs.row(i) = (mass.diag[i] * inv_dt2) * s_k.row(i);

    Positions q = s_k;
    double solve_seconds = 0.0;
    double max_residual = 0.0;
    for (int iter = 0; iter < config.iterations; ++iter) {
        const Positions b = assemble_rhs(constraints, q, inertia_rhs);

        const auto t0 = std::chrono::steady_clock::now();
        for (int d = 0; d < 3; ++d) q.col(d) = system.solve(b.col(d));
        const auto t1 = std::chrono::steady_clock::now();
        solve_seconds += std::chrono::duration<double>(t1 - t0).count();

        if (!q.allFinite())
            throw DivergenceError("non-finite positions at frame " + std::to_string(state.frame) +
                                      ", iteration " + std::to_string(iter),
                                  state.frame, iter);

        if (stats) {
            stats->objective_per_iteration.push_back(objective(q, s_k, mass, constraints, dt));
            for (int d = 0; d < 3; ++d) {
                const double bn = b.col(d).lpNorm<Eigen::Infinity>();
                if (bn > 0.0) {
                    const double res =
                        (system.matrix() * q.col(d) - b.col(d)).lpNorm<Eigen::Infinity>() / bn;
                    max_residual = std::max(max_residual, res);
                }
            }
        }
    }

    if (stats) {
        stats->max_solve_residual = max_residual;
        stats->global_solve_seconds = solve_seconds;
    }

    SimState next;
    next.q = q;
    next.v = (q - state.q) / dt;
    next.frame = state.frame + 1;
    return next;
}

}  // namespace pd
