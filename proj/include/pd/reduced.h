#pragma once

#include <Eigen/Cholesky>
#include <vector>

#include "pd/basis.h"
#include "pd/solver.h"
#include "pd/types.h"

namespace pd {

struct ReducedStepStats {
    std::vector<double> objective_per_iteration;  // at lifted iterates
    double max_solve_residual = 0.0;              // ||E_r x - rhs||_inf / ||rhs||_inf
    double global_solve_seconds = 0.0;            // r.h.s. projection + dense solve
};

/// Dense k x k projection E_r = U^T A U of the prefactored global system,
/// plus everything reduced_step needs per frame. The full factorization is
/// never touched after construction.
class ReducedSystem {
public:
    ReducedSystem(const PrefactoredSystem& full, const Basis& basis);

    Index size() const { return Er_.rows(); }
    Index num_vertices() const { return U_.rows(); }
    const Matrix& reduced_matrix() const { return Er_; }
    const Matrix& U() const { return U_; }
    const Positions& mean_shape() const { return mean_shape_; }
    const Positions& mean_rhs() const { return mean_rhs_; }
    const Matrix& reduced_mean_rhs() const { return mean_rhs_reduced_; }
    const MassMatrix& mass() const { return mass_; }
    double dt() const { return dt_; }

    Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }
    Matrix solve(const Matrix& rhs) const { return llt_.solve(rhs); }

    /// M-orthogonal subspace coordinates of a full-space deviation (n x 3 -> k x 3).
    Matrix project(const Positions& deviation) const;

private:
    Matrix U_;
    Positions mean_shape_;
    Matrix Er_;
    Eigen::LLT<Matrix> llt_;
    Eigen::LDLT<Matrix> gram_;  // U^T M U, for projection
    Positions mean_rhs_;        // A * mean_shape
    Matrix mean_rhs_reduced_;   // U^T A mean_shape, constant part of the reduced rhs
    MassMatrix mass_;
    double dt_;
};

struct ReducedState {
    Matrix q_tilde;  // k x 3
    Positions v;     // full-space velocities
    Positions q;     // cached lift, mean_shape + U q_tilde
    int frame = 0;
};

ReducedSystem reduce_system(const PrefactoredSystem& full, const Basis& basis);

/// Projects a full state into the subspace; the cached positions are the
/// lifted projection, not the input positions.
ReducedState reduce_state(const SimState& state, const ReducedSystem& rsys);

/// One frame of the local-global loop with the global solve in the subspace.
/// Constraint projections run in the full space at the lifted positions; the
/// mean-shape contribution is moved to the right-hand side so the solve is
/// for the deviation from the mean shape.
ReducedState reduced_step(const ReducedState& state, const ReducedSystem& rsys,
                          const ConstraintSet& constraints, const SolverConfig& config,
                          ReducedStepStats* stats = nullptr);

Positions lift(const Matrix& q_tilde, const Basis& basis);

}  // namespace pd
