#pragma once

#include <Eigen/SparseCholesky>
#include <vector>

#include "pd/constraints.h"
#include "pd/mesh.h"
#include "pd/types.h"

namespace pd {

struct SolverConfig {
    double dt = 1.0 / 60.0;
    int iterations = 10;
    Vector3 gravity{0.0, -9.8, 0.0};
    double density = 1000.0;

    void validate() const;
};

struct SimState {
    Positions q;
    Positions v;
    int frame = 0;

    static SimState rest(const Mesh& mesh);
};

/// Per-step diagnostics, filled on demand.
struct StepStats {
    std::vector<double> objective_per_iteration;  // after each local-global alternation
    double max_solve_residual = 0.0;              // max_d ||A q_d - b_d||_inf / ||b_d||_inf
    double global_solve_seconds = 0.0;            // back-substitution only
};

/// Global matrix A = M/dt^2 + sum_j w_j S_j^T S_j with its sparse Cholesky
/// factorization, built once and reused across frames.
class PrefactoredSystem {
public:
    PrefactoredSystem(const MassMatrix& mass, const ConstraintSet& constraints, double dt);

    const SparseMatrix& matrix() const { return A_; }
    const MassMatrix& mass() const { return mass_; }
    double dt() const { return dt_; }
    Index size() const { return A_.rows(); }

    Vector solve(const Vector& rhs) const { return llt_.solve(rhs); }

private:
    SparseMatrix A_;
    Eigen::SimplicialLLT<SparseMatrix> llt_;
    MassMatrix mass_;
    double dt_;
};

/// Assembles and factorizes the global system.
PrefactoredSystem assemble_global(const Mesh& mesh, const MassMatrix& mass,
                                  const ConstraintSet& constraints, double dt);

/// Implicit-Euler predictor s_k = q + dt v + dt^2 M^{-1} f_ext.
Positions inertia_target(const SimState& state, const Positions& f_ext,
                         const MassMatrix& mass, double dt);

/// Momentum + constraint right-hand side: b = inertia_rhs + sum_j w_j S_j^T p_j(q),
/// accumulated in constraint order.
Positions assemble_rhs(const ConstraintSet& constraints, const Positions& q,
                       const Positions& inertia_rhs);

/// One frame of the local-global loop; per-vertex gravity forces are taken
/// from config. Throws DivergenceError on NaN/Inf.
SimState step(const SimState& state, const PrefactoredSystem& system,
              const ConstraintSet& constraints, const SolverConfig& config,
              StepStats* stats = nullptr);

/// Variational time-step energy at q: inertia term plus the summed weighted
/// squared distances to the constraint projections evaluated at q itself.
double objective(const Positions& q, const Positions& s_k, const MassMatrix& mass,
                 const ConstraintSet& constraints, double dt);

}  // namespace pd
