#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "pd/basis.h"
#include "pd/errors.h"
#include "pd/meshgen.h"
#include "pd/reduced.h"
#include "pd/snapshots.h"

namespace {

pd::MassMatrix uniform_mass(pd::Index n, double m) {
    pd::MassMatrix mass;
    mass.diag = pd::Vector::Constant(n, m);
    return mass;
}

// k = n basis that makes the reduced dynamics algebraically identical to the
// full solver: U = M^{-1/2}, mean at rest.
pd::Basis full_rank_basis(const pd::Mesh& mesh, const pd::MassMatrix& mass) {
    pd::Basis b;
    const pd::Index n = mesh.num_vertices();
    b.U = pd::Matrix::Zero(n, n);
    b.U.diagonal() = mass.inv_sqrt_diag();
    b.mean_shape = mesh.vertices;
    b.mass_fingerprint = pd::mass_fingerprint(mass);
    return b;
}

pd::Constraint anchor_constraint(int v, const pd::Vector3& target, double weight) {
    pd::Constraint c;
    c.kind = pd::ConstraintKind::Anchor;
    c.indices = {v, -1, -1, -1};
    c.weight = weight;
    c.target = target;
    return c;
}

}  // namespace

TEST_CASE("reduced matrix: scalar system projects to U^T A U") {
    pd::MassMatrix mass = uniform_mass(1, 2.0);
    pd::ConstraintSet set{anchor_constraint(0, pd::Vector3::Zero(), 3.0)};
    pd::PrefactoredSystem full(mass, set, 1.0);
    REQUIRE(full.matrix().coeff(0, 0) == 5.0);

    pd::Basis b;
    b.U = pd::Matrix::Ones(1, 1);
    b.mean_shape = pd::Positions::Zero(1, 3);
    const pd::ReducedSystem rsys(full, b);
    CHECK(rsys.reduced_matrix()(0, 0) == 5.0);
    CHECK(rsys.size() == 1);

    pd::Basis offset = b;
    offset.mean_shape << 1.0, 2.0, 3.0;
    const pd::ReducedSystem shifted(full, offset);
    CHECK(shifted.mean_rhs()(0, 0) == doctest::Approx(5.0));
    CHECK(shifted.mean_rhs()(0, 2) == doctest::Approx(15.0));
}

TEST_CASE("reduced system: shape and rank validation") {
    const pd::Mesh mesh = pd::make_two_tets();
    const pd::MassMatrix mass = pd::lumped_mass_matrix(mesh, 1000.0);
    pd::ConstraintConfig cfg;
    cfg.tet_strain = true;
    cfg.tet_weight = 1e4;
    cfg.anchors = {0};
    const pd::ConstraintSet set = pd::build_constraints(mesh, cfg);
    const pd::PrefactoredSystem full(mass, set, 1.0 / 60.0);

    pd::Basis wrong_n = full_rank_basis(mesh, mass);
    wrong_n.U.conservativeResize(4, Eigen::NoChange);
    wrong_n.mean_shape.conservativeResize(4, Eigen::NoChange);
    CHECK_THROWS_AS(pd::ReducedSystem(full, wrong_n), pd::ArgumentError);

    pd::Basis empty = full_rank_basis(mesh, mass);
    empty.U.resize(mesh.num_vertices(), 0);
    CHECK_THROWS_AS(pd::ReducedSystem(full, empty), pd::ArgumentError);

    pd::Basis bad_mean = full_rank_basis(mesh, mass);
    bad_mean.mean_shape.conservativeResize(3, Eigen::NoChange);
    CHECK_THROWS_AS(pd::ReducedSystem(full, bad_mean), pd::ArgumentError);

    pd::Basis duplicated = full_rank_basis(mesh, mass);
    duplicated.U.col(1) = duplicated.U.col(0);
    CHECK_THROWS_AS(pd::ReducedSystem(full, duplicated), pd::DegenerateBasisError);
}

TEST_CASE("full-rank subspace reproduces the full solver") {
    const pd::Mesh mesh = pd::make_two_tets();
    pd::SolverConfig config;
    config.dt = 1.0 / 60.0;
    config.iterations = 10;
    const pd::MassMatrix mass = pd::lumped_mass_matrix(mesh, config.density);

    pd::ConstraintConfig cfg;
    cfg.tet_strain = true;
    cfg.tet_weight = 1e4;
    cfg.anchors = {0};
    const pd::ConstraintSet set = pd::build_constraints(mesh, cfg);
    const pd::PrefactoredSystem full = pd::assemble_global(mesh, mass, set, config.dt);

    const pd::Basis basis = full_rank_basis(mesh, mass);
    const pd::ReducedSystem rsys = pd::reduce_system(full, basis);

    pd::SimState state = pd::SimState::rest(mesh);
    pd::ReducedState rstate = pd::reduce_state(state, rsys);
    double worst = 0.0;
    double worst_residual = 0.0;
    for (int f = 0; f < 50; ++f) {
        state = pd::step(state, full, set, config);
        pd::ReducedStepStats stats;
        rstate = pd::reduced_step(rstate, rsys, set, config, &stats);
        worst = std::max(worst, (rstate.q - state.q).cwiseAbs().maxCoeff());
        worst_residual = std::max(worst_residual, stats.max_solve_residual);
    }
    CHECK(worst < 1e-8);
    CHECK(worst_residual < 1e-9);
    CHECK(rstate.frame == 50);
}

TEST_CASE("single translation mode integrates free fall exactly") {
    const pd::Mesh mesh = pd::make_two_tets();
    pd::SolverConfig config;
    config.dt = 0.1;
    config.iterations = 3;
    config.gravity = pd::Vector3(0.0, -10.0, 0.0);
    const pd::MassMatrix mass = pd::lumped_mass_matrix(mesh, config.density);
    const pd::Index n = mesh.num_vertices();

    const pd::PrefactoredSystem full(mass, pd::ConstraintSet{}, config.dt);
    pd::Basis b;
    b.U = pd::Matrix::Constant(n, 1, 1.0 / std::sqrt(mass.diag.sum()));
    b.mean_shape = mesh.vertices;
    const pd::ReducedSystem rsys(full, b);

    pd::ReducedState rstate = pd::reduce_state(pd::SimState::rest(mesh), rsys);
    const int frames = 10;
    for (int f = 0; f < frames; ++f)
        rstate = pd::reduced_step(rstate, rsys, pd::ConstraintSet{}, config);

    const double drop =
        config.gravity[1] * config.dt * config.dt * frames * (frames + 1) / 2.0;
    for (pd::Index v = 0; v < n; ++v) {
        CHECK(rstate.q(v, 0) == doctest::Approx(mesh.vertices(v, 0)).epsilon(1e-12));
        CHECK(std::abs(rstate.q(v, 1) - (mesh.vertices(v, 1) + drop)) < 1e-10);
        CHECK(std::abs(rstate.v(v, 1) - config.gravity[1] * config.dt * frames) < 1e-10);
    }
}

TEST_CASE("anchored rest shape is a reduced fixed point") {
    const pd::Mesh mesh = pd::make_two_tets();
    pd::SolverConfig config;
    config.dt = 1.0 / 60.0;
    config.iterations = 8;
    config.gravity.setZero();
    const pd::MassMatrix mass = pd::lumped_mass_matrix(mesh, config.density);

    pd::ConstraintConfig cfg;
    cfg.tet_strain = true;
    cfg.tet_weight = 1e4;
    cfg.anchors = {0, 4};
    const pd::ConstraintSet set = pd::build_constraints(mesh, cfg);
    const pd::PrefactoredSystem full(mass, set, config.dt);

    // Any basis with the mean pinned at rest keeps the origin fixed.
    pd::SolverConfig recording = config;
    recording.gravity = pd::Vector3(0.0, -9.8, 0.0);
    pd::SnapshotSet snaps = pd::record(mesh, recording, set, {40, 1});
    snaps = pd::mass_weight(pd::center(snaps), mass);
    pd::Basis basis = pd::build_pca_basis(snaps, mesh, 4, 0.5, 1.5, mass);
    basis.mean_shape = mesh.vertices;

    const pd::ReducedSystem rsys(full, basis);
    pd::ReducedState rstate = pd::reduce_state(pd::SimState::rest(mesh), rsys);
    REQUIRE(rstate.q_tilde.cwiseAbs().maxCoeff() < 1e-12);
    for (int f = 0; f < 5; ++f) rstate = pd::reduced_step(rstate, rsys, set, config);
    CHECK(rstate.q_tilde.cwiseAbs().maxCoeff() < 1e-10);
    CHECK((rstate.q - mesh.vertices).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("lift: mean at the origin, linear in the coordinates") {
    const pd::Mesh mesh = pd::make_two_tets();
    const pd::MassMatrix mass = pd::lumped_mass_matrix(mesh, 1000.0);
    pd::Basis b = full_rank_basis(mesh, mass);

    const pd::Index k = b.U.cols();
    CHECK((pd::lift(pd::Matrix::Zero(k, 3), b) - b.mean_shape).cwiseAbs().maxCoeff() == 0.0);

    std::mt19937 rng(3);
    std::normal_distribution<double> gauss(0.0, 1.0);
    pd::Matrix qa(k, 3), qb(k, 3);
    for (pd::Index i = 0; i < k; ++i)
        for (int d = 0; d < 3; ++d) {
            qa(i, d) = gauss(rng);
            qb(i, d) = gauss(rng);
        }
    const pd::Positions sum = pd::lift(qa + qb, b);
    const pd::Positions parts = pd::lift(qa, b) + pd::lift(qb, b) - b.mean_shape;
    CHECK((sum - parts).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("project then lift is the identity on the subspace") {
    const pd::Mesh mesh = pd::make_two_tets();
    pd::SolverConfig config;
    const pd::MassMatrix mass = pd::lumped_mass_matrix(mesh, config.density);
    pd::ConstraintConfig cfg;
    cfg.tet_strain = true;
    cfg.anchors = {0};
    const pd::ConstraintSet set = pd::build_constraints(mesh, cfg);
    const pd::PrefactoredSystem full(mass, set, config.dt);

    pd::SnapshotSet snaps = pd::record(mesh, config, set, {40, 1});
    snaps = pd::mass_weight(pd::center(snaps), mass);
    const pd::Basis basis = pd::build_pca_basis(snaps, mesh, 4, 0.5, 1.5, mass);
    const pd::ReducedSystem rsys(full, basis);
    const pd::Index k = rsys.size();

    std::mt19937 rng(11);
    std::normal_distribution<double> gauss(0.0, 1.0);
    pd::Matrix coords(k, 3);
    for (pd::Index i = 0; i < k; ++i)
        for (int d = 0; d < 3; ++d) coords(i, d) = gauss(rng);
    const pd::Positions deviation = rsys.U() * coords;
    CHECK((rsys.project(deviation) - coords).cwiseAbs().maxCoeff() < 1e-10);

    // reduce_state caches the lifted projection, not the raw positions
    pd::SimState state = pd::SimState::rest(mesh);
    state.q = rsys.mean_shape() + deviation;
    state.q(2, 1) += 0.37;  // push out of the span
    state.v.setConstant(0.25);
    state.frame = 7;
    const pd::ReducedState rstate = pd::reduce_state(state, rsys);
    const pd::Positions expected =
        rsys.mean_shape() + rsys.U() * rsys.project(state.q - rsys.mean_shape());
    CHECK((rstate.q - expected).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((rstate.v - state.v).cwiseAbs().maxCoeff() == 0.0);
    CHECK(rstate.frame == 7);
}

TEST_CASE("reduced objective decreases across iterations") {
    const pd::Mesh mesh = pd::make_two_tets();
    pd::SolverConfig config;
    config.dt = 1.0 / 60.0;
    config.iterations = 12;
    const pd::MassMatrix mass = pd::lumped_mass_matrix(mesh, config.density);

    pd::ConstraintConfig cfg;
    cfg.tet_strain = true;
    cfg.tet_weight = 1e5;
    cfg.anchors = {0, 2};
    const pd::ConstraintSet set = pd::build_constraints(mesh, cfg);
    const pd::PrefactoredSystem full(mass, set, config.dt);

    pd::SnapshotSet snaps = pd::record(mesh, config, set, {40, 1});
    snaps = pd::mass_weight(pd::center(snaps), mass);
    const pd::Basis basis = pd::build_pca_basis(snaps, mesh, 4, 0.5, 1.5, mass);
    const pd::ReducedSystem rsys(full, basis);

    pd::ReducedState rstate = pd::reduce_state(pd::SimState::rest(mesh), rsys);
    for (int f = 0; f < 20; ++f) {
        pd::ReducedStepStats stats;
        rstate = pd::reduced_step(rstate, rsys, set, config, &stats);
        REQUIRE(stats.objective_per_iteration.size() ==
                static_cast<size_t>(config.iterations));
        for (size_t i = 1; i < stats.objective_per_iteration.size(); ++i)
            CHECK(stats.objective_per_iteration[i] <=
                  stats.objective_per_iteration[i - 1] + 1e-10);
        CHECK(stats.max_solve_residual < 1e-9);
    }
}
