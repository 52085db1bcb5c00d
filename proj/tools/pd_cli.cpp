// Command-line front end: full and reduced simulation runs, snapshot capture,
// basis construction, global-step benchmarking and trajectory comparison.
//
// Exit codes: 0 success, 1 runtime divergence, 2 usage or configuration error.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pd/basis.h"
#include "pd/bench.h"
#include "pd/config.h"
#include "pd/errors.h"
#include "pd/mesh.h"
#include "pd/reduced.h"
#include "pd/snapshots.h"
#include "pd/solver.h"

namespace fs = std::filesystem;

namespace {

pd::Mesh load_mesh_auto(const std::string& path) {
    const bool obj = path.size() > 4 && path.compare(path.size() - 4, 4, ".obj") == 0;
    return pd::load_mesh(path, obj ? pd::MeshFormat::Obj : pd::MeshFormat::TetPair);
}

pd::AppConfig require_config(const std::string& path) {
    if (path.empty()) throw pd::ConfigError("--config is required for this subcommand");
    return pd::load_config(path);
}

std::string frame_path(const std::string& dir, int index, pd::FrameFormat format) {
    char name[32];
    std::snprintf(name, sizeof(name), "frame_%06d.%s", index,
                  format == pd::FrameFormat::Ply ? "ply" : "obj");
    return (fs::path(dir) / name).string();
}

pd::FrameFormat parse_format(const std::string& name) {
    return name == "ply" ? pd::FrameFormat::Ply : pd::FrameFormat::Obj;
}

std::vector<pd::Positions> load_frame_dir(const std::string& dir) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(dir)) {
        const std::string name = entry.path().filename().string();
        if (name.rfind("frame_", 0) == 0 && entry.path().extension() == ".obj")
            files.push_back(entry.path());
    }
    if (files.empty()) throw pd::ArgumentError(dir + ": no frame_*.obj files found");
    std::sort(files.begin(), files.end());
    std::vector<pd::Positions> frames;
    frames.reserve(files.size());
    for (const auto& file : files) frames.push_back(pd::load_frame_positions(file.string()));
    return frames;
}

int cmd_simulate(const std::string& config_path, const std::string& mesh_path,
                 const std::string& out_dir, const std::string& format_name,
                 bool allow_unconstrained) {
    pd::AppConfig config = require_config(config_path);
    config.constraints.allow_unconstrained |= allow_unconstrained;
    if (out_dir.empty()) throw pd::ConfigError("--out directory is required");

    const pd::Mesh mesh = load_mesh_auto(mesh_path);
    const pd::MassMatrix mass = pd::lumped_mass_matrix(mesh, config.solver.density);
    const pd::ConstraintSet constraints = pd::build_constraints(mesh, config.constraints);
    const pd::PrefactoredSystem system =
        pd::assemble_global(mesh, mass, constraints, config.solver.dt);
    const pd::FrameFormat format = parse_format(format_name);

    fs::create_directories(out_dir);
    pd::SimState state = pd::SimState::rest(mesh);
    double solve_seconds = 0.0;
    const auto t0 = std::chrono::steady_clock::now();
    for (int i = 0; i < config.frames; ++i) {
        pd::StepStats stats;
        state = pd::step(state, system, constraints, config.solver, &stats);
        solve_seconds += stats.global_solve_seconds;
        std::printf("frame %d objective %.9g\n", i, stats.objective_per_iteration.back());
        if (i % config.stride == 0)
            pd::export_frame(mesh, state.q, frame_path(out_dir, i, format), format);
    }
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("simulated %d frames in %.3f s (global solve %.3f s)\n", config.frames, wall,
                solve_seconds);
    return 0;
}

int cmd_snapshot(const std::string& config_path, const std::string& mesh_path,
                 const std::string& out_path, bool allow_unconstrained) {
    pd::AppConfig config = require_config(config_path);
    config.constraints.allow_unconstrained |= allow_unconstrained;
    if (out_path.empty()) throw pd::ConfigError("--out archive path is required");

    const pd::Mesh mesh = load_mesh_auto(mesh_path);
    const pd::ConstraintSet constraints = pd::build_constraints(mesh, config.constraints);
    const pd::MassMatrix mass = pd::lumped_mass_matrix(mesh, config.solver.density);

    pd::SnapshotSet snaps =
        pd::record(mesh, config.solver, constraints, {config.frames, config.stride});
    snaps = pd::center(snaps);
    snaps = pd::mass_weight(snaps, mass);
    pd::save_snapshots(snaps, out_path);
    std::printf("snapshots: n=%lld T=%lld norm=%.9g\n",
                static_cast<long long>(snaps.num_vertices()),
                static_cast<long long>(snaps.num_frames()), snaps.stacked().norm());
    return 0;
}

int cmd_basis(const std::string& config_path, const std::string& archive_path,
              const std::string& mesh_path, const std::string& out_path,
              const std::string& kind, int count, double d_min, double d_max,
              const pd::SparsifyOptions& sparsify) {
    if (out_path.empty()) throw pd::ConfigError("--out basis path is required");
    double density = pd::SolverConfig{}.density;
    if (!config_path.empty()) density = pd::load_config(config_path).solver.density;

    const pd::Mesh mesh = load_mesh_auto(mesh_path);
    const pd::MassMatrix mass = pd::lumped_mass_matrix(mesh, density);
    const pd::SnapshotSet snaps = pd::load_snapshots(archive_path);

    pd::Basis basis;
    try {
        if (kind == "splocs") {
            basis = pd::build_splocs_basis(snaps, mesh, count, d_min, d_max, sparsify, mass);
        } else {
            std::vector<double> curve;
            basis = pd::build_pca_basis(snaps, mesh, count, d_min, d_max, mass, &curve);
            for (size_t k = 0; k < curve.size(); ++k)
                std::printf("component %zu coeff-norm %.9g\n", k, curve[k]);
        }
    } catch (const pd::DegenerateBasisError& e) {
        std::printf("warning: degenerate basis: %s; no archive written\n", e.what());
        return 0;
    }

    if (basis.rank_exhausted)
        std::printf("warning: snapshot rank exhausted, kept %lld of %d components\n",
                    static_cast<long long>(basis.size()), count);
    if (!basis.admm_converged)
        std::printf("warning: sparsification stopped before reaching tolerance\n");
    pd::save_basis(basis, out_path);
    std::printf("basis: kind=%s k=%lld -> %s\n", kind.c_str(),
                static_cast<long long>(basis.size()), out_path.c_str());
    return 0;
}

int cmd_reduce(const std::string& config_path, const std::string& mesh_path,
               const std::string& basis_path, const std::string& out_dir,
               const std::string& format_name, bool allow_unconstrained) {
    pd::AppConfig config = require_config(config_path);
    config.constraints.allow_unconstrained |= allow_unconstrained;
    if (out_dir.empty()) throw pd::ConfigError("--out directory is required");

    const pd::Mesh mesh = load_mesh_auto(mesh_path);
    const pd::MassMatrix mass = pd::lumped_mass_matrix(mesh, config.solver.density);
    const pd::ConstraintSet constraints = pd::build_constraints(mesh, config.constraints);
    const pd::PrefactoredSystem system =
        pd::assemble_global(mesh, mass, constraints, config.solver.dt);
    const pd::Basis basis = pd::load_basis(basis_path);
    if (basis.mass_fingerprint != pd::mass_fingerprint(mass))
        std::fprintf(stderr,
                     "warning: basis was built against a different mass matrix\n");
    const pd::ReducedSystem rsys(system, basis);
    const pd::FrameFormat format = parse_format(format_name);

    fs::create_directories(out_dir);
    pd::ReducedState state = pd::reduce_state(pd::SimState::rest(mesh), rsys);
    try {
        for (int i = 0; i < config.frames; ++i) {
            pd::ReducedStepStats stats;
            state = pd::reduced_step(state, rsys, constraints, config.solver, &stats);
            std::printf("frame %d residual %.3e\n", i, stats.max_solve_residual);
            if (i % config.stride == 0)
                pd::export_frame(mesh, state.q, frame_path(out_dir, i, format), format);
        }
    } catch (const pd::DivergenceError& e) {
        std::printf("stable=false %s\n", e.what());
        return 1;
    }
    std::printf("stable=true frames=%d k=%lld\n", config.frames,
                static_cast<long long>(rsys.size()));
    return 0;
}

int cmd_bench(const std::string& config_path, const std::string& mesh_path,
              const std::vector<std::string>& basis_paths, const std::string& out_path,
              const pd::BenchProtocol& protocol, bool allow_unconstrained) {
    pd::AppConfig config = require_config(config_path);
    config.constraints.allow_unconstrained |= allow_unconstrained;

    const pd::Mesh mesh = load_mesh_auto(mesh_path);
    pd::BenchReport report = pd::run_bench(mesh, config, basis_paths, protocol);
    report.config_hash = pd::config_hash(config_path);

    for (const pd::BenchRow& row : report.rows)
        if (row.noisy)
            std::fprintf(stderr, "warning: noisy timings for basis %s\n", row.name.c_str());

    if (out_path.empty()) {
        pd::write_bench_csv(report, std::cout);
    } else {
        std::ofstream out(out_path);
        if (!out) throw pd::ConfigError(out_path + ": cannot open for writing");
        pd::write_bench_csv(report, out);
        std::printf("wrote %s\n", out_path.c_str());
    }
    return 0;
}

int cmd_compare(const std::string& dir_a, const std::string& dir_b,
                const std::string& out_path) {
    const std::vector<pd::Positions> a = load_frame_dir(dir_a);
    const std::vector<pd::Positions> b = load_frame_dir(dir_b);
    const pd::TrajectoryComparison cmp = pd::compare_trajectories(a, b);
    for (size_t t = 0; t < cmp.per_frame.size(); ++t)
        std::printf("frame %zu rel %.9g\n", t, cmp.per_frame[t]);
    std::printf("max %.9g frobenius %.9g\n", cmp.max_over_frames, cmp.frobenius);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw pd::ConfigError(out_path + ": cannot open for writing");
        out << "frame,rel\n";
        for (size_t t = 0; t < cmp.per_frame.size(); ++t)
            out << t << "," << cmp.per_frame[t] << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"projective dynamics simulation and reduction toolkit"};
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_path;
    bool seedless = false;
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--out", out_path, "output directory or file");
    app.add_flag("--seedless", seedless,
                 "assert determinism (the toolkit uses no randomness anywhere)");

    std::string mesh_path, basis_path, archive_path, format_name = "obj";
    std::string kind = "pca";
    std::string dir_a, dir_b;
    std::vector<std::string> bench_bases;
    int count = 10;
    double d_min = 0.05, d_max = 0.5;
    bool allow_unconstrained = false;
    pd::SparsifyOptions sparsify;
    pd::BenchProtocol protocol;

    CLI::App* sim = app.add_subcommand("simulate", "run the full solver and dump frames");
    sim->add_option("--mesh", mesh_path, ".obj or .node/.ele mesh")->required();
    sim->add_option("--format", format_name, "frame dump format: obj | ply")
        ->check(CLI::IsMember({"obj", "ply"}));
    sim->add_flag("--allow-unconstrained", allow_unconstrained,
                  "permit an empty constraint set");

    CLI::App* snap = app.add_subcommand("snapshot", "record, center and mass-weight snapshots");
    snap->add_option("--mesh", mesh_path, ".obj or .node/.ele mesh")->required();
    snap->add_flag("--allow-unconstrained", allow_unconstrained,
                   "permit an empty constraint set");

    CLI::App* bas = app.add_subcommand("basis", "build a reduction basis from snapshots");
    bas->add_option("--in", archive_path, "snapshot archive")->required();
    bas->add_option("--mesh", mesh_path, "mesh providing support-map distances")->required();
    bas->add_option("--kind", kind, "pca | splocs")->check(CLI::IsMember({"pca", "splocs"}));
    bas->add_option("--k", count, "component count");
    bas->add_option("--dmin", d_min, "support plateau radius (graph distance)");
    bas->add_option("--dmax", d_max, "support cutoff radius (graph distance)");
    bas->add_option("--lambda", sparsify.lambda, "sparsity strength (splocs)");
    bas->add_option("--rho", sparsify.rho, "ADMM penalty (splocs)");
    bas->add_option("--admm-iters", sparsify.iterations, "ADMM iteration budget (splocs)");

    CLI::App* red = app.add_subcommand("reduce", "run the reduced solver and dump frames");
    red->add_option("--mesh", mesh_path, ".obj or .node/.ele mesh")->required();
    red->add_option("--basis", basis_path, "basis archive")->required();
    red->add_option("--format", format_name, "frame dump format: obj | ply")
        ->check(CLI::IsMember({"obj", "ply"}));
    red->add_flag("--allow-unconstrained", allow_unconstrained,
                  "permit an empty constraint set");

    CLI::App* ben = app.add_subcommand("bench", "time full vs reduced global steps");
    ben->add_option("--mesh", mesh_path, ".obj or .node/.ele mesh")->required();
    ben->add_option("--basis", bench_bases, "basis archives (repeatable)")
        ->required()
        ->expected(-1);
    ben->add_option("--warmup", protocol.warmup, "discarded warm-up frames");
    ben->add_option("--frames", protocol.frames, "measured frames");
    ben->add_flag("--allow-unconstrained", allow_unconstrained,
                  "permit an empty constraint set");

    CLI::App* cmp = app.add_subcommand("compare", "position error between two frame dumps");
    cmp->add_option("--a", dir_a, "frame directory")->required();
    cmp->add_option("--b", dir_b, "reference frame directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (app.got_subcommand(sim))
            return cmd_simulate(config_path, mesh_path, out_path, format_name,
                                allow_unconstrained);
        if (app.got_subcommand(snap))
            return cmd_snapshot(config_path, mesh_path, out_path, allow_unconstrained);
        if (app.got_subcommand(bas))
            return cmd_basis(config_path, archive_path, mesh_path, out_path, kind, count,
                             d_min, d_max, sparsify);
        if (app.got_subcommand(red))
            return cmd_reduce(config_path, mesh_path, basis_path, out_path, format_name,
                              allow_unconstrained);
        if (app.got_subcommand(ben))
            return cmd_bench(config_path, mesh_path, bench_bases, out_path, protocol,
                             allow_unconstrained);
        if (app.got_subcommand(cmp)) return cmd_compare(dir_a, dir_b, out_path);
    } catch (const pd::DivergenceError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    } catch (const pd::ConfigError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const pd::FormatError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const pd::ValidationError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const pd::ArgumentError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const pd::StateError& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const pd::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
