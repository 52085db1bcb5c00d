#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>

#include <json.hpp>

#include "pd/errors.h"
#include "pd/meshgen.h"
#include "pd/snapshots.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch_dir() {
    const fs::path dir = fs::path("tmp_test_snapshots");
    fs::create_directories(dir);
    return dir;
}

pd::SnapshotSet free_fall_snapshots(const pd::Mesh& mesh, const pd::SolverConfig& config,
                                    int frames, int stride) {
    pd::ConstraintConfig cfg;
    cfg.allow_unconstrained = true;
    return pd::record(mesh, config, pd::build_constraints(mesh, cfg), {frames, stride});
}

pd::SnapshotSet single_vertex_set(std::initializer_list<double> xs) {
    pd::SnapshotSet s;
    const pd::Index T = static_cast<pd::Index>(xs.size());
    for (auto& m : s.data) m = pd::Matrix::Zero(1, T);
    pd::Index t = 0;
    for (double x : xs) s.data[0](0, t++) = x;
    s.mean_shape = pd::Positions::Zero(1, 3);
    s.timestamps.assign(static_cast<size_t>(T), 0.0);
    return s;
}

}  // namespace

TEST_CASE("record: stride controls the stored frame count") {
    const pd::Mesh mesh = pd::make_single_tet();
    pd::SolverConfig config;
    config.dt = 0.1;
    config.iterations = 1;

    CHECK(free_fall_snapshots(mesh, config, 10, 1).num_frames() == 10);
    CHECK(free_fall_snapshots(mesh, config, 10, 5).num_frames() == 2);
    CHECK(free_fall_snapshots(mesh, config, 7, 5).num_frames() == 2);
    CHECK(free_fall_snapshots(mesh, config, 3, 10).num_frames() == 1);
    CHECK_THROWS_AS(free_fall_snapshots(mesh, config, 0, 1), pd::ArgumentError);
    CHECK_THROWS_AS(free_fall_snapshots(mesh, config, 10, 0), pd::ArgumentError);
}

TEST_CASE("record: stores post-step positions of every stride-th frame") {
    const pd::Mesh mesh = pd::make_single_tet();
    pd::SolverConfig config;
    config.dt = 0.1;
    config.iterations = 2;
    config.gravity = pd::Vector3(0.0, -10.0, 0.0);
    const pd::SnapshotSet s = free_fall_snapshots(mesh, config, 6, 2);
    REQUIRE(s.num_frames() == 3);
    CHECK(s.num_vertices() == 4);
    CHECK(!s.centered);
    CHECK(!s.mass_weighted);

    // ballistic recurrence from rest: q(f) = rest + g dt^2 (1 + 2 + ... + f)
    for (pd::Index t = 0; t < 3; ++t) {
        const int f = static_cast<int>(t) * 2 + 1;  // stored after frames 1, 3, 5
        const double drop = -10.0 * 0.1 * 0.1 * (f * (f + 1) / 2.0);
        const pd::Positions frame = s.frame(t);
        CHECK(frame(0, 1) == doctest::Approx(mesh.vertices(0, 1) + drop).epsilon(1e-12));
        CHECK(s.timestamps[t] == doctest::Approx(f * config.dt));
    }
}

TEST_CASE("center: pinned values and flags") {
    const pd::SnapshotSet s = single_vertex_set({1.0, 3.0});
    const pd::SnapshotSet c = pd::center(s);
    CHECK(c.centered);
    CHECK(c.mean_shape(0, 0) == doctest::Approx(2.0));
    CHECK(c.data[0](0, 0) == doctest::Approx(-1.0));
    CHECK(c.data[0](0, 1) == doctest::Approx(1.0));
    CHECK_THROWS_AS(pd::center(c), pd::StateError);

    const pd::SnapshotSet constant = single_vertex_set({4.0, 4.0, 4.0});
    const pd::SnapshotSet cc = pd::center(constant);
    CHECK(cc.data[0].cwiseAbs().maxCoeff() == 0.0);
    CHECK(cc.mean_shape(0, 0) == doctest::Approx(4.0));
}

TEST_CASE("center: forced re-centering changes nothing and keeps the mean") {
    const pd::SnapshotSet s = single_vertex_set({1.0, 2.0, 6.0});
    const pd::SnapshotSet once = pd::center(s);
    const pd::SnapshotSet twice = pd::center(once, true);
    CHECK((twice.data[0] - once.data[0]).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(twice.mean_shape(0, 0) == doctest::Approx(once.mean_shape(0, 0)));
    CHECK(twice.data[0].rowwise().mean().cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("center: rigid rotations keep their frame-to-frame variance") {
    const pd::Mesh mesh = pd::make_two_tets();
    const pd::Index n = mesh.num_vertices();
    const int T = 20;
    pd::SnapshotSet s;
    for (auto& m : s.data) m.resize(n, T);
    for (int t = 0; t < T; ++t) {
        const double angle = (M_PI / 2.0) * t / (T - 1);
        pd::Matrix3 rot;
        rot << std::cos(angle), -std::sin(angle), 0,
               std::sin(angle), std::cos(angle), 0,
               0, 0, 1;
        const pd::Positions frame = mesh.vertices * rot.transpose();
        for (int d = 0; d < 3; ++d) s.data[d].col(t) = frame.col(d);
    }
    s.mean_shape = pd::Positions::Zero(n, 3);
    s.timestamps.assign(T, 0.0);

    double raw = 0.0;
    for (const auto& m : s.data) raw += m.squaredNorm();
    const pd::SnapshotSet c = pd::center(s);
    double centered = 0.0;
    for (const auto& m : c.data) centered += m.squaredNorm();
    CHECK(centered > 0.01 * raw);  // rotation content survives mean-shape subtraction
}

TEST_CASE("mass weighting: pinned scaling and inverse") {
    pd::SnapshotSet s = single_vertex_set({3.0});
    s.centered = true;
    pd::MassMatrix mass;
    mass.diag = pd::Vector::Constant(1, 4.0);
    const pd::SnapshotSet w = pd::mass_weight(s, mass);
    CHECK(w.mass_weighted);
    CHECK(w.data[0](0, 0) == doctest::Approx(6.0));

    pd::MassMatrix identity;
    identity.diag = pd::Vector::Ones(1);
    CHECK(pd::mass_weight(s, identity).data[0](0, 0) == doctest::Approx(3.0));

    const pd::Vector inv = mass.inv_sqrt_diag();
    CHECK(std::abs(inv[0] * w.data[0](0, 0) - s.data[0](0, 0)) < 1e-14);
}

TEST_CASE("mass weighting: state preconditions") {
    pd::SnapshotSet s = single_vertex_set({1.0, 2.0});
    pd::MassMatrix mass;
    mass.diag = pd::Vector::Ones(1);
    CHECK_THROWS_AS(pd::mass_weight(s, mass), pd::StateError);  // not centered
    s.centered = true;
    const pd::SnapshotSet w = pd::mass_weight(s, mass);
    CHECK_THROWS_AS(pd::mass_weight(w, mass), pd::StateError);  // already weighted
    pd::MassMatrix wrong;
    wrong.diag = pd::Vector::Ones(2);
    CHECK_THROWS_AS(pd::mass_weight(s, wrong), pd::ArgumentError);
}

TEST_CASE("mass weighting commutes with frame slicing") {
    const pd::Mesh mesh = pd::make_two_tets();
    pd::SolverConfig config;
    config.dt = 0.05;
    config.iterations = 2;
    pd::SnapshotSet s = free_fall_snapshots(mesh, config, 8, 1);
    s = pd::center(s);
    const pd::MassMatrix mass = pd::lumped_mass_matrix(mesh, config.density);
    const pd::SnapshotSet weighted = pd::mass_weight(s, mass);

    pd::SnapshotSet sliced = s;
    for (auto& m : sliced.data) m = m.leftCols(4).eval();
    sliced.timestamps.resize(4);
    const pd::SnapshotSet sliced_then_weighted = pd::mass_weight(sliced, mass);
    for (int d = 0; d < 3; ++d)
        CHECK((weighted.data[d].leftCols(4) - sliced_then_weighted.data[d])
                  .cwiseAbs()
                  .maxCoeff() == 0.0);
}

TEST_CASE("archive: round-trip is bitwise on the payload") {
    const pd::Mesh mesh = pd::make_two_tets();
    pd::SolverConfig config;
    config.dt = 0.02;
    pd::SnapshotSet s = free_fall_snapshots(mesh, config, 6, 1);
    s = pd::center(s);
    const pd::MassMatrix mass = pd::lumped_mass_matrix(mesh, config.density);
    s = pd::mass_weight(s, mass);

    const fs::path path = scratch_dir() / "snaps.pdss";
    pd::save_snapshots(s, path.string());
    const pd::SnapshotSet back = pd::load_snapshots(path.string());
    CHECK(back.num_vertices() == s.num_vertices());
    CHECK(back.num_frames() == s.num_frames());
    CHECK(back.centered == s.centered);
    CHECK(back.mass_weighted == s.mass_weighted);
    for (int d = 0; d < 3; ++d)
        CHECK((back.data[d] - s.data[d]).cwiseAbs().maxCoeff() == 0.0);
    CHECK((back.mean_shape - s.mean_shape).cwiseAbs().maxCoeff() == 0.0);
    REQUIRE(back.timestamps.size() == s.timestamps.size());
    for (size_t t = 0; t < s.timestamps.size(); ++t)
        CHECK(back.timestamps[t] == s.timestamps[t]);

    // sidecar metadata is valid JSON and matches the header
    std::ifstream meta(path.string() + ".meta.json");
    REQUIRE(meta.good());
    const nlohmann::json doc = nlohmann::json::parse(meta);
    CHECK(doc.at("format") == "PDSS");
    CHECK(doc.at("vertices").get<pd::Index>() == s.num_vertices());
    CHECK(doc.at("frames").get<pd::Index>() == s.num_frames());
    CHECK(doc.at("centered").get<bool>() == s.centered);
}

TEST_CASE("archive: T=1 edge case") {
    pd::SnapshotSet s = single_vertex_set({2.5});
    const fs::path path = scratch_dir() / "one.pdss";
    pd::save_snapshots(s, path.string());
    const pd::SnapshotSet back = pd::load_snapshots(path.string());
    CHECK(back.num_frames() == 1);
    CHECK(back.data[0](0, 0) == 2.5);
}

TEST_CASE("archive: bad magic and truncation are format errors") {
    const fs::path bad = scratch_dir() / "bad.pdss";
    {
        std::ofstream out(bad, std::ios::binary);
        out << "NOPE this is not an archive";
    }
    CHECK_THROWS_AS(pd::load_snapshots(bad.string()), pd::FormatError);

    const fs::path good = scratch_dir() / "full.pdss";
    pd::save_snapshots(single_vertex_set({1.0, 2.0}), good.string());
    const fs::path cut = scratch_dir() / "cut.pdss";
    {
        std::ifstream in(good, std::ios::binary);
        std::string bytes((std::istreambuf_iterator<char>(in)), {});
        std::ofstream out(cut, std::ios::binary);
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() / 2));
    }
    CHECK_THROWS_AS(pd::load_snapshots(cut.string()), pd::FormatError);
    CHECK_THROWS_AS(pd::load_snapshots((scratch_dir() / "missing.pdss").string()),
                    pd::FormatError);
}

TEST_CASE("record propagates solver divergence with the frame index") {
    const pd::Mesh mesh = pd::make_single_tet();
    pd::SolverConfig config;
    config.dt = 0.1;
    config.iterations = 1;
    config.gravity = pd::Vector3(0.0, -1e308, 0.0);
    try {
        free_fall_snapshots(mesh, config, 50, 1);
        FAIL("expected divergence");
    } catch (const pd::DivergenceError& e) {
        CHECK(e.frame >= 0);
    }
}
