#include "pd/snapshots.h"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include <json.hpp>

#include "pd/errors.h"

static_assert(std::endian::native == std::endian::little,
              "snapshot archives are little-endian");

namespace pd {

namespace {

constexpr char kMagic[4] = {'P', 'D', 'S', 'S'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ostream& out, const T& value) {
    out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::istream& in, const std::string& path, const char* what) {
    T value;
    in.read(reinterpret_cast<char*>(&value), sizeof(T));
    if (!in) throw FormatError(path + ": truncated archive while reading " + what);
    return value;
}

}  // namespace

Matrix SnapshotSet::stacked() const {
    const Index n = num_vertices();
    const Index t = num_frames();
    Matrix out(n, 3 * t);
    out.leftCols(t) = data[0];
    out.middleCols(t, t) = data[1];
    out.rightCols(t) = data[2];
    return out;
}

Positions SnapshotSet::frame(Index t) const {
    Positions q(num_vertices(), 3);
    for (int d = 0; d < 3; ++d) q.col(d) = data[d].col(t);
    return q;
}

SnapshotSet record(const Mesh& mesh, const SolverConfig& config,
                   const ConstraintSet& constraints, const RecordSchedule& schedule) {
    if (schedule.frames < 1)
        throw ArgumentError("snapshot recording needs at least one frame, got " +
                            std::to_string(schedule.frames));
    if (schedule.stride < 1)
        throw ArgumentError("snapshot stride must be at least 1, got " +
                            std::to_string(schedule.stride));
    config.validate();

    const MassMatrix mass = lumped_mass_matrix(mesh, config.density);
    const PrefactoredSystem system = assemble_global(mesh, mass, constraints, config.dt);

    const Index n = mesh.num_vertices();
    const Index T = (schedule.frames + schedule.stride - 1) / schedule.stride;
    SnapshotSet s;
    for (auto& m : s.data) m.resize(n, T);
    s.mean_shape = Positions::Zero(n, 3);
    s.timestamps.reserve(T);

    SimState state = SimState::rest(mesh);
    Index stored = 0;
    for (int i = 0; i < schedule.frames; ++i) {
        state = step(state, system, constraints, config);
        if (i % schedule.stride == 0) {
            for (int d = 0; d < 3; ++d) s.data[d].col(stored) = state.q.col(d);
            s.timestamps.push_back(state.frame * config.dt);
            ++stored;
        }
    }
    return s;
}

SnapshotSet center(const SnapshotSet& s, bool force) {
    if (s.centered && !force) throw StateError("snapshots are already centered");
    SnapshotSet out = s;
    out.mean_shape.resize(s.num_vertices(), 3);
    for (int d = 0; d < 3; ++d) {
        const Vector mean = s.data[d].rowwise().mean();
        out.data[d] = s.data[d].colwise() - mean;
        out.mean_shape.col(d) = mean;
    }
    if (s.centered) out.mean_shape += s.mean_shape;
    out.centered = true;
    return out;
}

SnapshotSet mass_weight(const SnapshotSet& s, const MassMatrix& mass) {
    if (!s.centered) throw StateError("snapshots must be centered before mass weighting");
    if (s.mass_weighted) throw StateError("snapshots are already mass weighted");
    if (mass.diag.size() != s.num_vertices())
        throw ArgumentError("mass matrix size does not match snapshot vertex count");
    SnapshotSet out = s;
    const Vector w = mass.sqrt_diag();
    for (int d = 0; d < 3; ++d) out.data[d] = w.asDiagonal() * s.data[d];
    out.mass_weighted = true;
    return out;
}

void save_snapshots(const SnapshotSet& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path + ": cannot open for writing");

    const uint64_t n = static_cast<uint64_t>(s.num_vertices());
    const uint64_t T = static_cast<uint64_t>(s.num_frames());
    const uint8_t flags =
        (s.centered ? 1u : 0u) | (s.mass_weighted ? 2u : 0u);

    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, n);
    write_pod(out, T);
    write_pod(out, flags);
    for (uint64_t v = 0; v < n; ++v)
        for (uint64_t t = 0; t < T; ++t)
            for (int d = 0; d < 3; ++d) write_pod(out, s.data[d](v, t));
    for (uint64_t v = 0; v < n; ++v)
        for (int d = 0; d < 3; ++d) write_pod(out, s.mean_shape(v, d));
    for (double t : s.timestamps) write_pod(out, t);
    if (!out) throw FormatError(path + ": write failed");
    out.close();

    nlohmann::json meta;
    meta["format"] = "PDSS";
    meta["version"] = kVersion;
    meta["vertices"] = n;
    meta["frames"] = T;
    meta["centered"] = s.centered;
    meta["mass_weighted"] = s.mass_weighted;
    std::ofstream side(path + ".meta.json");
    if (!side) throw FormatError(path + ".meta.json: cannot open for writing");
    side << meta.dump(2) << "\n";
}

SnapshotSet load_snapshots(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError(path + ": not a snapshot archive (bad magic)");
    const uint32_t version = read_pod<uint32_t>(in, path, "version");
    if (version != kVersion)
        throw FormatError(path + ": unsupported archive version " + std::to_string(version));
    const uint64_t n = read_pod<uint64_t>(in, path, "vertex count");
    const uint64_t T = read_pod<uint64_t>(in, path, "frame count");
    const uint8_t flags = read_pod<uint8_t>(in, path, "flags");
    if (n == 0 || T == 0) throw FormatError(path + ": empty archive");

    SnapshotSet s;
    for (auto& m : s.data) m.resize(n, T);
    for (uint64_t v = 0; v < n; ++v)
        for (uint64_t t = 0; t < T; ++t)
            for (int d = 0; d < 3; ++d) s.data[d](v, t) = read_pod<double>(in, path, "payload");
    s.mean_shape.resize(n, 3);
    for (uint64_t v = 0; v < n; ++v)
        for (int d = 0; d < 3; ++d) s.mean_shape(v, d) = read_pod<double>(in, path, "mean shape");
    s.timestamps.resize(T);
    for (uint64_t t = 0; t < T; ++t) s.timestamps[t] = read_pod<double>(in, path, "timestamps");
    s.centered = (flags & 1u) != 0;
    s.mass_weighted = (flags & 2u) != 0;
    return s;
}

}  // namespace pd
