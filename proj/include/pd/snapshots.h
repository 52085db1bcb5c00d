#pragma once

#include <array>
#include <string>
#include <vector>

#include "pd/mesh.h"
#include "pd/solver.h"
#include "pd/types.h"

namespace pd {

struct RecordSchedule {
    int frames = 0;
    int stride = 1;
};

/// Recorded trajectory, stored as one n x T matrix per coordinate.
/// Transformations return new values; a set is never mutated in place.
struct SnapshotSet {
    std::array<Matrix, 3> data;
    Positions mean_shape;
    std::vector<double> timestamps;
    bool centered = false;
    bool mass_weighted = false;

    Index num_vertices() const { return data[0].rows(); }
    Index num_frames() const { return data[0].cols(); }

    /// Horizontal concatenation [X Y Z], n x 3T.
    Matrix stacked() const;

    /// Positions of frame t as an n x 3 block.
    Positions frame(Index t) const;
};

/// Runs the full solver and stores the post-step positions of every
/// stride-th frame, starting with the first.
SnapshotSet record(const Mesh& mesh, const SolverConfig& config,
                   const ConstraintSet& constraints, const RecordSchedule& schedule);

/// Subtracts the per-vertex time-mean. No rigid alignment of any kind is
/// performed here or anywhere else in the pipeline. force re-centers
/// already-centered data (testing hook).
SnapshotSet center(const SnapshotSet& s, bool force = false);

/// Scales each vertex row by sqrt(M_vv); requires centered data.
SnapshotSet mass_weight(const SnapshotSet& s, const MassMatrix& mass);

void save_snapshots(const SnapshotSet& s, const std::string& path);
SnapshotSet load_snapshots(const std::string& path);

}  // namespace pd
