#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "pd/config.h"
#include "pd/mesh.h"
#include "pd/types.h"

namespace pd {

struct TrajectoryComparison {
    std::vector<double> per_frame;  // relative L2 against the reference run
    double max_over_frames = 0.0;
    double frobenius = 0.0;  // relative Frobenius over the whole trajectory
};

/// Position error of run `a` against reference run `b`, frame by frame.
TrajectoryComparison compare_trajectories(const std::vector<Positions>& a,
                                          const std::vector<Positions>& b);

struct BenchRow {
    std::string name;  // basis archive stem
    std::string kind;  // pca | splocs | lbs (external archives)
    int k = 0;
    double full_global_ms = 0.0;  // median full-solver global-step time
    double red_global_ms = 0.0;   // median reduced global-step time
    double global_relative = 0.0; // median of per-frame reduced/full ratios
    double traj_relerr = 0.0;
    bool stable = false;  // NaN-free reduced run
    bool noisy = false;   // timing spread above half the median
};

struct BenchReport {
    std::vector<BenchRow> rows;
    std::string machine;
    std::string build;
    uint64_t config_hash = 0;
};

struct BenchProtocol {
    int warmup = 5;   // discarded frames
    int frames = 20;  // measured frames
};

/// Runs the full solver once and each basis archive through the reduced
/// solver, timing only the global-step work of both.
BenchReport run_bench(const Mesh& mesh, const AppConfig& config,
                      const std::vector<std::string>& basis_paths,
                      const BenchProtocol& protocol);

/// Header is part of the CSV contract; metadata and noisy-row markers are
/// '#' comment lines.
extern const char* const kBenchCsvHeader;
void write_bench_csv(const BenchReport& report, std::ostream& out);

/// Median duration of an empty timed region, for validating the timing
/// instrumentation itself.
double null_probe_median_seconds(int samples);

}  // namespace pd
