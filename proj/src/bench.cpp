#include "pd/bench.h"

#include <sys/utsname.h>

#include <Eigen/Core>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "pd/errors.h"
#include "pd/reduced.h"
#include "pd/solver.h"

namespace pd {

namespace {

double median(std::vector<double> values) {
    if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(values.begin(), values.end());
    const size_t mid = values.size() / 2;
    if (values.size() % 2 == 1) return values[mid];
    return 0.5 * (values[mid - 1] + values[mid]);
}

double quantile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    const double pos = q * (values.size() - 1);
    const size_t lo = static_cast<size_t>(pos);
    const size_t hi = std::min(lo + 1, values.size() - 1);
    const double frac = pos - lo;
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

bool spread_is_noisy(const std::vector<double>& samples) {
    if (samples.size() < 4) return false;
    const double med = median(samples);
    if (!(med > 0.0)) return true;
    const double iqr = quantile(samples, 0.75) - quantile(samples, 0.25);
    return iqr > 0.5 * med;
}

std::string kind_name(BasisKind kind) {
    return kind == BasisKind::Splocs ? "splocs" : "pca";
}

std::string stem_of(const std::string& path) {
    const size_t slash = path.find_last_of('/');
    const std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    const size_t dot = name.find_last_of('.');
    return dot == std::string::npos ? name : name.substr(0, dot);
}

std::string format_number(double value) {
    if (!std::isfinite(value)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.9g", value);
    return buf;
}

}  // namespace

const char* const kBenchCsvHeader =
    "basis,kind,fullGlobal_ms,redGlobal_ms,global_relative,traj_relerr,stable";

TrajectoryComparison compare_trajectories(const std::vector<Positions>& a,
                                          const std::vector<Positions>& b) {
    if (a.size() != b.size())
        throw ArgumentError("trajectory frame counts differ: " + std::to_string(a.size()) +
                            " vs " + std::to_string(b.size()));
    if (a.empty()) throw ArgumentError("trajectories are empty");

    TrajectoryComparison cmp;
    double num2 = 0.0;
    double den2 = 0.0;
    for (size_t t = 0; t < a.size(); ++t) {
        if (a[t].rows() != b[t].rows())
            throw ArgumentError("trajectory vertex counts differ at frame " + std::to_string(t));
        const double diff = (a[t] - b[t]).norm();
        const double ref = b[t].norm();
        const double rel = ref > 0.0 ? diff / ref : diff;
        cmp.per_frame.push_back(rel);
        cmp.max_over_frames = std::max(cmp.max_over_frames, rel);
        num2 += diff * diff;
        den2 += ref * ref;
    }
    cmp.frobenius = den2 > 0.0 ? std::sqrt(num2 / den2) : std::sqrt(num2);
    return cmp;
}

BenchReport run_bench(const Mesh& mesh, const AppConfig& config,
                      const std::vector<std::string>& basis_paths,
                      const BenchProtocol& protocol) {
    if (basis_paths.empty()) throw ArgumentError("benchmark needs at least one basis archive");
    if (protocol.warmup < 5 || protocol.frames < 20)
        throw ArgumentError("timing protocol needs at least 5 warm-up and 20 measured frames");

    const int total = protocol.warmup + protocol.frames;
    const MassMatrix mass = lumped_mass_matrix(mesh, config.solver.density);
    const ConstraintSet constraints = build_constraints(mesh, config.constraints);
    const PrefactoredSystem system =
        assemble_global(mesh, mass, constraints, config.solver.dt);

    std::vector<double> full_times;
    std::vector<Positions> full_traj;
    SimState state = SimState::rest(mesh);
    for (int i = 0; i < total; ++i) {
        StepStats stats;
        state = step(state, system, constraints, config.solver, &stats);
        full_times.push_back(stats.global_solve_seconds);
        full_traj.push_back(state.q);
    }
    const std::vector<double> full_warm(full_times.begin() + protocol.warmup,
                                        full_times.end());

    BenchReport report;
    utsname uts{};
    if (uname(&uts) == 0)
        report.machine = std::string(uts.nodename) + " " + uts.machine + " " + uts.release;
    report.build = std::string("cxx ") + __VERSION__ + " eigen " +
                   std::to_string(EIGEN_WORLD_VERSION) + "." +
                   std::to_string(EIGEN_MAJOR_VERSION) + "." +
                   std::to_string(EIGEN_MINOR_VERSION);

    for (const std::string& path : basis_paths) {
        const Basis basis = load_basis(path);
        BenchRow row;
        row.name = stem_of(path);
        row.kind = kind_name(basis.kind);
        row.k = static_cast<int>(basis.size());

        std::vector<double> red_times;
        std::vector<Positions> red_traj;
        bool stable = true;
        try {
            const ReducedSystem rsys(system, basis);
            ReducedState rstate = reduce_state(SimState::rest(mesh), rsys);
            for (int i = 0; i < total; ++i) {
                ReducedStepStats stats;
                rstate = reduced_step(rstate, rsys, constraints, config.solver, &stats);
                red_times.push_back(stats.global_solve_seconds);
                red_traj.push_back(rstate.q);
            }
        } catch (const DivergenceError&) {
            stable = false;
        }

        row.stable = stable;
        row.full_global_ms = 1e3 * median(full_warm);
        if (red_times.size() == static_cast<size_t>(total)) {
            const std::vector<double> red_warm(red_times.begin() + protocol.warmup,
                                               red_times.end());
            row.red_global_ms = 1e3 * median(red_warm);
            std::vector<double> ratios(red_warm.size());
            for (size_t i = 0; i < red_warm.size(); ++i)
                ratios[i] = red_warm[i] / full_warm[i];
            row.global_relative = median(ratios);
            row.noisy = spread_is_noisy(full_warm) || spread_is_noisy(red_warm);
            row.traj_relerr = compare_trajectories(red_traj, full_traj).frobenius;
        } else {
            row.red_global_ms = std::numeric_limits<double>::quiet_NaN();
            row.global_relative = std::numeric_limits<double>::quiet_NaN();
            row.traj_relerr = std::numeric_limits<double>::quiet_NaN();
        }
        report.rows.push_back(std::move(row));
    }
    return report;
}

void write_bench_csv(const BenchReport& report, std::ostream& out) {
    out << "# schema=1\n";
    out << "# machine=" << report.machine << "\n";
    out << "# build=" << report.build << "\n";
    char hash[32];
    std::snprintf(hash, sizeof(hash), "%016llx",
                  static_cast<unsigned long long>(report.config_hash));
    out << "# config=" << hash << "\n";
    for (const BenchRow& row : report.rows)
        out << "# k=" << row.name << "=" << row.k << "\n";
    out << kBenchCsvHeader << "\n";
    for (const BenchRow& row : report.rows) {
        out << row.name << "," << row.kind << "," << format_number(row.full_global_ms) << ","
            << format_number(row.red_global_ms) << "," << format_number(row.global_relative)
            << "," << format_number(row.traj_relerr) << "," << (row.stable ? 1 : 0) << "\n";
    }
    for (const BenchRow& row : report.rows)
        if (row.noisy) out << "# noisy=" << row.name << "\n";
}

double null_probe_median_seconds(int samples) {
    if (samples < 1) throw ArgumentError("need at least one probe sample");
    std::vector<double> times(samples);
    for (int i = 0; i < samples; ++i) {
        const auto t0 = std::chrono::steady_clock::now();
        const auto t1 = std::chrono::steady_clock::now();
        times[i] = std::chrono::duration<double>(t1 - t0).count();
    }
    return median(times);
}

}  // namespace pd
