#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "pd/mesh.h"
#include "pd/snapshots.h"
#include "pd/types.h"

namespace pd {

/// Per-vertex localization weights around a center vertex: 1 inside the
/// d_min ball (graph distance), 0 beyond d_max, linear falloff in between.
struct SupportMap {
    int center = -1;
    double d_min = 0.0;
    double d_max = 0.0;
    Vector weights;
};

enum class BasisKind { Pca, Splocs };

struct ComponentInfo {
    int center = -1;
    double d_min = 0.0;
    double d_max = 0.0;
};

/// Reduction basis. U acts identically on the x, y and z coordinate columns;
/// PCA bases are orthonormal in the mass inner product.
struct Basis {
    Matrix U;
    Positions mean_shape;
    BasisKind kind = BasisKind::Pca;
    std::vector<ComponentInfo> components;
    uint64_t mass_fingerprint = 0;
    bool rank_exhausted = false;  // fewer columns than requested
    bool admm_converged = true;   // sparsification residuals reached tolerance

    Index num_vertices() const { return U.rows(); }
    Index size() const { return U.cols(); }
};

/// Deflation working copy of the weighted snapshot data.
struct Residual {
    std::array<Matrix, 3> data;

    Index num_vertices() const { return data[0].rows(); }
    Index num_frames() const { return data[0].cols(); }
    double norm() const;
    Matrix stacked() const;  // [X Y Z], n x 3T
};

struct SparsifyOptions {
    double lambda = 0.0;
    double rho = 10.0;
    int iterations = 100;  // total ADMM iterations across all outer passes
    double tolerance = 1e-6;
};

Residual make_residual(const SnapshotSet& s);

/// Vertex with the largest residual 3-vector norm over all frames, lowest
/// index on ties; empty when the residual is identically zero.
std::optional<int> largest_deformation_vertex(const Residual& r);

SupportMap support_map(const Mesh& mesh, int center, double d_min, double d_max);

struct LocalComponent {
    Vector column;  // unit Euclidean norm, zero outside the support
    Matrix coeffs;  // T x 3, least-squares fit of the residual onto column
};

/// First local PCA mode of the residual around vertex v: seed coefficients
/// from the trajectory of v, fit the spatial column, localize by the support
/// weights, refine once, normalize, refit coefficients.
LocalComponent extract_local_component(const Residual& r, int v, const SupportMap& smap);

/// r -= column * coeffs^T per coordinate.
void deflate(Residual& r, const Vector& column, const Matrix& coeffs);

/// Greedy localized component extraction on mass-weighted centered snapshots,
/// then re-orthonormalization and un-weighting so that U^T M U = I. Stops
/// early (with a warning flag) when the residual is numerically exhausted.
/// component_norms, when given, receives each component's coefficient norm
/// (the deflation curve).
Basis build_pca_basis(const SnapshotSet& s, const Mesh& mesh, int count,
                      double d_min, double d_max, const MassMatrix& mass,
                      std::vector<double>* component_norms = nullptr);

/// PCA extraction followed by sparsity-regularized refinement: alternating
/// coefficient fits and ADMM solves with a support-weighted L1 penalty on the
/// spatial components (hard zeros outside each component's support).
Basis build_splocs_basis(const SnapshotSet& s, const Mesh& mesh, int count,
                         double d_min, double d_max, const SparsifyOptions& opts,
                         const MassMatrix& mass);

/// Relative Frobenius error of the M-orthogonal projection of centered
/// snapshot data onto the basis span.
double reconstruction_error(const Basis& b, const SnapshotSet& s, const MassMatrix& mass);

uint64_t mass_fingerprint(const MassMatrix& mass);

void save_basis(const Basis& b, const std::string& path);
Basis load_basis(const std::string& path);

}  // namespace pd
