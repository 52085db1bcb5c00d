#include "pd/basis.h"

#include <Eigen/Cholesky>
#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>

#include "pd/errors.h"

static_assert(std::endian::native == std::endian::little,
              "basis archives are little-endian");

namespace pd {

namespace {

constexpr char kMagic[4] = {'P', 'D', 'B', 'A'};
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

struct Extraction {
    std::vector<Vector> columns;
    std::vector<ComponentInfo> infos;
    bool exhausted = false;
};

// Algorithm core: repeatedly pick the most deformed vertex, extract a
// localized component there, and deflate it out of the residual.
Extraction greedy_extract(const SnapshotSet& s, const Mesh& mesh, int count,
                          double d_min, double d_max,
                          std::vector<double>* component_norms) {
    if (count < 1)
        throw ArgumentError("component count must be at least 1, got " + std::to_string(count));
    if (mesh.num_vertices() != s.num_vertices())
        throw ArgumentError("mesh vertex count does not match snapshots");

    Residual r = make_residual(s);
    const double floor = 1e-10 * r.norm();

    Extraction out;
    for (int k = 0; k < count; ++k) {
        if (r.norm() <= floor) {
            out.exhausted = true;
            break;
        }
        const auto v = largest_deformation_vertex(r);
        if (!v) {
            out.exhausted = true;
            break;
        }
        const SupportMap smap = support_map(mesh, *v, d_min, d_max);
        LocalComponent comp = extract_local_component(r, *v, smap);
        const double before = r.norm();
        deflate(r, comp.column, comp.coeffs);
        if (r.norm() > before * (1.0 + 1e-9))
            throw SolverError("deflation increased the residual norm at component " +
                              std::to_string(k));
        out.columns.push_back(std::move(comp.column));
        out.infos.push_back({*v, d_min, d_max});
        if (component_norms) component_norms->push_back(comp.coeffs.norm());
    }
    if (out.columns.empty())
        throw DegenerateBasisError("snapshot residual is numerically zero; nothing to extract");
    return out;
}

Basis finish_basis(Matrix weighted_columns, std::vector<ComponentInfo> infos,
                   const SnapshotSet& s, const MassMatrix& mass, BasisKind kind) {
    Basis b;
    b.U = mass.inv_sqrt_diag().asDiagonal() * weighted_columns;
    b.mean_shape = s.mean_shape;
    b.kind = kind;
    b.components = std::move(infos);
    b.mass_fingerprint = mass_fingerprint(mass);
    return b;
}

}  // namespace

double Residual::norm() const {
    double sum = 0.0;
    for (const Matrix& m : data) sum += m.squaredNorm();
    return std::sqrt(sum);
}

Matrix Residual::stacked() const {
    const Index n = num_vertices();
    const Index t = num_frames();
    Matrix out(n, 3 * t);
    out.leftCols(t) = data[0];
    out.middleCols(t, t) = data[1];
    out.rightCols(t) = data[2];
    return out;
}

Residual make_residual(const SnapshotSet& s) {
    if (!s.centered || !s.mass_weighted)
        throw StateError("basis construction expects centered, mass-weighted snapshots");
    return Residual{s.data};
}

std::optional<int> largest_deformation_vertex(const Residual& r) {
    const Index n = r.num_vertices();
    const Index T = r.num_frames();
    double best = 0.0;
    int best_v = -1;
    for (Index v = 0; v < n; ++v) {
        double worst = 0.0;
        for (Index t = 0; t < T; ++t) {
            const double d2 = r.data[0](v, t) * r.data[0](v, t) +
                              r.data[1](v, t) * r.data[1](v, t) +
                              r.data[2](v, t) * r.data[2](v, t);
            worst = std::max(worst, d2);
        }
        if (worst > best) {
            best = worst;
            best_v = static_cast<int>(v);
        }
    }
    if (best_v < 0) return std::nullopt;
    return best_v;
}

SupportMap support_map(const Mesh& mesh, int center, double d_min, double d_max) {
    if (center < 0 || center >= mesh.num_vertices())
        throw ArgumentError("support center " + std::to_string(center) + " out of range");
    if (d_min < 0.0 || !(d_min < d_max))
        throw ArgumentError("support radii must satisfy 0 <= d_min < d_max, got [" +
                            std::to_string(d_min) + ", " + std::to_string(d_max) + ")");

    const std::vector<double> dist = graph_distances(mesh, center);
    SupportMap smap;
    smap.center = center;
    smap.d_min = d_min;
    smap.d_max = d_max;
    smap.weights.resize(mesh.num_vertices());
    for (Index v = 0; v < smap.weights.size(); ++v) {
        const double d = dist[v];
        if (d <= d_min)
            smap.weights[v] = 1.0;
        else if (d >= d_max)
            smap.weights[v] = 0.0;
        else
            smap.weights[v] = (d_max - d) / (d_max - d_min);
    }
    return smap;
}

LocalComponent extract_local_component(const Residual& r, int v, const SupportMap& smap) {
    const Index n = r.num_vertices();
    if (v < 0 || v >= n) throw ArgumentError("vertex " + std::to_string(v) + " out of range");
    if (smap.weights.size() != n)
        throw ArgumentError("support map size does not match the residual");

    Matrix coeffs(r.num_frames(), 3);
    for (int d = 0; d < 3; ++d) coeffs.col(d) = r.data[d].row(v).transpose();
    if (coeffs.squaredNorm() <= 0.0)
        throw ArgumentError("residual trajectory at vertex " + std::to_string(v) + " is zero");

    const auto fit_column = [&](const Matrix& c) {
        Vector u = Vector::Zero(n);
        for (int d = 0; d < 3; ++d) u += r.data[d] * c.col(d);
        return Vector(u / c.squaredNorm());
    };
    const auto localize = [&](Vector& u) {
        const double before = u.norm();
        u = u.cwiseProduct(smap.weights);
        if (u.norm() <= 1e-12 * before || before == 0.0)
            throw DegenerateBasisError("component at vertex " + std::to_string(v) +
                                       " vanishes under its support map");
    };

    Vector u = fit_column(coeffs);
    localize(u);
    const double u2 = u.squaredNorm();
    for (int d = 0; d < 3; ++d) coeffs.col(d) = r.data[d].transpose() * u / u2;
    u = fit_column(coeffs);
    localize(u);

    u /= u.norm();
    for (int d = 0; d < 3; ++d) coeffs.col(d) = r.data[d].transpose() * u;
    return {std::move(u), std::move(coeffs)};
}

void deflate(Residual& r, const Vector& column, const Matrix& coeffs) {
    if (column.size() != r.num_vertices() || coeffs.rows() != r.num_frames() ||
        coeffs.cols() != 3)
        throw ArgumentError("component dimensions do not match the residual");
    for (int d = 0; d < 3; ++d) r.data[d].noalias() -= column * coeffs.col(d).transpose();
}

Basis build_pca_basis(const SnapshotSet& s, const Mesh& mesh, int count,
                      double d_min, double d_max, const MassMatrix& mass,
                      std::vector<double>* component_norms) {
    if (mass.diag.size() != s.num_vertices())
        throw ArgumentError("mass matrix size does not match snapshots");

    Extraction ext = greedy_extract(s, mesh, count, d_min, d_max, component_norms);

    // Localization breaks exact orthogonality; restore it in the weighted
    // space (two Gram-Schmidt passes) so that U^T M U = I after un-weighting.
    std::vector<Vector> ortho;
    std::vector<ComponentInfo> kept;
    bool dropped = false;
    for (size_t i = 0; i < ext.columns.size(); ++i) {
        Vector u = ext.columns[i];
        for (int pass = 0; pass < 2; ++pass)
            for (const Vector& e : ortho) u -= e.dot(u) * e;
        const double len = u.norm();
        if (len <= 1e-10) {
            dropped = true;
            continue;
        }
        ortho.push_back(u / len);
        kept.push_back(ext.infos[i]);
    }
    if (ortho.empty())
        throw DegenerateBasisError("all extracted components were linearly dependent");

    Matrix cols(s.num_vertices(), static_cast<Index>(ortho.size()));
    for (size_t i = 0; i < ortho.size(); ++i) cols.col(static_cast<Index>(i)) = ortho[i];

    Basis b = finish_basis(std::move(cols), std::move(kept), s, mass, BasisKind::Pca);
    b.rank_exhausted = ext.exhausted || dropped;
    return b;
}

Basis build_splocs_basis(const SnapshotSet& s, const Mesh& mesh, int count,
                         double d_min, double d_max, const SparsifyOptions& opts,
                         const MassMatrix& mass) {
    if (!(opts.rho > 0.0)) throw ArgumentError("ADMM penalty rho must be positive");
    if (opts.iterations < 1) throw ArgumentError("ADMM iteration budget must be at least 1");
    if (opts.lambda < 0.0) throw ArgumentError("sparsity strength must be nonnegative");
    if (!(opts.tolerance > 0.0)) throw ArgumentError("ADMM tolerance must be positive");
    if (mass.diag.size() != s.num_vertices())
        throw ArgumentError("mass matrix size does not match snapshots");

    Extraction ext = greedy_extract(s, mesh, count, d_min, d_max, nullptr);
    const Residual res = make_residual(s);
    const Index n = s.num_vertices();
    const int K = static_cast<int>(ext.columns.size());

    Matrix C(n, K);
    for (int k = 0; k < K; ++k) C.col(k) = ext.columns[k];

    // Per-component penalty weights: zero inside the plateau, one past d_max
    // (where components are clamped to exactly zero).
    Matrix penalty(n, K);
    Matrix inside(n, K);
    for (int k = 0; k < K; ++k) {
        const SupportMap smap = support_map(mesh, ext.infos[k].center, d_min, d_max);
        penalty.col(k) = Vector::Ones(n) - smap.weights;
        inside.col(k) = (smap.weights.array() > 0.0).cast<double>();
    }

    const int outer = 10;
    const int inner = std::max(1, (opts.iterations + outer - 1) / outer);
    std::array<Matrix, 3> W;
    bool converged = true;

    for (int pass = 0; pass < outer; ++pass) {
        Matrix gram = C.transpose() * C;
        gram.diagonal().array() += 1e-12 * std::max(1.0, gram.trace());
        const Eigen::LDLT<Matrix> gram_fac(gram);
        for (int d = 0; d < 3; ++d)
            W[d] = gram_fac.solve(C.transpose() * res.data[d]).transpose();

        // Keep coefficients bounded: push each column's scale into C so the
        // sparsity threshold acts on data-scale magnitudes.
        for (int k = 0; k < K; ++k) {
            double m = 0.0;
            for (int d = 0; d < 3; ++d)
                m = std::max(m, W[d].col(k).lpNorm<Eigen::Infinity>());
            if (m > 1e-300) {
                for (int d = 0; d < 3; ++d) W[d].col(k) /= m;
                C.col(k) *= m;
            }
        }

        Matrix gram2 = Matrix::Zero(K, K);
        Matrix target = Matrix::Zero(n, K);
        for (int d = 0; d < 3; ++d) {
            gram2.noalias() += W[d].transpose() * W[d];
            target.noalias() += res.data[d] * W[d];
        }
        Matrix lhs = 2.0 * gram2;
        lhs.diagonal().array() += opts.rho;
        const Eigen::LDLT<Matrix> lhs_fac(lhs);

        Matrix Z = C;
        Matrix Y = Matrix::Zero(n, K);
        Matrix Z_prev = Z;
        converged = false;
        for (int it = 0; it < inner; ++it) {
            C = lhs_fac.solve((2.0 * target + opts.rho * (Z - Y)).transpose()).transpose();
            Z_prev.swap(Z);
            for (Index v = 0; v < n; ++v) {
                for (int k = 0; k < K; ++k) {
                    if (inside(v, k) == 0.0) {
                        Z(v, k) = 0.0;
                        continue;
                    }
                    const double val = C(v, k) + Y(v, k);
                    const double mag =
                        std::abs(val) - (opts.lambda / opts.rho) * penalty(v, k);
                    Z(v, k) = mag > 0.0 ? std::copysign(mag, val) : 0.0;
                }
            }
            Y += C - Z;
            const double primal = (C - Z).norm();
            const double dual = opts.rho * (Z - Z_prev).norm();
            const double scale = std::max({1.0, C.norm(), Z.norm()});
            if (primal <= opts.tolerance * scale && dual <= opts.tolerance * scale) {
                converged = true;
                break;
            }
        }
        C = Z;
        if (C.norm() == 0.0) break;
    }

    // Sparsification past the useful range: every component zeroed across its
    // whole penalized band means the threshold swallowed the data term.
    bool all_collapsed = true;
    for (int k = 0; k < K && all_collapsed; ++k) {
        bool penalized = false;
        double peak = 0.0;
        for (Index v = 0; v < n; ++v) {
            if (inside(v, k) != 0.0 && penalty(v, k) > 0.0) {
                penalized = true;
                peak = std::max(peak, std::abs(C(v, k)));
            }
        }
        if (!penalized || peak > 0.0) all_collapsed = false;
    }
    if (all_collapsed)
        throw DegenerateBasisError("sparsity strength " + std::to_string(opts.lambda) +
                                   " collapsed every component onto its support plateau");

    std::vector<Index> keep;
    std::vector<ComponentInfo> infos;
    for (int k = 0; k < K; ++k) {
        if (C.col(k).norm() > 0.0) {
            keep.push_back(k);
            infos.push_back(ext.infos[k]);
        }
    }
    if (keep.empty())
        throw DegenerateBasisError("sparsification zeroed every component");

    Matrix cols(n, static_cast<Index>(keep.size()));
    for (size_t i = 0; i < keep.size(); ++i)
        cols.col(static_cast<Index>(i)) = C.col(keep[i]) / C.col(keep[i]).norm();

    Basis b = finish_basis(std::move(cols), std::move(infos), s, mass, BasisKind::Splocs);
    b.rank_exhausted = ext.exhausted || keep.size() != static_cast<size_t>(K);
    b.admm_converged = converged;
    return b;
}

double reconstruction_error(const Basis& b, const SnapshotSet& s, const MassMatrix& mass) {
    if (!s.centered) throw StateError("reconstruction error expects centered snapshots");
    if (s.mass_weighted)
        throw StateError("reconstruction error expects unweighted snapshot data");
    if (b.num_vertices() != s.num_vertices() || mass.diag.size() != s.num_vertices())
        throw ArgumentError("basis, snapshots and mass matrix sizes disagree");

    double num = 0.0;
    double den = 0.0;
    if (b.size() == 0) {
        for (int d = 0; d < 3; ++d) den += s.data[d].squaredNorm();
        return den > 0.0 ? 1.0 : 0.0;
    }

    const Matrix gram = b.U.transpose() * mass.diag.asDiagonal() * b.U;
    const Eigen::LDLT<Matrix> fac(gram);
    for (int d = 0; d < 3; ++d) {
        const Matrix projected =
            b.U * fac.solve(b.U.transpose() * (mass.diag.asDiagonal() * s.data[d]));
        num += (s.data[d] - projected).squaredNorm();
        den += s.data[d].squaredNorm();
    }
    if (den == 0.0) return 0.0;
    return std::sqrt(num / den);
}

uint64_t mass_fingerprint(const MassMatrix& mass) {
    uint64_t hash = 14695981039346656037ull;
    const char* bytes = reinterpret_cast<const char*>(mass.diag.data());
    const size_t count = sizeof(double) * static_cast<size_t>(mass.diag.size());
    for (size_t i = 0; i < count; ++i) {
        hash ^= static_cast<unsigned char>(bytes[i]);
        hash *= 1099511628211ull;
    }
    return hash;
}

void save_basis(const Basis& b, const std::string& path) {
    const uint64_t n = static_cast<uint64_t>(b.num_vertices());
    const uint64_t k = static_cast<uint64_t>(b.size());
    if (b.components.size() != k)
        throw ArgumentError("basis component metadata does not match column count");
    if (b.mean_shape.rows() != b.U.rows())
        throw ArgumentError("basis mean shape does not match column length");

    std::ofstream out(path, std::ios::binary);
    if (!out) throw FormatError(path + ": cannot open for writing");
    out.write(kMagic, 4);
    write_pod(out, kVersion);
    write_pod(out, n);
    write_pod(out, k);
    write_pod(out, static_cast<uint8_t>(b.kind == BasisKind::Splocs ? 1 : 0));
    const uint8_t flags =
        (b.rank_exhausted ? 1u : 0u) | (b.admm_converged ? 0u : 2u);
    write_pod(out, flags);
    write_pod(out, b.mass_fingerprint);
    for (uint64_t c = 0; c < k; ++c)
        for (uint64_t v = 0; v < n; ++v) write_pod(out, b.U(v, c));
    for (uint64_t v = 0; v < n; ++v)
        for (int d = 0; d < 3; ++d) write_pod(out, b.mean_shape(v, d));
    for (const ComponentInfo& info : b.components) {
        write_pod(out, static_cast<int64_t>(info.center));
        write_pod(out, info.d_min);
        write_pod(out, info.d_max);
    }
    if (!out) throw FormatError(path + ": write failed");
}

Basis load_basis(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw FormatError(path + ": cannot open");

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw FormatError(path + ": not a basis archive (bad magic)");
    const uint32_t version = read_pod<uint32_t>(in, path, "version");
    if (version != kVersion)
        throw FormatError(path + ": unsupported archive version " + std::to_string(version));
    const uint64_t n = read_pod<uint64_t>(in, path, "vertex count");
    const uint64_t k = read_pod<uint64_t>(in, path, "column count");
    const uint8_t kind = read_pod<uint8_t>(in, path, "kind");
    const uint8_t flags = read_pod<uint8_t>(in, path, "flags");
    if (kind > 1) throw FormatError(path + ": unknown basis kind " + std::to_string(kind));
    if (n == 0 || k == 0) throw FormatError(path + ": empty basis");

    Basis b;
    b.mass_fingerprint = read_pod<uint64_t>(in, path, "mass fingerprint");
    b.U.resize(n, k);
    for (uint64_t c = 0; c < k; ++c)
        for (uint64_t v = 0; v < n; ++v) b.U(v, c) = read_pod<double>(in, path, "columns");
    b.mean_shape.resize(n, 3);
    for (uint64_t v = 0; v < n; ++v)
        for (int d = 0; d < 3; ++d) b.mean_shape(v, d) = read_pod<double>(in, path, "mean shape");
    b.components.resize(k);
    for (uint64_t c = 0; c < k; ++c) {
        b.components[c].center =
            static_cast<int>(read_pod<int64_t>(in, path, "component centers"));
        b.components[c].d_min = read_pod<double>(in, path, "component radii");
        b.components[c].d_max = read_pod<double>(in, path, "component radii");
    }
    b.kind = kind == 1 ? BasisKind::Splocs : BasisKind::Pca;
    b.rank_exhausted = (flags & 1u) != 0;
    b.admm_converged = (flags & 2u) == 0;
    return b;
}

}  // namespace pd
