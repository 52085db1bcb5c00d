#pragma once

#include <vector>

#include "pd/mesh.h"
#include "pd/types.h"

namespace pd {

enum class ConstraintKind { TetStrain, EdgeSpring, Anchor };

/// One projective-dynamics constraint. The selector S_j is a small sparse
/// operator with rows() rows acting on the n x 3 position block; project()
/// maps current positions onto the constraint manifold in selector space.
///
/// Selector conventions:
///   TetStrain:  S_j q = F^T with F = D_s D_m^{-1} (3 rows)
///   EdgeSpring: S_j q = endpoint offsets from the edge midpoint (2 rows)
///   Anchor:     S_j q = position of the anchored vertex (1 row)
struct Constraint {
    ConstraintKind kind;
    std::array<int, 4> indices{{-1, -1, -1, -1}};
    double weight = 0.0;

    Matrix3 rest_inverse = Matrix3::Zero();    // tet: D_m^{-1}
    double rest_length = 0.0;                  // edge
    Vector3 rest_direction = Vector3::UnitX(); // edge: fallback for collapsed edges
    Vector3 target = Vector3::Zero();          // anchor

    int rows() const {
        switch (kind) {
            case ConstraintKind::TetStrain: return 3;
            case ConstraintKind::EdgeSpring: return 2;
            case ConstraintKind::Anchor: return 1;
        }
        return 0;
    }

    /// Appends S_j entries as (local_row + row_offset, vertex, value).
    void selector_triplets(std::vector<Triplet>& out, int row_offset = 0) const;

    /// Applies S_j to q; fills the first rows() rows of `out`.
    void apply_selector(const Positions& q, Matrix3& out) const;

    /// Projection p_j(q) onto the constraint manifold; fills rows() rows.
    void project(const Positions& q, Matrix3& out) const;
};

using ConstraintSet = std::vector<Constraint>;

struct ConstraintConfig {
    bool tet_strain = false;
    double tet_weight = 1.0;   // scaled per-element by |tet volume|
    bool edge_spring = false;
    double edge_weight = 1.0;  // scaled per-element by rest length
    std::vector<int> anchors;
    double anchor_weight = 1e4;
    bool allow_unconstrained = false;
};

/// Builds one tet_strain constraint per tet and/or one edge_spring per edge,
/// plus anchors pinned at their rest positions. Rest data is captured from
/// mesh.vertices.
ConstraintSet build_constraints(const Mesh& mesh, const ConstraintConfig& config);

/// Convenience wrapper returning p_j as a rows() x 3 matrix.
Matrix project_constraint(const Constraint& c, const Positions& q);

}  // namespace pd
