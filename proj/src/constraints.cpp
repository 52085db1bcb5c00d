#include "pd/constraints.h"

#include <Eigen/Dense>
#include <Eigen/SVD>

#include "pd/errors.h"

namespace pd {

void Constraint::selector_triplets(std::vector<Triplet>& out, int row_offset) const {
    switch (kind) {
        case ConstraintKind::TetStrain: {
            // Row r of S_j: sum_c DmInv(c,r) * (e_{i_{c+1}} - e_{i_0})
            for (int r = 0; r < 3; ++r) {
                double base = 0.0;
                for (int c = 0; c < 3; ++c) {
                    out.emplace_back(row_offset + r, indices[c + 1], rest_inverse(c, r));
                    base -= rest_inverse(c, r);
                }
                out.emplace_back(row_offset + r, indices[0], base);
            }
            break;
        }
        case ConstraintKind::EdgeSpring: {
            out.emplace_back(row_offset + 0, indices[0], 0.5);
            out.emplace_back(row_offset + 0, indices[1], -0.5);
            out.emplace_back(row_offset + 1, indices[0], -0.5);
            out.emplace_back(row_offset + 1, indices[1], 0.5);
            break;
        }
        case ConstraintKind::Anchor: {
            out.emplace_back(row_offset, indices[0], 1.0);
            break;
        }
    }
}

void Constraint::apply_selector(const Positions& q, Matrix3& out) const {
    switch (kind) {
        case ConstraintKind::TetStrain: {
            Matrix3 ds;  // columns: edge vectors
            ds.col(0) = (q.row(indices[1]) - q.row(indices[0])).transpose();
            ds.col(1) = (q.row(indices[2]) - q.row(indices[0])).transpose();
            ds.col(2) = (q.row(indices[3]) - q.row(indices[0])).transpose();
            out = (ds * rest_inverse).transpose();  // F^T
            break;
        }
        case ConstraintKind::EdgeSpring: {
            const Vector3 half = 0.5 * (q.row(indices[0]) - q.row(indices[1])).transpose();
            out.row(0) = half.transpose();
            out.row(1) = -half.transpose();
            break;
        }
        case ConstraintKind::Anchor: {
            out.row(0) = q.row(indices[0]);
            break;
        }
    }
}

void Constraint::project(const Positions& q, Matrix3& out) const {
    switch (kind) {
        case ConstraintKind::TetStrain: {
            Matrix3 ds;
            ds.col(0) = (q.row(indices[1]) - q.row(indices[0])).transpose();
            ds.col(1) = (q.row(indices[2]) - q.row(indices[0])).transpose();
            ds.col(2) = (q.row(indices[3]) - q.row(indices[0])).transpose();
            const Matrix3 f = ds * rest_inverse;
            Eigen::JacobiSVD<Matrix3> svd(f, Eigen::ComputeFullU | Eigen::ComputeFullV);
            Matrix3 u = svd.matrixU();
            const Matrix3 v = svd.matrixV();
            if ((u * v.transpose()).determinant() < 0.0) u.col(2) = -u.col(2);
            out = (u * v.transpose()).transpose();  // R^T, matches S_j q = F^T
            break;
        }
        case ConstraintKind::EdgeSpring: {
            Vector3 d = (q.row(indices[1]) - q.row(indices[0])).transpose();
            const double len = d.norm();
            const Vector3 dir = len > 1e-300 ? Vector3(d / len) : rest_direction;
            out.row(0) = (-0.5 * rest_length) * dir.transpose();
            out.row(1) = (0.5 * rest_length) * dir.transpose();
            break;
        }
        case ConstraintKind::Anchor: {
            out.row(0) = target.transpose();
            break;
        }
    }
}

Matrix project_constraint(const Constraint& c, const Positions& q) {
    Matrix3 buf;
    c.project(q, buf);
    return buf.topRows(c.rows());
}

ConstraintSet build_constraints(const Mesh& mesh, const ConstraintConfig& config) {
    ConstraintSet set;
    const Index n = mesh.num_vertices();

    if (config.tet_strain) {
        for (size_t t = 0; t < mesh.tets.size(); ++t) {
            const auto& tet = mesh.tets[t];
            Matrix3 dm;
            dm.col(0) = (mesh.vertices.row(tet[1]) - mesh.vertices.row(tet[0])).transpose();
            dm.col(1) = (mesh.vertices.row(tet[2]) - mesh.vertices.row(tet[0])).transpose();
            dm.col(2) = (mesh.vertices.row(tet[3]) - mesh.vertices.row(tet[0])).transpose();
            Constraint c;
            c.kind = ConstraintKind::TetStrain;
            c.indices = {tet[0], tet[1], tet[2], tet[3]};
            c.rest_inverse = dm.inverse();  // mesh validation rejects degenerate tets
            c.weight = config.tet_weight * std::abs(dm.determinant()) / 6.0;
            set.push_back(c);
        }
    }
    if (config.edge_spring) {
        for (const auto& e : mesh.edges) {
            Constraint c;
            c.kind = ConstraintKind::EdgeSpring;
            c.indices = {e[0], e[1], -1, -1};
            Vector3 d = (mesh.vertices.row(e[1]) - mesh.vertices.row(e[0])).transpose();
            c.rest_length = d.norm();
            if (c.rest_length > 0.0) c.rest_direction = d / c.rest_length;
            c.weight = config.edge_weight * c.rest_length;
            set.push_back(c);
        }
    }
    for (int v : config.anchors) {
        if (v < 0 || v >= n)
            throw ConfigError("anchor vertex " + std::to_string(v) + " out of range [0, " +
                              std::to_string(n) + ")");
        Constraint c;
        c.kind = ConstraintKind::Anchor;
        c.indices = {v, -1, -1, -1};
        c.target = mesh.vertices.row(v).transpose();
        c.weight = config.anchor_weight;
        set.push_back(c);
    }

    if (set.empty() && !config.allow_unconstrained)
        throw ConfigError("constraint set is empty; pass allow_unconstrained to simulate anyway");
    return set;
}

}  // namespace pd
