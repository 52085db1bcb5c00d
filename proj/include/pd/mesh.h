#pragma once

#include <array>
#include <string>
#include <vector>

#include "pd/types.h"

namespace pd {

enum class MeshFormat { Obj, TetPair };
enum class FrameFormat { Obj, Ply };

/// Simulation domain: vertex positions plus tet/face/edge connectivity.
/// Edges are derived and deduplicated; for tet meshes the face list holds
/// the boundary triangles. Immutable after construction.
struct Mesh {
    Positions vertices;                     // n x 3, meters
    std::vector<std::array<int, 4>> tets;   // may be empty (surface mesh)
    std::vector<std::array<int, 3>> faces;
    std::vector<std::array<int, 2>> edges;  // each undirected edge once, a < b

    Index num_vertices() const { return vertices.rows(); }

    // Signed volume of tet t (positive for positively oriented tets).
    double tet_volume(int t) const;
    double face_area(int f) const;
    double total_volume() const;  // sum of |tet volumes|, or face areas if no tets

    // Rebuilds edges/boundary faces from tets (or edges from faces) and
    // validates index ranges and tet non-degeneracy.
    void finalize();
};

/// Lumped (diagonal) mass matrix, kilograms per vertex.
struct MassMatrix {
    Vector diag;

    Index size() const { return diag.size(); }
    // sqrt/inv-sqrt of the diagonal, used for snapshot weighting.
    Vector sqrt_diag() const { return diag.cwiseSqrt(); }
    Vector inv_sqrt_diag() const { return diag.cwiseSqrt().cwiseInverse(); }
};

/// Parses an OBJ (`v`/`f` lines) or a .node/.ele tet pair. For TetPair the
/// path may name the `.node` file or the common basename.
Mesh load_mesh(const std::string& path, MeshFormat format);

/// density * (adjacent tet volumes)/4 per vertex, or *(areas)/3 for pure
/// surface meshes. Total mass equals density * total volume.
MassMatrix lumped_mass_matrix(const Mesh& mesh, double density);

/// Dijkstra shortest-path distances over the edge graph with Euclidean edge
/// lengths; unreachable vertices get +infinity.
std::vector<double> graph_distances(const Mesh& mesh, int source);

/// Writes `positions` with the mesh connectivity. Output bytes are a pure
/// function of the inputs.
void export_frame(const Mesh& mesh, const Positions& positions,
                  const std::string& path, FrameFormat format);

/// Reads vertex positions back from an OBJ frame dump (connectivity ignored).
Positions load_frame_positions(const std::string& path);

}  // namespace pd
