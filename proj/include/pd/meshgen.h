#pragma once

#include "pd/mesh.h"

namespace pd {

// Procedural meshes for tests and benchmarks.

/// Axis-aligned box sampled on an (nx+1)x(ny+1)x(nz+1) vertex grid with cell
/// size `spacing`; each cell is split into six tets (Kuhn subdivision).
Mesh make_box_tet_grid(int nx, int ny, int nz, double spacing = 0.1);

/// Flat triangle sheet in the xy-plane, (nx+1)x(ny+1) vertices.
Mesh make_triangle_sheet(int nx, int ny, double spacing = 0.1);

/// Two tets sharing a triangular face (5 vertices).
Mesh make_two_tets();

/// A single unit-corner tet: (0,0,0),(1,0,0),(0,1,0),(0,0,1).
Mesh make_single_tet();

}  // namespace pd
