#include "pd/meshgen.h"

namespace pd {

Mesh make_box_tet_grid(int nx, int ny, int nz, double spacing) {
    Mesh mesh;
    const int vx = nx + 1, vy = ny + 1, vz = nz + 1;
    mesh.vertices.resize(static_cast<Index>(vx) * vy * vz, 3);
    auto vid = [&](int i, int j, int k) { return (i * vy + j) * vz + k; };
    for (int i = 0; i < vx; ++i)
        for (int j = 0; j < vy; ++j)
            for (int k = 0; k < vz; ++k)
                mesh.vertices.row(vid(i, j, k)) << i * spacing, j * spacing, k * spacing;

    // Kuhn subdivision: six tets per cell along the main diagonal, consistent
    // across neighboring cells.
    static const int paths[6][3] = {{0, 1, 2}, {0, 2, 1}, {1, 0, 2},
                                    {1, 2, 0}, {2, 0, 1}, {2, 1, 0}};
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j)
            for (int k = 0; k < nz; ++k)
                for (const auto& p : paths) {
                    int c[3] = {0, 0, 0};
                    std::array<int, 4> tet;
                    tet[0] = vid(i, j, k);
                    for (int s = 0; s < 3; ++s) {
                        c[p[s]] = 1;
                        tet[s + 1] = vid(i + c[0], j + c[1], k + c[2]);
                    }
                    mesh.tets.push_back(tet);
                }
    mesh.finalize();
    return mesh;
}

Mesh make_triangle_sheet(int nx, int ny, double spacing) {
    Mesh mesh;
    const int vx = nx + 1, vy = ny + 1;
    mesh.vertices.resize(static_cast<Index>(vx) * vy, 3);
    auto vid = [&](int i, int j) { return i * vy + j; };
    for (int i = 0; i < vx; ++i)
        for (int j = 0; j < vy; ++j)
            mesh.vertices.row(vid(i, j)) << i * spacing, j * spacing, 0.0;
    for (int i = 0; i < nx; ++i)
        for (int j = 0; j < ny; ++j) {
            mesh.faces.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
            mesh.faces.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
        }
    mesh.finalize();
    return mesh;
}

Mesh make_two_tets() {
    Mesh mesh;
    mesh.vertices.resize(5, 3);
    mesh.vertices << 0, 0, 0,
                     1, 0, 0,
                     0, 1, 0,
                     0, 0, 1,
                     1, 1, 1;
    mesh.tets = {{0, 1, 2, 3}, {1, 2, 3, 4}};
    mesh.finalize();
    return mesh;
}

Mesh make_single_tet() {
    Mesh mesh;
    mesh.vertices.resize(4, 3);
    mesh.vertices << 0, 0, 0,
                     1, 0, 0,
                     0, 1, 0,
                     0, 0, 1;
    mesh.tets = {{0, 1, 2, 3}};
    mesh.finalize();
    return mesh;
}

}  // namespace pd
