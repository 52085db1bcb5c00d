// Writes procedurally generated meshes (.node/.ele tet pairs or .obj sheets)
// for benchmarks and experiments.

#include <cstdio>
#include <fstream>
#include <string>

#include <CLI11.hpp>

#include "pd/errors.h"
#include "pd/meshgen.h"

namespace {

void append_coord(std::string& line, double value) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", value);
    line += buf;
}

void write_tet_pair(const pd::Mesh& mesh, const std::string& stem) {
    std::ofstream node(stem + ".node");
    if (!node) throw pd::FormatError(stem + ".node: cannot open for writing");
    node << mesh.num_vertices() << " 3 0 0\n";
    for (pd::Index v = 0; v < mesh.num_vertices(); ++v) {
        std::string line = std::to_string(v + 1);
        for (int d = 0; d < 3; ++d) {
            line += ' ';
            append_coord(line, mesh.vertices(v, d));
        }
        node << line << "\n";
    }

    std::ofstream ele(stem + ".ele");
    if (!ele) throw pd::FormatError(stem + ".ele: cannot open for writing");
    ele << mesh.tets.size() << " 4 0\n";
    for (size_t t = 0; t < mesh.tets.size(); ++t) {
        ele << (t + 1);
        for (int c = 0; c < 4; ++c) ele << ' ' << (mesh.tets[t][c] + 1);
        ele << "\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"procedural mesh generator"};
    std::string type = "box";
    int nx = 4, ny = 4, nz = 4;
    double spacing = 0.1;
    std::string out;
    app.add_option("--type", type, "box | sheet | two-tets | single-tet")
        ->check(CLI::IsMember({"box", "sheet", "two-tets", "single-tet"}));
    app.add_option("--nx", nx, "cells along x");
    app.add_option("--ny", ny, "cells along y");
    app.add_option("--nz", nz, "cells along z");
    app.add_option("--spacing", spacing, "cell size in meters");
    app.add_option("--out", out, "output stem (.node/.ele) or .obj path")->required();
    CLI11_PARSE(app, argc, argv);

    try {
        if (type == "sheet") {
            const pd::Mesh mesh = pd::make_triangle_sheet(nx, ny, spacing);
            pd::export_frame(mesh, mesh.vertices, out, pd::FrameFormat::Obj);
            std::printf("wrote %s: %lld vertices, %zu faces\n", out.c_str(),
                        static_cast<long long>(mesh.num_vertices()), mesh.faces.size());
        } else {
            pd::Mesh mesh;
            if (type == "box")
                mesh = pd::make_box_tet_grid(nx, ny, nz, spacing);
            else if (type == "two-tets")
                mesh = pd::make_two_tets();
            else
                mesh = pd::make_single_tet();
            write_tet_pair(mesh, out);
            std::printf("wrote %s.node/.ele: %lld vertices, %zu tets\n", out.c_str(),
                        static_cast<long long>(mesh.num_vertices()), mesh.tets.size());
        }
    } catch (const pd::Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
