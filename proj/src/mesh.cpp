#include "pd/mesh.h"

#include <Eigen/Geometry>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <queue>
#include <set>
#include <sstream>

#include "pd/errors.h"

namespace pd {

namespace {

double signed_tet_volume(const Positions& v, const std::array<int, 4>& t) {
    Vector3 a = v.row(t[1]) - v.row(t[0]);
    Vector3 b = v.row(t[2]) - v.row(t[0]);
    Vector3 c = v.row(t[3]) - v.row(t[0]);
    return a.cross(b).dot(c) / 6.0;
}

double triangle_area(const Positions& v, const std::array<int, 3>& f) {
    Vector3 a = v.row(f[1]) - v.row(f[0]);
    Vector3 b = v.row(f[2]) - v.row(f[0]);
    return 0.5 * a.cross(b).norm();
}

void check_index(int idx, Index n, const char* what, size_t element) {
    if (idx < 0 || idx >= n) {
        throw ValidationError(std::string(what) + " " + std::to_string(element) +
                              " references vertex " + std::to_string(idx) +
                              " outside [0, " + std::to_string(n) + ")");
    }
}

std::array<int, 2> sorted_edge(int a, int b) {
    return a < b ? std::array<int, 2>{a, b} : std::array<int, 2>{b, a};
}

// Format a double so it round-trips exactly through text.
void append_coord(std::string& out, double x) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out += buf;
}

}  // namespace

double Mesh::tet_volume(int t) const { return signed_tet_volume(vertices, tets[t]); }

double Mesh::face_area(int f) const { return triangle_area(vertices, faces[f]); }

double Mesh::total_volume() const {
    double total = 0.0;
    if (!tets.empty()) {
        for (size_t t = 0; t < tets.size(); ++t) total += std::abs(signed_tet_volume(vertices, tets[t]));
    } else {
        for (const auto& f : faces) total += triangle_area(vertices, f);
    }
    return total;
}

void Mesh::finalize() {
    const Index n = vertices.rows();
    for (size_t t = 0; t < tets.size(); ++t)
        for (int k = 0; k < 4; ++k) check_index(tets[t][k], n, "tet", t);
    for (size_t f = 0; f < faces.size(); ++f)
        for (int k = 0; k < 3; ++k) check_index(faces[f][k], n, "face", f);

    for (size_t t = 0; t < tets.size(); ++t) {
        const double vol = signed_tet_volume(vertices, tets[t]);
        Vector3 e0 = vertices.row(tets[t][1]) - vertices.row(tets[t][0]);
        Vector3 e1 = vertices.row(tets[t][2]) - vertices.row(tets[t][0]);
        Vector3 e2 = vertices.row(tets[t][3]) - vertices.row(tets[t][0]);
        const double scale = std::max({e0.norm(), e1.norm(), e2.norm()});
        if (std::abs(vol) <= 1e-14 * scale * scale * scale) {
            throw ValidationError("degenerate tet " + std::to_string(t) +
                                  " (signed volume " + std::to_string(vol) + ")");
        }
    }

    std::set<std::array<int, 2>> edge_set;
    if (!tets.empty()) {
        for (const auto& t : tets)
            for (int i = 0; i < 4; ++i)
                for (int j = i + 1; j < 4; ++j) edge_set.insert(sorted_edge(t[i], t[j]));
        // Boundary faces: triangles owned by exactly one tet.
        if (faces.empty()) {
            std::map<std::array<int, 3>, std::array<int, 3>> count;  // sorted key -> first orientation
            std::map<std::array<int, 3>, int> hits;
            static const int corner[4][3] = {{1, 2, 3}, {0, 3, 2}, {0, 1, 3}, {0, 2, 1}};
            for (const auto& t : tets) {
                for (const auto& c : corner) {
                    std::array<int, 3> tri = {t[c[0]], t[c[1]], t[c[2]]};
                    std::array<int, 3> key = tri;
                    std::sort(key.begin(), key.end());
                    hits[key] += 1;
                    count.emplace(key, tri);
                }
            }
            for (const auto& [key, tri] : count)
                if (hits[key] == 1) faces.push_back(tri);
        }
    } else {
        for (const auto& f : faces)
            for (int i = 0; i < 3; ++i)
                for (int j = i + 1; j < 3; ++j) edge_set.insert(sorted_edge(f[i], f[j]));
    }
    edges.assign(edge_set.begin(), edge_set.end());
}

namespace {

Mesh load_obj(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open mesh file: " + path);

    std::vector<Vector3> verts;
    std::vector<std::array<int, 3>> faces;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z))
                throw FormatError(path + ":" + std::to_string(lineno) + ": malformed vertex line");
            verts.emplace_back(x, y, z);
        } else if (tag == "f") {
            std::vector<int> idx;
            std::string tok;
            while (ls >> tok) {
                // accept "i", "i/t", "i/t/n" forms
                const size_t slash = tok.find('/');
                if (slash != std::string::npos) tok = tok.substr(0, slash);
                int i = 0;
                try {
                    i = std::stoi(tok);
                } catch (const std::exception&) {
                    throw FormatError(path + ":" + std::to_string(lineno) + ": bad face index '" + tok + "'");
                }
                if (i <= 0)
                    throw FormatError(path + ":" + std::to_string(lineno) +
                                      ": face indices must be positive (1-based), got " + tok);
                idx.push_back(i - 1);
            }
            if (idx.size() < 3)
                throw FormatError(path + ":" + std::to_string(lineno) + ": face with fewer than 3 vertices");
            for (size_t k = 2; k < idx.size(); ++k)
                faces.push_back({idx[0], idx[k - 1], idx[k]});
        }
        // other tags (#, vn, vt, ...) ignored
    }
    if (verts.empty()) throw FormatError(path + ": no vertices found");

    Mesh mesh;
    mesh.vertices.resize(static_cast<Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i) mesh.vertices.row(static_cast<Index>(i)) = verts[i];
    mesh.faces = std::move(faces);
    mesh.finalize();
    return mesh;
}

std::string sibling_ele_path(const std::string& node_path) {
    std::string base = node_path;
    if (base.size() >= 5 && base.substr(base.size() - 5) == ".node") base = base.substr(0, base.size() - 5);
    return base + ".ele";
}

Mesh load_tet_pair(const std::string& path) {
    std::string node_path = path;
    if (!(node_path.size() >= 5 && node_path.substr(node_path.size() - 5) == ".node"))
        node_path += ".node";
    const std::string ele_path = sibling_ele_path(node_path);

    std::ifstream nodes(node_path);
    if (!nodes) throw FormatError("cannot open node file: " + node_path);
    size_t lineno = 1;
    long n = 0, dim = 0, nattr = 0, nbnd = 0;
    if (!(nodes >> n >> dim >> nattr >> nbnd))
        throw FormatError(node_path + ":1: malformed header (expected 'n 3 0 0')");
    if (dim != 3) throw FormatError(node_path + ":1: dimension must be 3, got " + std::to_string(dim));
    if (n <= 0) throw FormatError(node_path + ":1: vertex count must be positive");

    Mesh mesh;
    mesh.vertices.resize(n, 3);
    for (long i = 0; i < n; ++i) {
        ++lineno;
        long idx;
        double x, y, z;
        if (!(nodes >> idx >> x >> y >> z))
            throw FormatError(node_path + ":" + std::to_string(lineno) + ": malformed vertex line");
        if (idx != i + 1)
            throw FormatError(node_path + ":" + std::to_string(lineno) +
                              ": expected 1-based vertex index " + std::to_string(i + 1) +
                              ", got " + std::to_string(idx));
        for (long a = 0; a < nattr + (nbnd ? 1 : 0); ++a) {
            double skip;
            nodes >> skip;
        }
        mesh.vertices.row(i) << x, y, z;
    }

    std::ifstream eles(ele_path);
    if (!eles) throw FormatError("cannot open ele file: " + ele_path);
    lineno = 1;
    long m = 0, nodes_per = 0, eattr = 0;
    if (!(eles >> m >> nodes_per >> eattr))
        throw FormatError(ele_path + ":1: malformed header (expected 'm 4 0')");
    if (nodes_per != 4)
        throw FormatError(ele_path + ":1: only 4-node tets supported, got " + std::to_string(nodes_per));
    mesh.tets.reserve(static_cast<size_t>(m));
    for (long e = 0; e < m; ++e) {
        ++lineno;
        long idx, a, b, c, d;
        if (!(eles >> idx >> a >> b >> c >> d))
            throw FormatError(ele_path + ":" + std::to_string(lineno) + ": malformed tet line");
        for (long x = 0; x < eattr; ++x) {
            double skip;
            eles >> skip;
        }
        // 1-based in file
        mesh.tets.push_back({static_cast<int>(a - 1), static_cast<int>(b - 1),
                             static_cast<int>(c - 1), static_cast<int>(d - 1)});
    }
    mesh.finalize();
    return mesh;
}

}  // namespace

Mesh load_mesh(const std::string& path, MeshFormat format) {
    switch (format) {
        case MeshFormat::Obj: return load_obj(path);
        case MeshFormat::TetPair: return load_tet_pair(path);
    }
    throw ArgumentError("unknown mesh format");
}

MassMatrix lumped_mass_matrix(const Mesh& mesh, double density) {
    if (!(density > 0.0)) throw ArgumentError("density must be positive, got " + std::to_string(density));
    if (mesh.tets.empty() && mesh.faces.empty())
        throw ArgumentError("mesh has neither tets nor faces; cannot lump mass");

    MassMatrix mass;
    mass.diag = Vector::Zero(mesh.num_vertices());
    if (!mesh.tets.empty()) {
        for (const auto& t : mesh.tets) {
            const double share = density * std::abs(signed_tet_volume(mesh.vertices, t)) / 4.0;
            for (int k = 0; k < 4; ++k) mass.diag[t[k]] += share;
        }
    } else {
        for (const auto& f : mesh.faces) {
            const double share = density * triangle_area(mesh.vertices, f) / 3.0;
            for (int k = 0; k < 3; ++k) mass.diag[f[k]] += share;
        }
    }
    for (Index v = 0; v < mass.diag.size(); ++v) {
        if (!(mass.diag[v] > 0.0))
            throw ValidationError("vertex " + std::to_string(v) +
                                  " has non-positive lumped mass (isolated vertex?)");
    }
    return mass;
}

std::vector<double> graph_distances(const Mesh& mesh, int source) {
    const Index n = mesh.num_vertices();
    if (source < 0 || source >= n)
        throw ArgumentError("source vertex " + std::to_string(source) + " out of range");

    // adjacency from the deduplicated edge list
    std::vector<std::vector<std::pair<int, double>>> adj(n);
    for (const auto& e : mesh.edges) {
        const double len = (mesh.vertices.row(e[0]) - mesh.vertices.row(e[1])).norm();
        adj[e[0]].push_back({e[1], len});
        adj[e[1]].push_back({e[0], len});
    }

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> dist(n, inf);
    dist[source] = 0.0;
    using Item = std::pair<double, int>;
    std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
    heap.push({0.0, source});
    while (!heap.empty()) {
        auto [d, u] = heap.top();
        heap.pop();
        if (d > dist[u]) continue;
        for (const auto& [v, len] : adj[u]) {
            const double nd = d + len;
            if (nd < dist[v]) {
                dist[v] = nd;
                heap.push({nd, v});
            }
        }
    }
    return dist;
}

void export_frame(const Mesh& mesh, const Positions& positions,
                  const std::string& path, FrameFormat format) {
    if (positions.rows() != mesh.num_vertices())
        throw ArgumentError("positions row count " + std::to_string(positions.rows()) +
                            " does not match mesh vertex count " + std::to_string(mesh.num_vertices()));

    std::string out;
    out.reserve(static_cast<size_t>(positions.rows()) * 64);
    if (format == FrameFormat::Obj) {
        for (Index v = 0; v < positions.rows(); ++v) {
            out += "v ";
            append_coord(out, positions(v, 0));
            out += ' ';
            append_coord(out, positions(v, 1));
            out += ' ';
            append_coord(out, positions(v, 2));
            out += '\n';
        }
        for (const auto& f : mesh.faces) {
            out += "f " + std::to_string(f[0] + 1) + ' ' + std::to_string(f[1] + 1) + ' ' +
                   std::to_string(f[2] + 1) + '\n';
        }
    } else {
        out += "ply\nformat ascii 1.0\n";
        out += "element vertex " + std::to_string(positions.rows()) + '\n';
        out += "property double x\nproperty double y\nproperty double z\n";
        out += "element face " + std::to_string(mesh.faces.size()) + '\n';
        out += "property list uchar int vertex_indices\nend_header\n";
        for (Index v = 0; v < positions.rows(); ++v) {
            append_coord(out, positions(v, 0));
            out += ' ';
            append_coord(out, positions(v, 1));
            out += ' ';
            append_coord(out, positions(v, 2));
            out += '\n';
        }
        for (const auto& f : mesh.faces) {
            out += "3 " + std::to_string(f[0]) + ' ' + std::to_string(f[1]) + ' ' +
                   std::to_string(f[2]) + '\n';
        }
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) throw Error("cannot open for writing: " + path);
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) throw Error("write failed: " + path);
}

Positions load_frame_positions(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open frame file: " + path);
    std::vector<Vector3> verts;
    std::string line;
    size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag)) continue;
        if (tag == "v") {
            double x, y, z;
            if (!(ls >> x >> y >> z))
                throw FormatError(path + ":" + std::to_string(lineno) + ": malformed vertex line");
            verts.emplace_back(x, y, z);
        }
    }
    Positions q(static_cast<Index>(verts.size()), 3);
    for (size_t i = 0; i < verts.size(); ++i) q.row(static_cast<Index>(i)) = verts[i];
    return q;
}

}  // namespace pd
