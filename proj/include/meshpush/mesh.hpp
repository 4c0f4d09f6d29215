// mesh.hpp — fixed-topology triangle mesh, icosphere generation, adjacency.
//
// A Mesh is a plain container: vertex positions, faces as index triples, and
// optional per-face RGB colors. Topology is fixed after construction; all
// deformations produce new vertex arrays over the same faces.
#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <vector>

#include "meshpush/core.hpp"

namespace meshpush {

struct Mesh {
    std::vector<Vec3> vertices;
    std::vector<std::array<int, 3>> faces;
    // Optional; when present, one [0,1] RGB triple per face.
    std::vector<std::array<double, 3>> face_colors;

    int num_vertices() const { return static_cast<int>(vertices.size()); }
    int num_faces() const { return static_cast<int>(faces.size()); }
};

// Throws if the mesh violates its structural invariants: face indices in
// range, pairwise-distinct indices per face, color count/range.
inline void validate(const Mesh& mesh) {
    if (mesh.vertices.empty() || mesh.faces.empty()) {
        throw EmptyMesh("mesh has no vertices or no faces");
    }
    const int nv = mesh.num_vertices();
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        for (int k = 0; k < 3; ++k) {
            if (face[k] < 0 || face[k] >= nv) {
                throw IndexOutOfRange("face " + std::to_string(f) + " references vertex " +
                                      std::to_string(face[k]) + " outside [0, " +
                                      std::to_string(nv) + ")");
            }
        }
        if (face[0] == face[1] || face[1] == face[2] || face[0] == face[2]) {
            throw Error("face " + std::to_string(f) + " has repeated vertex indices");
        }
    }
    if (!mesh.face_colors.empty()) {
        if (mesh.face_colors.size() != mesh.faces.size()) {
            throw Error("face_colors length " + std::to_string(mesh.face_colors.size()) +
                        " does not match face count " + std::to_string(mesh.faces.size()));
        }
        for (const auto& c : mesh.face_colors) {
            for (double v : c) {
                if (!(v >= 0.0 && v <= 1.0)) {
                    throw Error("face color component outside [0,1]");
                }
            }
        }
    }
}

inline std::pair<Vec3, Vec3> bounding_box(const Mesh& mesh) {
    Vec3 lo{1e300, 1e300, 1e300}, hi{-1e300, -1e300, -1e300};
    for (const auto& v : mesh.vertices) {
        lo = {std::min(lo.x, v.x), std::min(lo.y, v.y), std::min(lo.z, v.z)};
        hi = {std::max(hi.x, v.x), std::max(hi.y, v.y), std::max(hi.z, v.z)};
    }
    return {lo, hi};
}

inline double bbox_diagonal(const Mesh& mesh) {
    auto [lo, hi] = bounding_box(mesh);
    return norm(hi - lo);
}

// Unit icosphere centered at the origin: an icosahedron subdivided `subdivisions`
// times, vertices renormalized to the unit sphere after each split. Faces are
// consistently outward-oriented (CCW seen from outside). Vertex and face order
// is a pure function of `subdivisions`.
inline Mesh make_icosphere(int subdivisions) {
    if (subdivisions < 0) {
        throw SubdivisionTooLarge("subdivisions must be non-negative");
    }
    if (subdivisions > 6) {
        throw SubdivisionTooLarge("subdivisions must be at most 6, got " +
                                  std::to_string(subdivisions));
    }

    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    Mesh mesh;
    mesh.vertices = {
        {-1, t, 0}, {1, t, 0},  {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1},  {t, 0, 1},  {-t, 0, -1}, {-t, 0, 1},
    };
    for (auto& v : mesh.vertices) v = normalized(v);
    mesh.faces = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
        {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
        {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
        {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1},
    };

    for (int s = 0; s < subdivisions; ++s) {
        std::map<std::pair<int, int>, int> midpoint;
        auto midpoint_index = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            Vec3 m = normalized((mesh.vertices[a] + mesh.vertices[b]) * 0.5);
            int idx = mesh.num_vertices();
            mesh.vertices.push_back(m);
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(mesh.faces.size() * 4);
        for (const auto& f : mesh.faces) {
            int m01 = midpoint_index(f[0], f[1]);
            int m12 = midpoint_index(f[1], f[2]);
            int m02 = midpoint_index(f[0], f[2]);
            next.push_back({f[0], m01, m02});
            next.push_back({f[1], m12, m01});
            next.push_back({f[2], m02, m12});
            next.push_back({m01, m12, m02});
        }
        mesh.faces = std::move(next);
    }
    return mesh;
}

struct AdjacencyIndex {
    // Sorted neighbor lists, one per vertex.
    std::vector<std::vector<int>> vertex_neighbors;
    // Sorted incident-face lists, one per vertex.
    std::vector<std::vector<int>> vertex_faces;
    // Undirected edge (min,max) -> incident faces (1 or 2 for manifold meshes).
    std::map<std::pair<int, int>, std::vector<int>> edge_to_faces;

    int num_edges() const { return static_cast<int>(edge_to_faces.size()); }
};

inline AdjacencyIndex build_adjacency(const Mesh& mesh) {
    validate(mesh);
    AdjacencyIndex adj;
    adj.vertex_neighbors.resize(mesh.vertices.size());
    adj.vertex_faces.resize(mesh.vertices.size());
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& face = mesh.faces[f];
        for (int k = 0; k < 3; ++k) {
            int a = face[k], b = face[(k + 1) % 3];
            adj.vertex_faces[a].push_back(static_cast<int>(f));
            adj.edge_to_faces[std::minmax(a, b)].push_back(static_cast<int>(f));
        }
    }
    for (const auto& [edge, _] : adj.edge_to_faces) {
        adj.vertex_neighbors[edge.first].push_back(edge.second);
        adj.vertex_neighbors[edge.second].push_back(edge.first);
    }
    for (auto& nbrs : adj.vertex_neighbors) std::sort(nbrs.begin(), nbrs.end());
    for (auto& fs : adj.vertex_faces) std::sort(fs.begin(), fs.end());
    return adj;
}

// True when faces a and b of the same mesh have at least one vertex in common.
inline bool faces_share_vertex(const Mesh& mesh, int a, int b) {
    for (int i : mesh.faces[a]) {
        for (int j : mesh.faces[b]) {
            if (i == j) return true;
        }
    }
    return false;
}

}  // namespace meshpush
