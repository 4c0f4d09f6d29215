// Shared test fixtures: small meshes with hand-checkable properties.
#pragma once

#include <filesystem>
#include <fstream>
#include <string>

#include "meshpush/mesh.hpp"
#include "meshpush/obj_io.hpp"

namespace fixtures {

// Two parallel horizontal triangles with identical xy footprint
// (0,0),(1,0),(0,1): face 0 at z=0, face 1 at z=0.5. Vertices 0-2 lower,
// 3-5 upper. Under direction +z the overlap polygon is the footprint itself
// and every polygon corner coincides with a vertex of both faces.
inline meshpush::Mesh stacked_triangles() {
    meshpush::Mesh m;
    m.vertices = {{0, 0, 0},   {1, 0, 0},   {0, 1, 0},
                  {0, 0, 0.5}, {1, 0, 0.5}, {0, 1, 0.5}};
    m.faces = {{0, 1, 2}, {3, 4, 5}};
    return m;
}

// Two triangles where the second pierces the first's plane inside its
// footprint: a genuine 3D intersection with no shared vertices.
inline meshpush::Mesh piercing_pair() {
    meshpush::Mesh m;
    m.vertices = {{0, 0, 0},        {1, 0, 0},        {0, 1, 0},
                  {0.2, 0.2, -0.5}, {0.3, 0.2, 0.5},  {0.2, 0.3, 0.5}};
    m.faces = {{0, 1, 2}, {3, 4, 5}};
    return m;
}

// Two interpenetrating tetrahedra arranged point-to-point through each
// other: every one of the 8 faces crosses a face of the other tetrahedron,
// so the intersecting-face fraction is exactly 1.
inline meshpush::Mesh two_tetrahedra() {
    meshpush::Mesh m;
    m.vertices = {
        {0, 0, 0},   {1, 0, 0},   {0.5, 1, 0},   {0.5, 0.3, 0.9},   // tet A
        {0, 0, 0.8}, {1, 0, 0.8}, {0.5, 1, 0.8}, {0.5, 0.3, -0.1},  // tet B
    };
    m.faces = {
        {0, 1, 2}, {0, 1, 3}, {1, 2, 3}, {2, 0, 3},
        {4, 5, 6}, {4, 5, 7}, {5, 6, 7}, {6, 4, 7},
    };
    return m;
}

// Closed concave solid: an L-shaped polygon in the xz plane extruded along
// y in [0,1]. 12 vertices, 20 consistently outward-oriented triangles.
// Bounding box [0,2] x [0,1] x [0,2]; the notch occupies x>1, z>1.
inline meshpush::Mesh l_solid() {
    meshpush::Mesh m;
    // L outline, counter-clockwise in the xz plane.
    const double outline[6][2] = {{0, 0}, {2, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 2}};
    for (double y : {0.0, 1.0}) {
        for (const auto& p : outline) m.vertices.push_back({p[0], y, p[1]});
    }
    // Caps fan from corner (0,0)/(0,2)... both caps fan from outline[0],
    // which sees the whole polygon. Bottom keeps outline order (outward -y),
    // top reverses it (outward +y).
    m.faces = {{0, 1, 2}, {0, 2, 3}, {0, 3, 4}, {0, 4, 5}};
    m.faces.insert(m.faces.end(), {{6, 11, 10}, {6, 10, 9}, {6, 9, 8}, {6, 8, 7}});
    for (int i = 0; i < 6; ++i) {
        int b = i, bn = (i + 1) % 6, t = 6 + i, tn = 6 + (i + 1) % 6;
        m.faces.push_back({b, t, tn});
        m.faces.push_back({b, tn, bn});
    }
    return m;
}

// Three thin planar rectangular planks (two triangles each) forming a
// cyclic "each one passes under the next" loop around the origin. Plank j
// runs from corner C_j to corner C_{j+1} of an equilateral triangle, tilted
// so its far end (z=0) lies `gap` below the next plank's near end (z=gap).
// The depth-ordering digraph is a directed 3-cycle, so a pushing step that
// demands a buffer much larger than `gap` has no feasible solution.
inline meshpush::Mesh cyclic_planks(double gap = 0.02, double extension = 0.25,
                                    double width = 0.25) {
    meshpush::Mesh m;
    const double pi = 3.14159265358979323846;
    meshpush::Vec2 corner[3];
    for (int j = 0; j < 3; ++j) {
        double a = pi / 2 + 2 * pi * j / 3;
        corner[j] = {std::cos(a), std::sin(a)};
    }
    for (int j = 0; j < 3; ++j) {
        meshpush::Vec2 c0 = corner[j], c1 = corner[(j + 1) % 3];
        meshpush::Vec2 axis = c1 - c0;
        double len = meshpush::norm(axis);
        meshpush::Vec2 u = axis * (1.0 / len);
        meshpush::Vec2 n = {-u.y, u.x};
        meshpush::Vec2 lo = c0 - u * extension;  // near end, z = gap
        meshpush::Vec2 hi = c1 + u * extension;  // far end, z = 0
        auto at = [&](const meshpush::Vec2& base, double side, double z) {
            meshpush::Vec2 p = base + n * (side * width / 2);
            return meshpush::Vec3{p.x, p.y, z};
        };
        int v = m.num_vertices();
        m.vertices.push_back(at(lo, -1, gap));
        m.vertices.push_back(at(lo, +1, gap));
        m.vertices.push_back(at(hi, +1, 0));
        m.vertices.push_back(at(hi, -1, 0));
        m.faces.push_back({v, v + 1, v + 2});
        m.faces.push_back({v, v + 2, v + 3});
    }
    return m;
}

inline void write_obj(const std::string& path, const meshpush::Mesh& mesh) {
    std::ofstream out(path);
    meshpush::save_obj(mesh, out);
}

// Fresh per-process scratch directory under the system temp root.
inline std::string scratch_dir(const std::string& tag) {
    namespace fs = std::filesystem;
    fs::path dir = fs::temp_directory_path() /
                   (tag + "_" + std::to_string(::getpid()));
    fs::create_directories(dir);
    return dir.string();
}

}  // namespace fixtures
