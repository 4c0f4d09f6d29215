// geometry.hpp — projection perpendicular to a motion direction, convex
// triangle-triangle clipping, barycentric coordinates, and a uniform-grid
// broad phase over projected face bounding boxes.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <unordered_set>
#include <vector>

#include "meshpush/mesh.hpp"

namespace meshpush {

// Right-handed orthonormal frame {e1, e2, u_hat}; e1 and e2 span the plane
// perpendicular to the motion direction u_hat.
struct ProjectionFrame {
    Vec3 u_hat;
    Vec3 e1;
    Vec3 e2;
};

// Deterministic frame construction: Gram-Schmidt against the coordinate axis
// with the smallest |component| of u_hat (first axis on ties).
inline ProjectionFrame orthonormal_basis(const Vec3& direction) {
    double len = norm(direction);
    if (!(len > 1e-9)) {
        throw ZeroDirection("direction has near-zero length " + std::to_string(len));
    }
    ProjectionFrame frame;
    frame.u_hat = direction / len;

    double ax = std::abs(frame.u_hat.x), ay = std::abs(frame.u_hat.y),
           az = std::abs(frame.u_hat.z);
    Vec3 axis{1, 0, 0};
    if (ay < ax && ay <= az) {
        axis = {0, 1, 0};
    } else if (az < ax && az < ay) {
        axis = {0, 0, 1};
    }
    Vec3 e1 = axis - frame.u_hat * dot(axis, frame.u_hat);
    frame.e1 = normalized(e1);
    frame.e2 = cross(frame.u_hat, frame.e1);
    return frame;
}

// Per-vertex in-plane coordinates and depth along u_hat. Motion along u_hat
// changes only `depth`, which is what keeps a per-step overlap set exact.
struct ProjectedMesh {
    std::vector<Vec2> coords2d;
    std::vector<double> depth;
};

inline ProjectedMesh project_mesh(const Mesh& mesh, const ProjectionFrame& frame) {
    ProjectedMesh proj;
    proj.coords2d.reserve(mesh.vertices.size());
    proj.depth.reserve(mesh.vertices.size());
    for (const auto& v : mesh.vertices) {
        proj.coords2d.push_back({dot(v, frame.e1), dot(v, frame.e2)});
        proj.depth.push_back(dot(v, frame.u_hat));
    }
    return proj;
}

// Convex polygon with counter-clockwise corners. The intersection of two
// triangles has at most 6 corners.
struct ConvexPolygon2D {
    std::vector<Vec2> corners;

    bool empty() const { return corners.empty(); }

    double area() const {
        double twice = 0.0;
        const size_t n = corners.size();
        for (size_t i = 0; i < n; ++i) {
            twice += cross2(corners[i], corners[(i + 1) % n]);
        }
        return 0.5 * twice;
    }
};

inline double triangle_area(const std::array<Vec2, 3>& t) {
    return 0.5 * cross2(t[1] - t[0], t[2] - t[0]);
}

namespace detail {

// Successive half-plane clipping of `poly` against edge (a,b) of a CCW clip
// polygon; keeps the left side.
inline void clip_against_edge(std::vector<Vec2>& poly, const Vec2& a, const Vec2& b,
                              std::vector<Vec2>& scratch) {
    scratch.clear();
    const size_t n = poly.size();
    Vec2 edge = b - a;
    for (size_t i = 0; i < n; ++i) {
        const Vec2& p = poly[i];
        const Vec2& q = poly[(i + 1) % n];
        double sp = cross2(edge, p - a);
        double sq = cross2(edge, q - a);
        if (sp >= 0.0) {
            scratch.push_back(p);
            if (sq < 0.0) {
                double t = sp / (sp - sq);
                scratch.push_back(p + (q - p) * t);
            }
        } else if (sq >= 0.0) {
            double t = sp / (sp - sq);
            scratch.push_back(p + (q - p) * t);
        }
    }
    poly.swap(scratch);
}

}  // namespace detail

// Intersection region of two 2D triangles. Returns an empty polygon when the
// intersection area is below area_tol. Input orientation is normalized
// internally; callers must filter triangles that are themselves degenerate
// (|area| < area_tol).
inline ConvexPolygon2D clip_triangles(std::array<Vec2, 3> t1, std::array<Vec2, 3> t2,
                                      double area_tol) {
    if (triangle_area(t1) < 0.0) std::swap(t1[1], t1[2]);
    if (triangle_area(t2) < 0.0) std::swap(t2[1], t2[2]);

    std::vector<Vec2> poly(t1.begin(), t1.end());
    std::vector<Vec2> scratch;
    scratch.reserve(8);
    for (int e = 0; e < 3 && !poly.empty(); ++e) {
        detail::clip_against_edge(poly, t2[e], t2[(e + 1) % 3], scratch);
    }

    // Drop duplicate corners produced by vertices lying exactly on clip edges.
    ConvexPolygon2D out;
    for (const auto& p : poly) {
        if (out.corners.empty() || norm(p - out.corners.back()) > 1e-12) {
            out.corners.push_back(p);
        }
    }
    while (out.corners.size() > 1 && norm(out.corners.front() - out.corners.back()) <= 1e-12) {
        out.corners.pop_back();
    }
    if (out.corners.size() < 3 || out.area() < area_tol) {
        out.corners.clear();
    }
    return out;
}

struct Barycentric {
    std::array<double, 3> b{};
};

// Barycentric coordinates of `point` with respect to a 2D triangle. Throws
// when the triangle's doubled area is too small to invert stably.
inline Barycentric barycentric(const Vec2& point, const std::array<Vec2, 3>& tri,
                               double area_tol = 1e-12) {
    Vec2 r0 = tri[0] - tri[2];
    Vec2 r1 = tri[1] - tri[2];
    double denom = cross2(r0, r1);
    if (std::abs(denom) < 2.0 * area_tol) {
        throw DegenerateTriangle("triangle area below tolerance in barycentric()");
    }
    Vec2 rp = point - tri[2];
    Barycentric bc;
    bc.b[0] = cross2(rp, r1) / denom;
    bc.b[1] = cross2(r0, rp) / denom;
    bc.b[2] = 1.0 - bc.b[0] - bc.b[1];
    return bc;
}

struct Aabb2 {
    Vec2 lo{1e300, 1e300};
    Vec2 hi{-1e300, -1e300};

    void expand(const Vec2& p) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
    bool overlaps(const Aabb2& o) const {
        return lo.x <= o.hi.x && o.lo.x <= hi.x && lo.y <= o.hi.y && o.lo.y <= hi.y;
    }
    double diagonal() const { return norm(hi - lo); }
};

inline std::vector<Aabb2> face_bboxes_2d(const ProjectedMesh& proj,
                                         const std::vector<std::array<int, 3>>& faces) {
    std::vector<Aabb2> boxes(faces.size());
    for (size_t f = 0; f < faces.size(); ++f) {
        for (int k = 0; k < 3; ++k) boxes[f].expand(proj.coords2d[faces[f][k]]);
    }
    return boxes;
}

// All face pairs whose projected bounding boxes overlap, excluding pairs that
// share a mesh vertex. Uniform-grid binning with cell size near the median
// face bbox diagonal; the emitted set equals the exhaustive O(N^2) bbox pass.
// Output sorted by (min index, max index).
inline std::vector<std::pair<int, int>> broad_phase_pairs(
    const ProjectedMesh& proj, const Mesh& mesh) {
    const auto& faces = mesh.faces;
    const int nf = static_cast<int>(faces.size());
    std::vector<std::pair<int, int>> pairs;
    if (nf < 2) return pairs;

    std::vector<Aabb2> boxes = face_bboxes_2d(proj, faces);

    std::vector<double> diags(nf);
    for (int f = 0; f < nf; ++f) diags[f] = boxes[f].diagonal();
    std::nth_element(diags.begin(), diags.begin() + nf / 2, diags.end());
    double cell = diags[nf / 2];

    Aabb2 world;
    for (const auto& b : boxes) {
        world.expand(b.lo);
        world.expand(b.hi);
    }
    if (!(cell > 0.0)) cell = std::max(world.diagonal(), 1.0);

    int nx = std::max(1, static_cast<int>((world.hi.x - world.lo.x) / cell) + 1);
    int ny = std::max(1, static_cast<int>((world.hi.y - world.lo.y) / cell) + 1);
    // Cap the grid so adversarial inputs cannot explode memory.
    while (static_cast<int64_t>(nx) * ny > 1 << 22) {
        nx = std::max(1, nx / 2);
        ny = std::max(1, ny / 2);
        cell *= 2.0;
    }

    auto cell_range = [&](const Aabb2& b, int& x0, int& x1, int& y0, int& y1) {
        x0 = std::clamp(static_cast<int>((b.lo.x - world.lo.x) / cell), 0, nx - 1);
        x1 = std::clamp(static_cast<int>((b.hi.x - world.lo.x) / cell), 0, nx - 1);
        y0 = std::clamp(static_cast<int>((b.lo.y - world.lo.y) / cell), 0, ny - 1);
        y1 = std::clamp(static_cast<int>((b.hi.y - world.lo.y) / cell), 0, ny - 1);
    };

    std::vector<std::vector<int>> bins(static_cast<size_t>(nx) * ny);
    for (int f = 0; f < nf; ++f) {
        int x0, x1, y0, y1;
        cell_range(boxes[f], x0, x1, y0, y1);
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                bins[static_cast<size_t>(y) * nx + x].push_back(f);
            }
        }
    }

    std::unordered_set<uint64_t> seen;
    for (const auto& bin : bins) {
        for (size_t i = 0; i < bin.size(); ++i) {
            for (size_t j = i + 1; j < bin.size(); ++j) {
                int a = std::min(bin[i], bin[j]), b = std::max(bin[i], bin[j]);
                if (!boxes[a].overlaps(boxes[b])) continue;
                if (faces_share_vertex(mesh, a, b)) continue;
                uint64_t key = (static_cast<uint64_t>(a) << 32) | static_cast<uint32_t>(b);
                if (seen.insert(key).second) pairs.emplace_back(a, b);
            }
        }
    }
    std::sort(pairs.begin(), pairs.end());
    return pairs;
}

}  // namespace meshpush
