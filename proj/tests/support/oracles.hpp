// Independent oracles the tests check library results against: Monte-Carlo
// area estimation, quadratic-time pair enumeration, central differences.
#pragma once

#include <array>
#include <functional>
#include <utility>
#include <vector>

#include "meshpush/core.hpp"
#include "meshpush/geometry.hpp"
#include "meshpush/mesh.hpp"
#include "meshpush/rng.hpp"

namespace oracles {

inline bool point_in_triangle(const meshpush::Vec2& p,
                              const std::array<meshpush::Vec2, 3>& t) {
    double s0 = meshpush::cross2(t[1] - t[0], p - t[0]);
    double s1 = meshpush::cross2(t[2] - t[1], p - t[1]);
    double s2 = meshpush::cross2(t[0] - t[2], p - t[2]);
    bool any_neg = s0 < 0 || s1 < 0 || s2 < 0;
    bool any_pos = s0 > 0 || s1 > 0 || s2 > 0;
    return !(any_neg && any_pos);
}

struct McArea {
    double estimate = 0.0;
    double box_area = 0.0;  // area of the sampling window (AABB overlap)
};

// Monte-Carlo estimate of the intersection area of two triangles: uniform
// samples over the overlap of their bounding boxes, membership in both.
inline McArea mc_clip_area(const std::array<meshpush::Vec2, 3>& t1,
                           const std::array<meshpush::Vec2, 3>& t2, int n,
                           meshpush::Rng& rng) {
    double lox = -1e300, loy = -1e300, hix = 1e300, hiy = 1e300;
    auto clamp_box = [&](const std::array<meshpush::Vec2, 3>& t) {
        double tx0 = 1e300, ty0 = 1e300, tx1 = -1e300, ty1 = -1e300;
        for (const auto& p : t) {
            tx0 = std::min(tx0, p.x);
            ty0 = std::min(ty0, p.y);
            tx1 = std::max(tx1, p.x);
            ty1 = std::max(ty1, p.y);
        }
        lox = std::max(lox, tx0);
        loy = std::max(loy, ty0);
        hix = std::min(hix, tx1);
        hiy = std::min(hiy, ty1);
    };
    clamp_box(t1);
    clamp_box(t2);
    McArea r;
    if (hix <= lox || hiy <= loy) return r;
    r.box_area = (hix - lox) * (hiy - loy);
    long hits = 0;
    for (int i = 0; i < n; ++i) {
        meshpush::Vec2 p{rng.uniform(lox, hix), rng.uniform(loy, hiy)};
        if (point_in_triangle(p, t1) && point_in_triangle(p, t2)) ++hits;
    }
    r.estimate = r.box_area * static_cast<double>(hits) / n;
    return r;
}

// Quadratic-time reference for the 2D broad phase: every face pair whose
// projected bounding boxes overlap, shared-vertex pairs excluded.
inline std::vector<std::pair<int, int>> exhaustive_projected_pairs(
    const meshpush::Mesh& mesh, const meshpush::ProjectedMesh& proj) {
    std::vector<meshpush::Aabb2> boxes = meshpush::face_bboxes_2d(proj, mesh);
    std::vector<std::pair<int, int>> out;
    const int nf = mesh.num_faces();
    for (int a = 0; a < nf; ++a) {
        for (int b = a + 1; b < nf; ++b) {
            if (!boxes[a].overlaps(boxes[b])) continue;
            if (meshpush::faces_share_vertex(mesh, a, b)) continue;
            out.emplace_back(a, b);
        }
    }
    return out;
}

inline double central_diff(const std::function<double(double)>& f, double x,
                           double h) {
    return (f(x + h) - f(x - h)) / (2 * h);
}

}  // namespace oracles
