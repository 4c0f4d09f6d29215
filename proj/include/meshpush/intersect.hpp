// intersect.hpp — triangle-triangle intersection in 3D and the mesh
// self-intersection metric. Closed-set convention: triangles touching within
// tol count as intersecting.
#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <vector>

#include "meshpush/mesh.hpp"

namespace meshpush {

namespace detail {

inline double point_segment_dist_2d(const Vec2& p, const Vec2& a, const Vec2& b) {
    Vec2 ab = b - a;
    double len2 = squared_norm(ab);
    if (len2 == 0.0) return norm(p - a);
    double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
    return norm(p - (a + ab * t));
}

inline bool segments_intersect_2d(const Vec2& p1, const Vec2& p2, const Vec2& q1,
                                  const Vec2& q2, double tol) {
    double d1 = cross2(q2 - q1, p1 - q1);
    double d2 = cross2(q2 - q1, p2 - q1);
    double d3 = cross2(p2 - p1, q1 - p1);
    double d4 = cross2(p2 - p1, q2 - p1);
    if (((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) &&
        ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))) {
        return true;
    }
    // Near-touching and collinear cases reduce to endpoint proximity.
    return point_segment_dist_2d(p1, q1, q2) <= tol ||
           point_segment_dist_2d(p2, q1, q2) <= tol ||
           point_segment_dist_2d(q1, p1, p2) <= tol ||
           point_segment_dist_2d(q2, p1, p2) <= tol;
}

inline bool point_in_tri_2d(const Vec2& p, const std::array<Vec2, 3>& t, double tol) {
    for (int k = 0; k < 3; ++k) {
        const Vec2& a = t[k];
        const Vec2& b = t[(k + 1) % 3];
        double s = cross2(b - a, p - a);
        // Signed distance to the edge line; tol makes the boundary inclusive.
        if (s < -tol * std::max(norm(b - a), 1e-300)) return false;
    }
    return true;
}

inline bool coplanar_tri_overlap(std::array<Vec3, 3> a, std::array<Vec3, 3> b,
                                 const Vec3& normal, double tol) {
    // Project onto the plane's dominant axis pair; distances contract by at
    // most a bounded factor, which the closed convention tolerates.
    double nx = std::abs(normal.x), ny = std::abs(normal.y), nz = std::abs(normal.z);
    int drop = (nx >= ny && nx >= nz) ? 0 : (ny >= nz ? 1 : 2);
    auto to2d = [drop](const Vec3& v) -> Vec2 {
        if (drop == 0) return {v.y, v.z};
        if (drop == 1) return {v.x, v.z};
        return {v.x, v.y};
    };
    std::array<Vec2, 3> a2{to2d(a[0]), to2d(a[1]), to2d(a[2])};
    std::array<Vec2, 3> b2{to2d(b[0]), to2d(b[1]), to2d(b[2])};
    if (cross2(a2[1] - a2[0], a2[2] - a2[0]) < 0.0) std::swap(a2[1], a2[2]);
    if (cross2(b2[1] - b2[0], b2[2] - b2[0]) < 0.0) std::swap(b2[1], b2[2]);

    for (int i = 0; i < 3; ++i) {
        if (point_in_tri_2d(a2[i], b2, tol)) return true;
        if (point_in_tri_2d(b2[i], a2, tol)) return true;
    }
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            if (segments_intersect_2d(a2[i], a2[(i + 1) % 3], b2[j], b2[(j + 1) % 3],
                                      tol)) {
                return true;
            }
        }
    }
    return false;
}

// Signed plane distances of triangle `t`'s vertices against plane (n, p0),
// snapped to zero within tol (tol is a geometric distance; n need not be
// unit). Returns false when all three are strictly one side.
inline bool plane_split(const std::array<Vec3, 3>& t, const Vec3& n, const Vec3& p0,
                        double tol, std::array<double, 3>& d) {
    double snap = tol * norm(n);
    for (int i = 0; i < 3; ++i) {
        d[i] = dot(n, t[i] - p0);
        if (std::abs(d[i]) <= snap) d[i] = 0.0;
    }
    bool all_pos = d[0] > 0.0 && d[1] > 0.0 && d[2] > 0.0;
    bool all_neg = d[0] < 0.0 && d[1] < 0.0 && d[2] < 0.0;
    return !(all_pos || all_neg);
}

// Interval of line parameters (projection onto `dir`) where triangle `t`
// meets the plane whose snapped signed distances are `d`.
inline void plane_cross_interval(const std::array<Vec3, 3>& t,
                                 const std::array<double, 3>& d, const Vec3& dir,
                                 double& lo, double& hi) {
    lo = 1e300;
    hi = -1e300;
    auto add = [&](double p) {
        lo = std::min(lo, p);
        hi = std::max(hi, p);
    };
    for (int i = 0; i < 3; ++i) {
        if (d[i] == 0.0) add(dot(dir, t[i]));
        int j = (i + 1) % 3;
        if (d[i] * d[j] < 0.0) {
            double s = d[i] / (d[i] - d[j]);
            add(dot(dir, t[i] + (t[j] - t[i]) * s));
        }
    }
}

}  // namespace detail

// Interval/plane-splitting test over closed triangles. Degenerate (zero-area)
// triangles are reported as non-intersecting; robust predicates for those are
// out of scope.
inline bool tri_tri_intersect_3d(const std::array<Vec3, 3>& a,
                                 const std::array<Vec3, 3>& b, double tol) {
    Vec3 na = cross(a[1] - a[0], a[2] - a[0]);
    Vec3 nb = cross(b[1] - b[0], b[2] - b[0]);
    if (norm(na) < 1e-300 || norm(nb) < 1e-300) return false;

    std::array<double, 3> da, db;
    if (!detail::plane_split(a, nb, b[0], tol, da)) return false;
    if (!detail::plane_split(b, na, a[0], tol, db)) return false;

    if (da[0] == 0.0 && da[1] == 0.0 && da[2] == 0.0) {
        return detail::coplanar_tri_overlap(a, b, nb, tol);
    }

    Vec3 dir = cross(na, nb);
    double dir_len = norm(dir);
    if (dir_len < 1e-300) {
        // Parallel but not coplanar planes with both triangles straddling can
        // only arise from snapping; fall back to the coplanar test.
        return detail::coplanar_tri_overlap(a, b, nb, tol);
    }

    double alo, ahi, blo, bhi;
    detail::plane_cross_interval(a, da, dir, alo, ahi);
    detail::plane_cross_interval(b, db, dir, blo, bhi);
    if (alo > ahi || blo > bhi) return false;

    double slack = tol * dir_len;
    return ahi >= blo - slack && bhi >= alo - slack;
}

inline std::array<Vec3, 3> face_triangle(const Mesh& mesh, int f) {
    const auto& fc = mesh.faces[f];
    return {mesh.vertices[fc[0]], mesh.vertices[fc[1]], mesh.vertices[fc[2]]};
}

struct IntersectionReport {
    int intersecting_count = 0;
    double fraction = 0.0;
    int64_t pairs_tested = 0;
};

namespace detail {

struct Aabb3 {
    Vec3 lo{1e300, 1e300, 1e300};
    Vec3 hi{-1e300, -1e300, -1e300};

    void expand(const Vec3& p) {
        lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
        hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
    }
    bool overlaps(const Aabb3& o, double slack) const {
        return lo.x <= o.hi.x + slack && o.lo.x <= hi.x + slack &&
               lo.y <= o.hi.y + slack && o.lo.y <= hi.y + slack &&
               lo.z <= o.hi.z + slack && o.lo.z <= hi.z + slack;
    }
};

inline IntersectionReport count_intersections_over_pairs(
    const Mesh& mesh, double tol, const std::vector<std::pair<int, int>>& pairs) {
    std::vector<char> hit(mesh.faces.size(), 0);
    IntersectionReport report;
    for (const auto& [fa, fb] : pairs) {
        ++report.pairs_tested;
        if (tri_tri_intersect_3d(face_triangle(mesh, fa), face_triangle(mesh, fb), tol)) {
            hit[fa] = 1;
            hit[fb] = 1;
        }
    }
    for (char h : hit) report.intersecting_count += h;
    report.fraction =
        mesh.faces.empty() ? 0.0
                           : static_cast<double>(report.intersecting_count) /
                                 static_cast<double>(mesh.faces.size());
    return report;
}

}  // namespace detail

// tol <= 0 selects the default 1e-9 x bbox diagonal.
inline double resolve_intersection_tol(const Mesh& mesh, double tol) {
    if (tol > 0.0) return tol;
    return 1e-9 * bbox_diagonal(mesh);
}

// Exhaustive reference: every non-shared-vertex pair is tested.
inline IntersectionReport count_intersecting_faces_exhaustive(const Mesh& mesh,
                                                              double tol = -1.0) {
    tol = resolve_intersection_tol(mesh, tol);
    std::vector<std::pair<int, int>> pairs;
    const int nf = static_cast<int>(mesh.faces.size());
    for (int a = 0; a < nf; ++a) {
        for (int b = a + 1; b < nf; ++b) {
            if (!faces_share_vertex(mesh, a, b)) pairs.emplace_back(a, b);
        }
    }
    return detail::count_intersections_over_pairs(mesh, tol, pairs);
}

// Grid-accelerated count. The grid emits a superset of all AABB-overlapping
// pairs (boxes compared with tol slack), so the marked-face set matches the
// exhaustive pass exactly.
inline IntersectionReport count_intersecting_faces(const Mesh& mesh, double tol = -1.0) {
    tol = resolve_intersection_tol(mesh, tol);
    const int nf = static_cast<int>(mesh.faces.size());
    if (nf < 2) return {};

    std::vector<detail::Aabb3> boxes(nf);
    for (int f = 0; f < nf; ++f) {
        for (int k = 0; k < 3; ++k) boxes[f].expand(mesh.vertices[mesh.faces[f][k]]);
    }

    std::vector<double> diags(nf);
    for (int f = 0; f < nf; ++f) diags[f] = norm(boxes[f].hi - boxes[f].lo);
    std::nth_element(diags.begin(), diags.begin() + nf / 2, diags.end());
    double cell = diags[nf / 2] + 2.0 * tol;

    detail::Aabb3 world;
    for (const auto& b : boxes) {
        world.expand(b.lo);
        world.expand(b.hi);
    }
    if (!(cell > 0.0)) cell = std::max(norm(world.hi - world.lo), 1.0);

    auto grid_dim = [&](double lo, double hi) {
        return std::max(1, static_cast<int>((hi - lo) / cell) + 1);
    };
    int nx = grid_dim(world.lo.x, world.hi.x);
    int ny = grid_dim(world.lo.y, world.hi.y);
    int nz = grid_dim(world.lo.z, world.hi.z);
    while (static_cast<int64_t>(nx) * ny * nz > 1 << 22) {
        nx = std::max(1, nx / 2);
        ny = std::max(1, ny / 2);
        nz = std::max(1, nz / 2);
        cell *= 2.0;
    }

    std::vector<std::vector<int>> bins(static_cast<size_t>(nx) * ny * nz);
    auto clamp_idx = [](int v, int n) { return std::clamp(v, 0, n - 1); };
    for (int f = 0; f < nf; ++f) {
        // Inflate by tol so near-touching pairs land in a shared cell.
        int x0 = clamp_idx(static_cast<int>((boxes[f].lo.x - tol - world.lo.x) / cell), nx);
        int x1 = clamp_idx(static_cast<int>((boxes[f].hi.x + tol - world.lo.x) / cell), nx);
        int y0 = clamp_idx(static_cast<int>((boxes[f].lo.y - tol - world.lo.y) / cell), ny);
        int y1 = clamp_idx(static_cast<int>((boxes[f].hi.y + tol - world.lo.y) / cell), ny);
        int z0 = clamp_idx(static_cast<int>((boxes[f].lo.z - tol - world.lo.z) / cell), nz);
        int z1 = clamp_idx(static_cast<int>((boxes[f].hi.z + tol - world.lo.z) / cell), nz);
        for (int z = z0; z <= z1; ++z) {
            for (int y = y0; y <= y1; ++y) {
                for (int x = x0; x <= x1; ++x) {
                    bins[(static_cast<size_t>(z) * ny + y) * nx + x].push_back(f);
                }
            }
        }
    }

    std::vector<std::pair<int, int>> pairs;
    for (const auto& bin : bins) {
        for (size_t i = 0; i < bin.size(); ++i) {
            for (size_t j = i + 1; j < bin.size(); ++j) {
                int a = std::min(bin[i], bin[j]), b = std::max(bin[i], bin[j]);
                if (!boxes[a].overlaps(boxes[b], 2.0 * tol)) continue;
                if (faces_share_vertex(mesh, a, b)) continue;
                pairs.emplace_back(a, b);
            }
        }
    }
    std::sort(pairs.begin(), pairs.end());
    pairs.erase(std::unique(pairs.begin(), pairs.end()), pairs.end());
    return detail::count_intersections_over_pairs(mesh, tol, pairs);
}

}  // namespace meshpush
