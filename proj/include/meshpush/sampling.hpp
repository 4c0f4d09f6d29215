// sampling.hpp — area-proportional surface sampling and the symmetric
// Chamfer distance with its gradient on the first point set.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <vector>

#include "meshpush/mesh.hpp"
#include "meshpush/rng.hpp"

namespace meshpush {

struct SurfaceSamples {
    std::vector<Vec3> points;
    std::vector<int> face;                       // parent face per point
    std::vector<std::array<double, 3>> weights;  // barycentric per point

    int size() const { return static_cast<int>(points.size()); }
};

// Faces weighted by area, positions uniform within each face. Each point is
// reconstructible as weights . face vertices, which is the gradient path.
inline SurfaceSamples sample_surface(const Mesh& mesh, int n, uint64_t seed) {
    if (n < 1) throw Error("sample count must be at least 1");
    validate(mesh);

    std::vector<double> cumulative(mesh.faces.size());
    double total = 0.0;
    for (size_t f = 0; f < mesh.faces.size(); ++f) {
        const auto& fc = mesh.faces[f];
        Vec3 e1 = mesh.vertices[fc[1]] - mesh.vertices[fc[0]];
        Vec3 e2 = mesh.vertices[fc[2]] - mesh.vertices[fc[0]];
        total += 0.5 * norm(cross(e1, e2));
        cumulative[f] = total;
    }
    if (!(total > 0.0)) throw ZeroAreaMesh("mesh has zero total surface area");

    Rng rng(seed);
    SurfaceSamples out;
    out.points.reserve(n);
    out.face.reserve(n);
    out.weights.reserve(n);
    for (int i = 0; i < n; ++i) {
        double pick = rng.uniform() * total;
        int f = static_cast<int>(
            std::lower_bound(cumulative.begin(), cumulative.end(), pick) -
            cumulative.begin());
        f = std::min<int>(f, static_cast<int>(mesh.faces.size()) - 1);

        double s = std::sqrt(rng.uniform());
        double t = rng.uniform();
        std::array<double, 3> w{1.0 - s, s * (1.0 - t), s * t};
        const auto& fc = mesh.faces[f];
        Vec3 p = mesh.vertices[fc[0]] * w[0] + mesh.vertices[fc[1]] * w[1] +
                 mesh.vertices[fc[2]] * w[2];
        out.points.push_back(p);
        out.face.push_back(f);
        out.weights.push_back(w);
    }
    return out;
}

struct ChamferResult {
    double value = 0.0;
    std::vector<Vec3> grad_a;  // gradient with respect to the A points
};

// Symmetric Chamfer: mean squared nearest-neighbor distance A->B plus B->A.
// grad_a carries both the A-side terms and the B-side matches that land on
// an A point.
inline ChamferResult chamfer_distance(const std::vector<Vec3>& a,
                                      const std::vector<Vec3>& b) {
    if (a.empty() || b.empty()) throw EmptyPointSet("chamfer needs two nonempty sets");

    ChamferResult res;
    res.grad_a.assign(a.size(), Vec3{0, 0, 0});
    const double inv_a = 1.0 / static_cast<double>(a.size());
    const double inv_b = 1.0 / static_cast<double>(b.size());

    for (size_t i = 0; i < a.size(); ++i) {
        double best = squared_norm(a[i] - b[0]);
        size_t best_j = 0;
        for (size_t j = 1; j < b.size(); ++j) {
            double d2 = squared_norm(a[i] - b[j]);
            if (d2 < best) {
                best = d2;
                best_j = j;
            }
        }
        res.value += inv_a * best;
        res.grad_a[i] += (a[i] - b[best_j]) * (2.0 * inv_a);
    }
    for (size_t j = 0; j < b.size(); ++j) {
        double best = squared_norm(b[j] - a[0]);
        size_t best_i = 0;
        for (size_t i = 1; i < a.size(); ++i) {
            double d2 = squared_norm(b[j] - a[i]);
            if (d2 < best) {
                best = d2;
                best_i = i;
            }
        }
        res.value += inv_b * best;
        res.grad_a[best_i] += (a[best_i] - b[j]) * (2.0 * inv_b);
    }
    return res;
}

}  // namespace meshpush
