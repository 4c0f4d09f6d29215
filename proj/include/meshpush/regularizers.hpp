// regularizers.hpp — smoothness energies over mesh vertices with exact gradients.
//
// Both energies are translation invariant. laplacian_energy is also rotation
// invariant. Gradients are one 3-vector per vertex, suitable for direct use in
// first-order optimization.
#pragma once

#include <vector>

#include "meshpush/mesh.hpp"

namespace meshpush {

struct EnergyResult {
    double value = 0.0;
    std::vector<Vec3> gradient;  // d value / d vertex, one entry per vertex
};

// Uniform-Laplacian energy: E = sum_v || v - mean(neighbors(v)) ||^2.
inline EnergyResult laplacian_energy(const Mesh& mesh, const AdjacencyIndex& adj) {
    EnergyResult result;
    const int nv = mesh.num_vertices();
    result.gradient.assign(nv, Vec3{});

    std::vector<Vec3> lap(nv);
    for (int v = 0; v < nv; ++v) {
        const auto& nbrs = adj.vertex_neighbors[v];
        if (nbrs.empty()) {
            throw IsolatedVertex("vertex " + std::to_string(v) + " has no neighbors");
        }
        Vec3 mean{};
        for (int u : nbrs) mean += mesh.vertices[u];
        mean = mean / static_cast<double>(nbrs.size());
        lap[v] = mesh.vertices[v] - mean;
        result.value += squared_norm(lap[v]);
    }
    // d/dv of ||lap_v||^2 plus the -1/|N(u)| share of every neighbor's term.
    for (int v = 0; v < nv; ++v) {
        result.gradient[v] += 2.0 * lap[v];
        for (int u : adj.vertex_neighbors[v]) {
            result.gradient[v] -= (2.0 / static_cast<double>(adj.vertex_neighbors[u].size())) *
                                  lap[u];
        }
    }
    return result;
}

inline EnergyResult laplacian_energy(const Mesh& mesh) {
    return laplacian_energy(mesh, build_adjacency(mesh));
}

// Crease energy: E = sum over interior edges of (1 - cos theta_e)^2, where
// theta_e is the dihedral angle between the unit normals of the two incident
// faces. Zero exactly when adjacent faces are coplanar and consistently
// oriented. Boundary edges (one face) contribute nothing; edges with more
// than two faces are rejected.
inline EnergyResult crease_energy(const Mesh& mesh, const AdjacencyIndex& adj) {
    EnergyResult result;
    const int nv = mesh.num_vertices();
    result.gradient.assign(nv, Vec3{});

    const int nf = mesh.num_faces();
    std::vector<Vec3> raw_normal(nf);
    std::vector<double> raw_len(nf);
    for (int f = 0; f < nf; ++f) {
        const auto& face = mesh.faces[f];
        raw_normal[f] = cross(mesh.vertices[face[1]] - mesh.vertices[face[0]],
                              mesh.vertices[face[2]] - mesh.vertices[face[0]]);
        raw_len[f] = norm(raw_normal[f]);
        if (raw_len[f] <= 0.0) {
            throw DegenerateTriangle("face " + std::to_string(f) + " has zero area");
        }
    }

    // Accumulates dE/dN_f (N_f the unnormalized normal) into the face's vertices
    // using dN/da = x (b-c), dN/db = x (c-a), dN/dc = x (a-b).
    auto scatter_normal_grad = [&](int f, const Vec3& g) {
        const auto& face = mesh.faces[f];
        const Vec3& a = mesh.vertices[face[0]];
        const Vec3& b = mesh.vertices[face[1]];
        const Vec3& c = mesh.vertices[face[2]];
        result.gradient[face[0]] += cross(b - c, g);
        result.gradient[face[1]] += cross(c - a, g);
        result.gradient[face[2]] += cross(a - b, g);
    };

    for (const auto& [edge, incident] : adj.edge_to_faces) {
        if (incident.size() > 2) {
            throw NonManifoldEdge("edge (" + std::to_string(edge.first) + "," +
                                  std::to_string(edge.second) + ") has " +
                                  std::to_string(incident.size()) + " incident faces");
        }
        if (incident.size() != 2) continue;
        int f1 = incident[0], f2 = incident[1];
        Vec3 n1 = raw_normal[f1] / raw_len[f1];
        Vec3 n2 = raw_normal[f2] / raw_len[f2];
        double c12 = dot(n1, n2);
        double one_minus = 1.0 - c12;
        result.value += one_minus * one_minus;

        double dE_dc = -2.0 * one_minus;
        // d(n1.n2)/dN1 = (n2 - (n1.n2) n1) / |N1|, symmetric for N2.
        Vec3 g1 = (n2 - n1 * c12) * (dE_dc / raw_len[f1]);
        Vec3 g2 = (n1 - n2 * c12) * (dE_dc / raw_len[f2]);
        scatter_normal_grad(f1, g1);
        scatter_normal_grad(f2, g2);
    }
    return result;
}

inline EnergyResult crease_energy(const Mesh& mesh) {
    return crease_energy(mesh, build_adjacency(mesh));
}

}  // namespace meshpush
