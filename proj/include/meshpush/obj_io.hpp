// obj_io.hpp — Wavefront OBJ subset reader/writer plus a JSON color sidecar.
//
// Supported on read: `v x y z`, `f i j k [l ...]` (1-based, `i/t/n` slashes
// stripped), `#` comments. Other keywords are ignored. Polygonal faces are
// fan-triangulated and counted in the result. The writer emits only `v` and
// `f` lines, coordinates with 9 significant digits.
// Face colors travel in a sidecar file: a JSON array of N_F [r,g,b] triples.
#pragma once

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "meshpush/mesh.hpp"

namespace meshpush {

struct ObjLoadResult {
    Mesh mesh;
    int fan_triangulated_faces = 0;  // polygons with >3 corners split on load
};

inline ObjLoadResult load_obj(std::istream& in) {
    ObjLoadResult result;
    Mesh& mesh = result.mesh;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (auto hash = line.find('#'); hash != std::string::npos) {
            line.erase(hash);
        }
        std::istringstream ls(line);
        std::string keyword;
        if (!(ls >> keyword)) continue;
        if (keyword == "v") {
            Vec3 v;
            if (!(ls >> v.x >> v.y >> v.z)) {
                throw ParseError("malformed vertex line", line_no);
            }
            mesh.vertices.push_back(v);
        } else if (keyword == "f") {
            std::vector<int> corners;
            std::string token;
            while (ls >> token) {
                // "i", "i/t", "i//n", "i/t/n" all reduce to the position index.
                if (auto slash = token.find('/'); slash != std::string::npos) {
                    token.erase(slash);
                }
                int idx = 0;
                try {
                    size_t used = 0;
                    idx = std::stoi(token, &used);
                    if (used != token.size()) throw std::invalid_argument(token);
                } catch (const std::exception&) {
                    throw ParseError("malformed face index '" + token + "'", line_no);
                }
                if (idx < 1 || idx > mesh.num_vertices()) {
                    throw IndexOutOfRange("face index " + std::to_string(idx) + " on line " +
                                          std::to_string(line_no) + " outside [1, " +
                                          std::to_string(mesh.num_vertices()) + "]");
                }
                corners.push_back(idx - 1);
            }
            if (corners.size() < 3) {
                throw ParseError("face with fewer than 3 vertices", line_no);
            }
            for (size_t k = 2; k < corners.size(); ++k) {
                mesh.faces.push_back({corners[0], corners[k - 1], corners[k]});
            }
            if (corners.size() > 3) ++result.fan_triangulated_faces;
        }
        // all other keywords ignored
    }
    if (mesh.vertices.empty() || mesh.faces.empty()) {
        throw EmptyMesh("OBJ stream contains no usable geometry");
    }
    validate(mesh);
    return result;
}

inline void save_obj(const Mesh& mesh, std::ostream& out) {
    validate(mesh);
    char buf[96];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
        out << buf;
    }
    for (const auto& f : mesh.faces) {
        out << "f " << f[0] + 1 << ' ' << f[1] + 1 << ' ' << f[2] + 1 << '\n';
    }
}

// Sidecar format: JSON array of [r,g,b] triples, one per face, values in [0,1].
inline void save_face_colors(const Mesh& mesh, std::ostream& out) {
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& c : mesh.face_colors) {
        arr.push_back({c[0], c[1], c[2]});
    }
    out << arr.dump();
}

inline std::vector<std::array<double, 3>> load_face_colors(std::istream& in, int expected_faces) {
    nlohmann::json arr;
    try {
        in >> arr;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("invalid color sidecar: ") + e.what(), 0);
    }
    if (!arr.is_array() || static_cast<int>(arr.size()) != expected_faces) {
        throw Error("color sidecar must hold exactly one [r,g,b] triple per face");
    }
    std::vector<std::array<double, 3>> colors;
    colors.reserve(arr.size());
    for (const auto& entry : arr) {
        if (!entry.is_array() || entry.size() != 3) {
            throw Error("color sidecar entries must be [r,g,b] triples");
        }
        std::array<double, 3> c{entry[0].get<double>(), entry[1].get<double>(),
                                entry[2].get<double>()};
        for (double v : c) {
            if (!(v >= 0.0 && v <= 1.0)) throw Error("face color component outside [0,1]");
        }
        colors.push_back(c);
    }
    return colors;
}

}  // namespace meshpush
