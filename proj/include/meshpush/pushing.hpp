// pushing.hpp — the pushing parametrization: overlap constraints between
// projected faces, the per-step LP over push distances, the applied step,
// and the reverse pass with beta and the active set held fixed.
#pragma once

#include <algorithm>
#include <array>
#include <string>
#include <vector>

#include "meshpush/geometry.hpp"
#include "meshpush/intersect.hpp"
#include "meshpush/lp.hpp"
#include "meshpush/mesh.hpp"

namespace meshpush {

struct DeformStep {
    Vec3 direction;
    std::vector<double> d_min;  // per vertex, >= 0
};

struct PushConfig {
    // Values <= 0 auto-scale: epsilon to 1e-3 x bbox diagonal, area_tol to
    // 1e-9 x diagonal^2.
    double epsilon = 0.0;
    double area_tol = 0.0;
    bool verify_output = true;
    int max_lp_iterations = 0;  // <= 0 selects the solver default cap
};

// One ordering constraint: corner `corner` of the overlap polygon between
// face_lower and face_upper. coeffs holds -beta_lower on the lower face's
// vertices followed by +beta_upper on the upper face's; rhs is
// (q_lower - q_upper).u + epsilon. The gradient of rhs with respect to any
// involved vertex depth is -coeff for both halves.
struct PushRow {
    int face_lower = 0;
    int face_upper = 0;
    int corner = 0;
    std::vector<std::pair<int, double>> coeffs;
    double rhs = 0.0;
};

struct PushConstraintSet {
    std::vector<PushRow> rows;
    double epsilon = 0.0;
    int skipped_degenerate = 0;
    int pair_count = 0;
};

struct ResolvedPushConfig {
    double epsilon;
    double area_tol;
    double ordering_tol;
    bool verify_output;
    int max_lp_iterations;
};

inline ResolvedPushConfig resolve_push_config(const PushConfig& cfg, const Mesh& mesh) {
    double diag = bbox_diagonal(mesh);
    ResolvedPushConfig r;
    r.epsilon = cfg.epsilon > 0.0 ? cfg.epsilon : 1e-3 * diag;
    r.area_tol = cfg.area_tol > 0.0 ? cfg.area_tol : 1e-9 * diag * diag;
    r.ordering_tol = 1e-9 * std::max(diag, 1.0);
    r.verify_output = cfg.verify_output;
    r.max_lp_iterations = cfg.max_lp_iterations;
    return r;
}

inline PushConstraintSet build_constraints(const Mesh& mesh, const Vec3& direction,
                                           const PushConfig& cfg = {}) {
    validate(mesh);
    ResolvedPushConfig rc = resolve_push_config(cfg, mesh);
    ProjectionFrame frame = orthonormal_basis(direction);
    ProjectedMesh proj = project_mesh(mesh, frame);

    PushConstraintSet set;
    set.epsilon = rc.epsilon;

    auto tri2d = [&](int f) -> std::array<Vec2, 3> {
        const auto& fc = mesh.faces[f];
        return {proj.coords2d[fc[0]], proj.coords2d[fc[1]], proj.coords2d[fc[2]]};
    };

    for (const auto& [fa, fb] : broad_phase_pairs(proj, mesh)) {
        std::array<Vec2, 3> ta = tri2d(fa), tb = tri2d(fb);
        if (std::abs(triangle_area(ta)) < rc.area_tol ||
            std::abs(triangle_area(tb)) < rc.area_tol) {
            ++set.skipped_degenerate;
            continue;
        }
        // The clip keeps every overlap with three or more distinct corners
        // regardless of its area: ordering the pair at all corners of even a
        // sliver overlap is exactly what rules out a crossing through it.
        // area_tol only guards the barycentric transfer below, which needs
        // nondegenerate faces, not a fat overlap.
        ConvexPolygon2D poly = clip_triangles(ta, tb, 0.0);
        if (poly.empty()) continue;
        ++set.pair_count;

        // Corner depths on each face via barycentric transfer: projection
        // along u is affine, so 2D weights reproduce the 3D corner.
        const int nc = static_cast<int>(poly.corners.size());
        std::vector<std::array<double, 3>> wa(nc), wb(nc);
        std::vector<double> za(nc), zb(nc);
        for (int j = 0; j < nc; ++j) {
            wa[j] = barycentric(poly.corners[j], ta, rc.area_tol).b;
            wb[j] = barycentric(poly.corners[j], tb, rc.area_tol).b;
            za[j] = zb[j] = 0.0;
            for (int k = 0; k < 3; ++k) {
                za[j] += wa[j][k] * proj.depth[mesh.faces[fa][k]];
                zb[j] += wb[j][k] * proj.depth[mesh.faces[fb][k]];
            }
        }

        // Strict ordering across the whole polygon; the two affine depth
        // functions must not cross it when the input is intersection-free.
        double extreme = 0.0;
        for (int j = 0; j < nc; ++j) {
            double g = zb[j] - za[j];
            if (std::abs(g) > std::abs(extreme)) extreme = g;
        }
        if (std::abs(extreme) <= rc.ordering_tol) {
            throw OrderingViolated("faces " + std::to_string(fa) + " and " +
                                   std::to_string(fb) +
                                   " overlap with no depth separation");
        }
        bool b_above = extreme > 0.0;
        for (int j = 0; j < nc; ++j) {
            double g = zb[j] - za[j];
            if ((b_above ? g : -g) < -rc.ordering_tol) {
                throw OrderingViolated("faces " + std::to_string(fa) + " and " +
                                       std::to_string(fb) +
                                       " have mixed depth ordering over their overlap");
            }
        }

        int lower = b_above ? fa : fb;
        int upper = b_above ? fb : fa;
        const auto& wl = b_above ? wa : wb;
        const auto& wu = b_above ? wb : wa;
        const auto& zl = b_above ? za : zb;
        const auto& zu = b_above ? zb : za;
        for (int j = 0; j < nc; ++j) {
            PushRow row;
            row.face_lower = lower;
            row.face_upper = upper;
            row.corner = j;
            row.coeffs.reserve(6);
            for (int k = 0; k < 3; ++k) {
                row.coeffs.emplace_back(mesh.faces[lower][k], -wl[j][k]);
            }
            for (int k = 0; k < 3; ++k) {
                row.coeffs.emplace_back(mesh.faces[upper][k], wu[j][k]);
            }
            row.rhs = (zl[j] - zu[j]) + rc.epsilon;
            set.rows.push_back(std::move(row));
        }
    }

    std::sort(set.rows.begin(), set.rows.end(), [](const PushRow& a, const PushRow& b) {
        if (a.face_lower != b.face_lower) return a.face_lower < b.face_lower;
        if (a.face_upper != b.face_upper) return a.face_upper < b.face_upper;
        return a.corner < b.corner;
    });
    return set;
}

inline LinearProgram push_lp(const PushConstraintSet& set, const Mesh& mesh,
                             const std::vector<double>& d_min) {
    LinearProgram lp;
    lp.n = mesh.num_vertices();
    lp.objective.assign(lp.n, 1.0);
    lp.lower_bounds = d_min;
    lp.ineqs.reserve(set.rows.size());
    for (const auto& row : set.rows) {
        lp.ineqs.push_back({row.coeffs, row.rhs});
    }
    return lp;
}

struct StepResult {
    Mesh mesh_out;
    std::vector<double> d;
    PushConstraintSet constraints;
    LpSolution lp_solution;
    // Retained for the reverse pass.
    ProjectionFrame frame;
    LinearProgram lp;
};

inline StepResult push_step(const Mesh& mesh, const DeformStep& step,
                            const PushConfig& cfg = {}) {
    if (static_cast<int>(step.d_min.size()) != mesh.num_vertices()) {
        throw Error("d_min size " + std::to_string(step.d_min.size()) +
                    " does not match vertex count " +
                    std::to_string(mesh.num_vertices()));
    }
    for (double v : step.d_min) {
        if (!(v >= 0.0)) throw Error("d_min must be non-negative and finite");
    }

    ResolvedPushConfig rc = resolve_push_config(cfg, mesh);
    StepResult result;
    result.frame = orthonormal_basis(step.direction);
    result.constraints = build_constraints(mesh, step.direction, cfg);
    result.lp = push_lp(result.constraints, mesh, step.d_min);

    SolverOptions opts;
    opts.max_iterations = rc.max_lp_iterations;
    result.lp_solution = solve_lp(result.lp, opts);
    if (result.lp_solution.status == LpStatus::Infeasible) {
        throw PushInfeasible("pushing LP infeasible with " +
                             std::to_string(result.constraints.rows.size()) +
                             " constraint rows");
    }
    if (result.lp_solution.status != LpStatus::Optimal) {
        throw Error(std::string("pushing LP terminated with status ") +
                    to_string(result.lp_solution.status));
    }

    result.d = result.lp_solution.d;
    result.mesh_out = mesh;
    for (int v = 0; v < mesh.num_vertices(); ++v) {
        result.mesh_out.vertices[v] = mesh.vertices[v] + result.frame.u_hat * result.d[v];
    }

    // Post-move ordering check straight from the output geometry: the gap at
    // every constrained corner must still be at least epsilon (minus slack).
    for (const auto& row : result.constraints.rows) {
        double gap = rc.epsilon - row.rhs;  // pre-move (q_upper - q_lower).u
        for (const auto& [v, a] : row.coeffs) gap += a * result.d[v];
        if (gap < rc.epsilon - 1e-7) {
            throw VerificationFailed("post-move gap " + std::to_string(gap) +
                                     " below epsilon at faces " +
                                     std::to_string(row.face_lower) + "/" +
                                     std::to_string(row.face_upper));
        }
    }
    if (rc.verify_output) {
        IntersectionReport rep = count_intersecting_faces(result.mesh_out);
        if (rep.intersecting_count != 0) {
            throw VerificationFailed("pushed mesh has " +
                                     std::to_string(rep.intersecting_count) +
                                     " intersecting faces");
        }
    }
    return result;
}

struct PushGradients {
    std::vector<double> grad_d_min;
    std::vector<Vec3> grad_vertices_in;
    // Product-term gradient on u only (mesh_out = mesh_in + d.u); the LP's
    // dependence on u is not differentiated.
    Vec3 grad_u_hat{0.0, 0.0, 0.0};
};

// Reverse pass for one step. upstream_vertices is the loss gradient with
// respect to mesh_out's vertices; upstream_d optionally adds a direct
// gradient on the pushed distances. beta, the overlap topology, and the LP
// active set are all treated as locally constant, so gradients flow through
// mesh_out = mesh_in + d.u, the active LP system, and rhs back to the input
// depths. u itself receives no gradient.
inline PushGradients push_step_backward(const StepResult& step,
                                        const std::vector<Vec3>& upstream_vertices,
                                        const std::vector<double>& upstream_d = {}) {
    const int n = step.lp.n;
    if (static_cast<int>(upstream_vertices.size()) != n) {
        throw Error("upstream vertex gradient size mismatch");
    }
    if (!upstream_d.empty() && static_cast<int>(upstream_d.size()) != n) {
        throw Error("upstream d gradient size mismatch");
    }

    std::vector<double> grad_d(n);
    for (int v = 0; v < n; ++v) {
        grad_d[v] = dot(upstream_vertices[v], step.frame.u_hat);
        if (!upstream_d.empty()) grad_d[v] += upstream_d[v];
    }

    LpGradients lg = lp_backward(step.lp, step.lp_solution, grad_d);

    PushGradients out;
    out.grad_d_min = std::move(lg.grad_lower);
    out.grad_vertices_in = upstream_vertices;

    // rhs = (q_lower - q_upper).u + eps, linear in vertex depths with
    // coefficient -a_v; depth = vertex.u with u fixed.
    std::vector<double> grad_depth(n, 0.0);
    for (size_t r = 0; r < step.constraints.rows.size(); ++r) {
        double gr = lg.grad_rhs[r];
        if (gr == 0.0) continue;
        for (const auto& [v, a] : step.constraints.rows[r].coeffs) {
            grad_depth[v] -= gr * a;
        }
    }
    for (int v = 0; v < n; ++v) {
        if (grad_depth[v] != 0.0) {
            out.grad_vertices_in[v] += step.frame.u_hat * grad_depth[v];
        }
        out.grad_u_hat += upstream_vertices[v] * step.d[v];
    }
    return out;
}

struct DeformResult {
    Mesh mesh;
    std::vector<StepResult> tape;
};

namespace detail {
// TEMP DEBUG: dump a failing deform call for offline replay.
inline void dump_deform_debug(const Mesh& base, const std::vector<DeformStep>& steps,
                              size_t failing, const char* why) {
    const char* path = std::getenv("MESHPUSH_DEFORM_DUMP");
    if (!path) return;
    std::FILE* f = std::fopen(path, "w");
    if (!f) return;
    std::fprintf(f, "{\"why\":\"%s\",\"failing_step\":%zu,\"vertices\":[", why, failing);
    for (size_t v = 0; v < base.vertices.size(); ++v) {
        const Vec3& p = base.vertices[v];
        std::fprintf(f, "%s[%.17g,%.17g,%.17g]", v ? "," : "", p.x, p.y, p.z);
    }
    std::fprintf(f, "],\"faces\":[");
    for (size_t i = 0; i < base.faces.size(); ++i) {
        std::fprintf(f, "%s[%d,%d,%d]", i ? "," : "", base.faces[i][0], base.faces[i][1],
                     base.faces[i][2]);
    }
    std::fprintf(f, "],\"steps\":[");
    for (size_t s = 0; s < steps.size(); ++s) {
        std::fprintf(f, "%s{\"direction\":[%.17g,%.17g,%.17g],\"d_min\":[", s ? "," : "",
                     steps[s].direction.x, steps[s].direction.y, steps[s].direction.z);
        for (size_t v = 0; v < steps[s].d_min.size(); ++v) {
            std::fprintf(f, "%s%.17g", v ? "," : "", steps[s].d_min[v]);
        }
        std::fprintf(f, "]}");
    }
    std::fprintf(f, "]}\n");
    std::fclose(f);
}
}  // namespace detail

inline DeformResult deform(const Mesh& mesh, const std::vector<DeformStep>& steps,
                           const PushConfig& cfg = {}) {
    DeformResult result;
    result.mesh = mesh;
    result.tape.reserve(steps.size());
    for (size_t s = 0; s < steps.size(); ++s) {
        try {
            result.tape.push_back(push_step(result.mesh, steps[s], cfg));
        } catch (const PushInfeasible& e) {
            detail::dump_deform_debug(mesh, steps, s, e.what());
            throw PushInfeasible("step " + std::to_string(s) + ": " + e.what());
        } catch (const OrderingViolated& e) {
            detail::dump_deform_debug(mesh, steps, s, e.what());
            throw OrderingViolated("step " + std::to_string(s) + ": " + e.what());
        } catch (const VerificationFailed& e) {
            detail::dump_deform_debug(mesh, steps, s, e.what());
            throw VerificationFailed("step " + std::to_string(s) + ": " + e.what());
        }
        result.mesh = result.tape.back().mesh_out;
    }
    return result;
}

struct DeformGradients {
    std::vector<std::vector<double>> grad_d_min;  // per step
    std::vector<Vec3> grad_u_hat;                 // per step, product term only
    std::vector<Vec3> grad_vertices_initial;
};

// Full reverse sweep over a deform tape.
inline DeformGradients deform_backward(const std::vector<StepResult>& tape,
                                       const std::vector<Vec3>& grad_final_vertices) {
    DeformGradients out;
    out.grad_d_min.resize(tape.size());
    out.grad_u_hat.resize(tape.size());
    std::vector<Vec3> upstream = grad_final_vertices;
    for (size_t s = tape.size(); s-- > 0;) {
        PushGradients pg = push_step_backward(tape[s], upstream);
        out.grad_d_min[s] = std::move(pg.grad_d_min);
        out.grad_u_hat[s] = pg.grad_u_hat;
        upstream = std::move(pg.grad_vertices_in);
    }
    out.grad_vertices_initial = std::move(upstream);
    return out;
}

}  // namespace meshpush
