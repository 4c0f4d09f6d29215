// lp.hpp — dense LP solver over variables with lower bounds and sparse
// >= rows. Solves min c.d subject to d >= lower_bounds and a_i.d >= rhs_i
// by an active-set simplex (a vertex is n active constraints) with Bland's
// rule, plus a brute-force vertex-enumeration oracle and the backward pass
// through the active constraint system.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>
#include <vector>


#include "meshpush/core.hpp"

namespace meshpush {

struct SparseRow {
    // (variable index, coefficient) pairs; indices unique within a row.
    std::vector<std::pair<int, double>> coeffs;
    double rhs = 0.0;
};

struct LinearProgram {
    int n = 0;
    std::vector<double> objective;
    std::vector<double> lower_bounds;
    std::vector<SparseRow> ineqs;

    void validate() const {
        if (n <= 0) throw Error("linear program needs at least one variable");
        if (static_cast<int>(objective.size()) != n ||
            static_cast<int>(lower_bounds.size()) != n) {
            throw Error("objective/lower_bounds size does not match n");
        }
        for (double v : objective) {
            if (!std::isfinite(v)) throw Error("non-finite objective coefficient");
        }
        for (double v : lower_bounds) {
            if (!std::isfinite(v)) throw Error("non-finite lower bound");
        }
        for (size_t r = 0; r < ineqs.size(); ++r) {
            std::vector<int> idx;
            for (const auto& [j, a] : ineqs[r].coeffs) {
                if (j < 0 || j >= n) {
                    throw IndexOutOfRange("row " + std::to_string(r) +
                                          " references variable " + std::to_string(j));
                }
                if (!std::isfinite(a)) throw Error("non-finite row coefficient");
                idx.push_back(j);
            }
            std::sort(idx.begin(), idx.end());
            if (std::adjacent_find(idx.begin(), idx.end()) != idx.end()) {
                throw Error("duplicate variable index in row " + std::to_string(r));
            }
            if (!std::isfinite(ineqs[r].rhs)) throw Error("non-finite rhs");
        }
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

inline const char* to_string(LpStatus s) {
    switch (s) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::IterationLimit: return "iteration_limit";
    }
    return "unknown";
}

// Identifies one constraint: a variable lower bound or an inequality row.
struct ConstraintId {
    enum Kind { Bound, Row } kind = Bound;
    int index = 0;

    bool operator==(const ConstraintId& o) const {
        return kind == o.kind && index == o.index;
    }
    bool operator<(const ConstraintId& o) const {
        if (kind != o.kind) return kind < o.kind;
        return index < o.index;
    }
    std::string str() const {
        return (kind == Bound ? "bound:" : "row:") + std::to_string(index);
    }
};

struct LpSolution {
    std::vector<double> d;
    LpStatus status = LpStatus::Infeasible;
    std::vector<ConstraintId> active_set;  // sorted, size n iff Optimal
    double objective_value = 0.0;
    int iterations = 0;
};

// Residual threshold below which a constraint counts as active.
inline double constraint_activity_tol(double rhs) {
    return 1e-7 * std::max(1.0, std::abs(rhs));
}

struct SolverOptions {
    double feas_tol = 1e-9;
    double mult_tol = 1e-9;
    int refactor_every = 64;
    int max_iterations = 0;  // <= 0 selects 50 * (n + #ineqs)
};

namespace detail {

// Dense LU with partial pivoting. Throws SingularActiveSet when a pivot
// falls below 1e-12 relative to the largest matrix entry.
struct DenseLu {
    int n = 0;
    std::vector<double> a;    // row-major, overwritten with L\U
    std::vector<int> perm;    // row permutation: PA = LU

    void factor(int size, std::vector<double> matrix) {
        n = size;
        a = std::move(matrix);
        perm.resize(n);
        double scale = 0.0;
        for (double v : a) scale = std::max(scale, std::abs(v));
        double pivot_tol = 1e-12 * std::max(scale, 1e-300);

        std::vector<int> row(n);
        for (int i = 0; i < n; ++i) row[i] = i;
        for (int k = 0; k < n; ++k) {
            int best = k;
            double best_abs = std::abs(a[static_cast<size_t>(k) * n + k]);
            for (int i = k + 1; i < n; ++i) {
                double v = std::abs(a[static_cast<size_t>(i) * n + k]);
                if (v > best_abs) {
                    best_abs = v;
                    best = i;
                }
            }
            if (best_abs < pivot_tol) {
                throw SingularActiveSet("pivot " + std::to_string(best_abs) +
                                        " below tolerance at column " + std::to_string(k));
            }
            if (best != k) {
                for (int j = 0; j < n; ++j) {
                    std::swap(a[static_cast<size_t>(k) * n + j],
                              a[static_cast<size_t>(best) * n + j]);
                }
                std::swap(row[k], row[best]);
            }
            double piv = a[static_cast<size_t>(k) * n + k];
            for (int i = k + 1; i < n; ++i) {
                double f = a[static_cast<size_t>(i) * n + k] / piv;
                a[static_cast<size_t>(i) * n + k] = f;
                for (int j = k + 1; j < n; ++j) {
                    a[static_cast<size_t>(i) * n + j] -= f * a[static_cast<size_t>(k) * n + j];
                }
            }
        }
        perm = row;
    }

    // Solves A x = b.
    std::vector<double> solve(const std::vector<double>& b) const {
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i) x[i] = b[perm[i]];
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < i; ++j) x[i] -= a[static_cast<size_t>(i) * n + j] * x[j];
        }
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) x[i] -= a[static_cast<size_t>(i) * n + j] * x[j];
            x[i] /= a[static_cast<size_t>(i) * n + i];
        }
        return x;
    }

    // Solves A^T x = b via U^T z = b, L^T w = z, x = P^T w.
    std::vector<double> solve_transpose(const std::vector<double>& b) const {
        std::vector<double> z(b);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < i; ++j) z[i] -= a[static_cast<size_t>(j) * n + i] * z[j];
            z[i] /= a[static_cast<size_t>(i) * n + i];
        }
        for (int i = n - 1; i >= 0; --i) {
            for (int j = i + 1; j < n; ++j) z[i] -= a[static_cast<size_t>(j) * n + i] * z[j];
        }
        std::vector<double> x(n);
        for (int i = 0; i < n; ++i) x[perm[i]] = z[i];
        return x;
    }
};

// One constraint of the core solver: sparse gradient, rhs, stable id used by
// Bland's rule.
struct CoreCons {
    std::vector<std::pair<int, double>> a;
    double rhs = 0.0;
    int id = 0;
};

struct CoreResult {
    LpStatus status = LpStatus::IterationLimit;
    std::vector<double> d;
    std::vector<int> basis;  // positions into the constraint list, size nv
    int iterations = 0;
};

inline double core_dot(const CoreCons& c, const std::vector<double>& x) {
    double s = 0.0;
    for (const auto& [j, v] : c.a) s += v * x[j];
    return s;
}

// Primal active-set simplex over a vertex described by nv active constraints.
// `basis0` must index nv constraints active at d0 with a nonsingular gradient
// matrix. Bland's rule on constraint ids bounds the iteration count.
class SimplexCore {
  public:
    SimplexCore(int nv, const std::vector<CoreCons>& cons, std::vector<double> c,
                SolverOptions opt)
        : nv_(nv), cons_(cons), c_(std::move(c)), opt_(opt) {
        scale_.resize(cons_.size(), 0.0);
        for (size_t j = 0; j < cons_.size(); ++j) {
            for (const auto& [col, v] : cons_[j].a) {
                scale_[j] = std::max(scale_[j], std::abs(v));
            }
        }
        // Every variable carries a lower-bound row (solve_lp builds the
        // constraint list that way), so a nonnegative objective cannot be
        // unbounded below. An unbounded verdict is then always an artifact
        // of broken arithmetic, never a status.
        bounded_below_ = true;
        for (double ck : c_) {
            if (ck < 0.0) bounded_below_ = false;
        }
    }

    CoreResult run(std::vector<int> basis, std::vector<double> d, int iter_cap) {
        basis_ = std::move(basis);
        d_ = std::move(d);
        in_basis_.assign(cons_.size(), 0);
        for (int pos : basis_) in_basis_[pos] = 1;
        refactor();
        set_d_to_vertex();

        CoreResult res;
        int since_refactor = 0;
        // True while binv_ holds an exact factorization, i.e. no rank-one
        // updates were applied since the last refactor. Guards the retry
        // path below against looping.
        bool fresh = true;
        int iter = 0;
        // Rows whose exchange at the current vertex produced a numerically
        // rank-deficient working set. They stay out of the entering choice
        // until the next applied exchange but still count as blockers, so
        // feasibility and boundedness are unaffected.
        std::vector<char> banned(cons_.size(), 0);
        while (iter < iter_cap) {
            // Multipliers y = B^-T c; optimal when all are nonnegative.
            std::vector<double> y(nv_, 0.0);
            for (int k = 0; k < nv_; ++k) {
                if (c_[k] == 0.0) continue;
                for (int i = 0; i < nv_; ++i) {
                    y[i] += binv_[static_cast<size_t>(k) * nv_ + i] * c_[k];
                }
            }
            // Leave candidates in ascending id order (Bland). The scan below
            // takes the first one that admits a numerically strong exchange,
            // so in the nondegenerate case this is exactly Bland's rule.
            std::vector<std::pair<int, int>> leave_cands;  // (id, position)
            for (int i = 0; i < nv_; ++i) {
                if (y[i] < -opt_.mult_tol) {
                    leave_cands.emplace_back(cons_[basis_[i]].id, i);
                }
            }
            if (leave_cands.empty()) {
                res.status = LpStatus::Optimal;
                res.iterations = iter;
                break;
            }
            std::sort(leave_cands.begin(), leave_cands.end());

            // A blocking row is weak when it is nearly orthogonal to the
            // motion: exchanging it in divides the inverse by that slope, so
            // a weak pivot is what degrades the basis. Prefer any leave
            // candidate with a strong blocker; fall back to the best weak
            // pivot across all candidates only when no strong one exists.
            const double weak_rel = 1e-7;
            int leave_pos = -1, enter = -1;
            double step_t = 0.0, chosen_rel = 0.0;
            bool retry = false, chosen_strong = false;
            int weak_leave = -1, weak_enter = -1;
            double weak_t = 0.0, weak_rel_slope = 0.0;
            std::vector<double> s(nv_);

            for (const auto& [lid, pos] : leave_cands) {
                double dir_scale = 0.0;
                for (int k = 0; k < nv_; ++k) {
                    s[k] = binv_[static_cast<size_t>(k) * nv_ + pos];
                    dir_scale = std::max(dir_scale, std::abs(s[k]));
                }
                // Exact arithmetic gives B s = e_pos; drift in the rank-one
                // updates shows up here first. The bound is relative to the
                // direction magnitude: a backward-stable solve of an ill
                // conditioned working set legitimately carries residual of
                // order eps * |s|, while a stale inverse misses by a factor
                // of the drift itself.
                double canary = 0.0;
                for (int i = 0; i < nv_; ++i) {
                    double ri = core_dot(cons_[basis_[i]], s) - (i == pos ? 1.0 : 0.0);
                    canary = std::max(canary, std::abs(ri));
                }
                if (canary > 1e-10 * std::max(1.0, dir_scale)) {
                    if (fresh) {
                        throw SingularActiveSet("working set inverse is inconsistent");
                    }
                    retry = true;
                    break;
                }

                // Ratio test over non-working constraints whose residual
                // shrinks. A row counts as blocking when its slope is
                // negative beyond sign noise; rows whose relative slope is
                // below the usable cutoff still rule out an unbounded
                // verdict but cannot bound the step or enter, since their
                // step would be garbage. Banned rows bound the step but are
                // excluded from the entering choice.
                const double noise_rel = 1e-14, usable_rel = 1e-11;
                double best_t = std::numeric_limits<double>::infinity();
                bool have_t = false, any_negative = false;
                std::vector<std::pair<int, double>> blocking;  // (index, slope)
                for (size_t j = 0; j < cons_.size(); ++j) {
                    if (in_basis_[j]) continue;
                    double slope = core_dot(cons_[j], s);
                    if (slope >= -noise_rel * scale_[j] * dir_scale) continue;
                    any_negative = true;
                    if (slope >= -usable_rel * scale_[j] * dir_scale) continue;
                    double resid =
                        std::max(0.0, core_dot(cons_[j], d_) - cons_[j].rhs);
                    double t = resid / (-slope);
                    blocking.emplace_back(static_cast<int>(j), slope);
                    if (!have_t || t < best_t) {
                        best_t = t;
                        have_t = true;
                    }
                }
                if (!any_negative) {
                    // The objective decreases along s and nothing blocks.
                    // That verdict deserves no trust from a drifted inverse,
                    // and contradicts a provably bounded objective outright.
                    if (!fresh || bounded_below_) {
                        if (fresh) {
                            throw SingularActiveSet(
                                "descent direction lost below working precision");
                        }
                        retry = true;
                        break;
                    }
                    res.status = LpStatus::Unbounded;
                    res.iterations = iter;
                    break;
                }
                if (!have_t) continue;  // only noise-level blockers
                // Within the tie window, pivot quality is capped by the best
                // available relative slope; accepting ones far below it is
                // what lets the basis conditioning decay step over step.
                double tie = 1e-10 * (1.0 + best_t);
                double best_rel = 0.0;
                for (const auto& [j, slope] : blocking) {
                    if (banned[j]) continue;
                    double resid =
                        std::max(0.0, core_dot(cons_[j], d_) - cons_[j].rhs);
                    double t = resid / (-slope);
                    if (t > best_t + tie) continue;
                    best_rel = std::max(best_rel, -slope / (scale_[j] * dir_scale));
                }
                double strong_cut = std::max(weak_rel, 1e-3 * best_rel);
                int strong_enter = -1, strong_id = std::numeric_limits<int>::max();
                double strong_rel = 0.0;
                for (const auto& [j, slope] : blocking) {
                    if (banned[j]) continue;
                    double resid =
                        std::max(0.0, core_dot(cons_[j], d_) - cons_[j].rhs);
                    double t = resid / (-slope);
                    if (t > best_t + tie) continue;
                    double rel = -slope / (scale_[j] * dir_scale);
                    if (rel >= strong_cut) {
                        if (cons_[j].id < strong_id) {
                            strong_id = cons_[j].id;
                            strong_enter = j;
                            strong_rel = rel;
                        }
                    } else if (rel > weak_rel_slope) {
                        weak_rel_slope = rel;
                        weak_leave = pos;
                        weak_enter = j;
                        weak_t = best_t;
                    }
                }
                if (strong_enter >= 0) {
                    leave_pos = pos;
                    enter = strong_enter;
                    step_t = best_t;
                    chosen_rel = strong_rel;
                    chosen_strong = true;
                    break;
                }
            }
            if (res.status == LpStatus::Unbounded) break;
            if (retry) {
                refactor();
                since_refactor = 0;
                fresh = true;
                continue;
            }
            if (!chosen_strong) {
                if (weak_enter < 0) {
                    // Every candidate direction is blocked only by rows the
                    // slope cutoff discards or by banned rows. With a drifted
                    // inverse that can be stale arithmetic, otherwise the
                    // geometry is beyond the solver's precision.
                    if (fresh) {
                        throw SingularActiveSet("no usable basis exchange");
                    }
                    refactor();
                    since_refactor = 0;
                    fresh = true;
                    continue;
                }
                leave_pos = weak_leave;
                enter = weak_enter;
                step_t = weak_t;
                chosen_rel = weak_rel_slope;
                // The direction for the weak fallback was overwritten by
                // later candidates; rebuild it.
                for (int k = 0; k < nv_; ++k) {
                    s[k] = binv_[static_cast<size_t>(k) * nv_ + leave_pos];
                }
            }

            int old_row = basis_[leave_pos];
            if (!replace_row(leave_pos, enter)) {
                // The exchange denominator vanished under recomputation. On
                // a drifted inverse that is likely stale arithmetic; on a
                // fresh one rule the row out and rescan.
                if (fresh) {
                    banned[enter] = 1;
                } else {
                    refactor();
                    since_refactor = 0;
                    fresh = true;
                }
                continue;
            }
            // A small pivot can still leave the new working set numerically
            // rank-deficient. Verify it by refactoring while the exchange is
            // easy to undo; on failure put the old row back, rule the new
            // one out and rescan.
            bool low_rel = chosen_rel < 1e-4;
            if (low_rel || ++since_refactor >= opt_.refactor_every) {
                try {
                    refactor();
                } catch (const SingularActiveSet&) {
                    in_basis_[enter] = 0;
                    in_basis_[old_row] = 1;
                    basis_[leave_pos] = old_row;
                    refactor();
                    since_refactor = 0;
                    fresh = true;
                    banned[enter] = 1;
                    continue;
                }
                since_refactor = 0;
                fresh = true;
            } else {
                fresh = false;
            }
            banned.assign(cons_.size(), 0);
            for (int k = 0; k < nv_; ++k) d_[k] += step_t * s[k];
            ++iter;
            res.iterations = iter;
        }

        if (res.status == LpStatus::Optimal) {
            // Land exactly on the vertex the final basis defines.
            refactor();
            set_d_to_vertex();
        }
        res.d = d_;
        res.basis = basis_;
        return res;
    }

    // d = B^-1 rhs_W, the vertex of the current working set.
    void set_d_to_vertex() {
        std::vector<double> rhs(nv_);
        for (int i = 0; i < nv_; ++i) rhs[i] = cons_[basis_[i]].rhs;
        d_.assign(nv_, 0.0);
        for (int k = 0; k < nv_; ++k) {
            for (int i = 0; i < nv_; ++i) {
                d_[k] += binv_[static_cast<size_t>(k) * nv_ + i] * rhs[i];
            }
        }
    }

    // Exchanges working row `pos` for constraint `j`, rank-one update of the
    // stored inverse. Returns false without mutating anything when the
    // exchange denominator a_new.u is too small relative to its factors for
    // the update to be trustworthy.
    bool replace_row(int pos, int j) {
        std::vector<double> u(nv_);
        double u_scale = 0.0;
        for (int k = 0; k < nv_; ++k) {
            u[k] = binv_[static_cast<size_t>(k) * nv_ + pos];
            u_scale = std::max(u_scale, std::abs(u[k]));
        }
        double denom = 0.0;
        for (const auto& [col, v] : cons_[j].a) denom += v * u[col];
        if (std::abs(denom) < 1e-11 * scale_[j] * u_scale) {
            return false;
        }
        std::vector<double> w(nv_, 0.0);
        for (const auto& [col, v] : cons_[j].a) {
            for (int i = 0; i < nv_; ++i) {
                w[i] += v * binv_[static_cast<size_t>(col) * nv_ + i];
            }
        }
        for (int k = 0; k < nv_; ++k) {
            double uk = u[k] / denom;
            if (uk == 0.0) continue;
            for (int i = 0; i < nv_; ++i) {
                double delta = w[i] - (i == pos ? 1.0 : 0.0);
                binv_[static_cast<size_t>(k) * nv_ + i] -= uk * delta;
            }
        }
        in_basis_[basis_[pos]] = 0;
        in_basis_[j] = 1;
        basis_[pos] = j;
        return true;
    }

    // Rebuilds B^-1 from the working set by LU, discarding rank-one drift.
    void refactor() {
        std::vector<double> b(static_cast<size_t>(nv_) * nv_, 0.0);
        for (int i = 0; i < nv_; ++i) {
            for (const auto& [col, v] : cons_[basis_[i]].a) {
                b[static_cast<size_t>(i) * nv_ + col] = v;
            }
        }
        DenseLu lu;
        lu.factor(nv_, std::move(b));
        binv_.assign(static_cast<size_t>(nv_) * nv_, 0.0);
        std::vector<double> e(nv_, 0.0);
        for (int i = 0; i < nv_; ++i) {
            e[i] = 1.0;
            std::vector<double> col = lu.solve(e);
            e[i] = 0.0;
            for (int k = 0; k < nv_; ++k) binv_[static_cast<size_t>(k) * nv_ + i] = col[k];
        }
    }

    const std::vector<double>& binv() const { return binv_; }

  private:
    int nv_;
    const std::vector<CoreCons>& cons_;
    std::vector<double> c_;
    SolverOptions opt_;
    bool bounded_below_ = false;
    std::vector<double> scale_;  // max |coefficient| per constraint
    std::vector<int> basis_;
    std::vector<char> in_basis_;
    std::vector<double> d_;
    std::vector<double> binv_;  // row-major B^-1
};

}  // namespace detail

namespace detail {
// TEMP DEBUG: dump a failing LP to the path in MESHPUSH_LP_DUMP.
inline void dump_lp_debug(const LinearProgram& lp, const char* why) {
    const char* path = std::getenv("MESHPUSH_LP_DUMP");
    if (!path) return;
    std::FILE* f = std::fopen(path, "w");
    if (!f) return;
    std::fprintf(f, "{\"why\":\"%s\",\"n\":%d,\"objective\":[", why, lp.n);
    for (int v = 0; v < lp.n; ++v)
        std::fprintf(f, "%s%.17g", v ? "," : "", lp.objective[v]);
    std::fprintf(f, "],\"lower_bounds\":[");
    for (int v = 0; v < lp.n; ++v)
        std::fprintf(f, "%s%.17g", v ? "," : "", lp.lower_bounds[v]);
    std::fprintf(f, "],\"rows\":[");
    for (size_t i = 0; i < lp.ineqs.size(); ++i) {
        std::fprintf(f, "%s{\"rhs\":%.17g,\"coeffs\":[", i ? "," : "", lp.ineqs[i].rhs);
        for (size_t k = 0; k < lp.ineqs[i].coeffs.size(); ++k) {
            std::fprintf(f, "%s[%d,%.17g]", k ? "," : "", lp.ineqs[i].coeffs[k].first,
                         lp.ineqs[i].coeffs[k].second);
        }
        std::fprintf(f, "]}");
    }
    std::fprintf(f, "]}\n");
    std::fclose(f);
}
}  // namespace detail

inline LpSolution solve_lp_inner(const LinearProgram& lp, const SolverOptions& opt);

inline LpSolution solve_lp(const LinearProgram& lp, const SolverOptions& opt = {}) {
    try {
        return solve_lp_inner(lp, opt);
    } catch (const SingularActiveSet& e) {
        detail::dump_lp_debug(lp, e.what());
        throw;
    }
}

inline LpSolution solve_lp_inner(const LinearProgram& lp, const SolverOptions& opt) {
    lp.validate();
    const int n = lp.n;
    const int m = static_cast<int>(lp.ineqs.size());
    int iter_cap = opt.max_iterations > 0 ? opt.max_iterations : 50 * (n + m);

    LpSolution sol;
    sol.d = lp.lower_bounds;

    // Residuals at the all-bounds vertex decide whether a feasibility phase
    // is needed at all.
    std::vector<double> violation(m, 0.0);
    bool feasible_at_bounds = true;
    for (int i = 0; i < m; ++i) {
        double r = -lp.ineqs[i].rhs;
        for (const auto& [j, a] : lp.ineqs[i].coeffs) r += a * lp.lower_bounds[j];
        violation[i] = std::max(0.0, -r);
        if (violation[i] > 0.0) feasible_at_bounds = false;
    }

    // Phase-2 constraint list: bounds get ids 0..n-1, rows n..n+m-1.
    std::vector<detail::CoreCons> cons;
    cons.reserve(n + m);
    for (int v = 0; v < n; ++v) {
        cons.push_back({{{v, 1.0}}, lp.lower_bounds[v], v});
    }
    for (int i = 0; i < m; ++i) {
        cons.push_back({lp.ineqs[i].coeffs, lp.ineqs[i].rhs, n + i});
    }

    std::vector<int> basis;
    std::vector<double> d = lp.lower_bounds;
    int phase1_iters = 0;

    if (feasible_at_bounds) {
        basis.resize(n);
        for (int v = 0; v < n; ++v) basis[v] = v;
    } else {
        // Phase 1 over (d, t): min t subject to the bounds, augmented rows
        // a_i.d + v_i t >= rhs_i with v_i the violation at the bound vertex,
        // t >= 0 and -t >= -1. (d, t) = (l, 1) is a vertex of this system.
        const int nv = n + 1;
        std::vector<detail::CoreCons> aug;
        aug.reserve(nv + m + 1);
        for (int v = 0; v < n; ++v) aug.push_back({{{v, 1.0}}, lp.lower_bounds[v], v});
        for (int i = 0; i < m; ++i) {
            detail::CoreCons c{lp.ineqs[i].coeffs, lp.ineqs[i].rhs, n + i};
            if (violation[i] > 0.0) c.a.emplace_back(n, violation[i]);
            aug.push_back(std::move(c));
        }
        const int t_lower_id = n + m;
        const int t_upper_id = n + m + 1;
        aug.push_back({{{n, 1.0}}, 0.0, t_lower_id});
        aug.push_back({{{n, -1.0}}, -1.0, t_upper_id});
        const int t_lower_pos = n + m;      // aug index of t >= 0
        const int t_upper_pos = n + m + 1;  // aug index of -t >= -1

        std::vector<double> c1(nv, 0.0);
        c1[n] = 1.0;
        std::vector<int> basis1(nv);
        for (int v = 0; v < n; ++v) basis1[v] = v;
        basis1[n] = t_upper_pos;  // start at (d, t) = (l, 1)
        std::vector<double> d1 = lp.lower_bounds;
        d1.push_back(1.0);

        detail::SimplexCore core1(nv, aug, c1, opt);
        detail::CoreResult r1 = core1.run(basis1, d1, iter_cap);
        phase1_iters = r1.iterations;
        if (r1.status == LpStatus::IterationLimit) {
            sol.status = LpStatus::IterationLimit;
            sol.iterations = r1.iterations;
            return sol;
        }
        if (r1.status != LpStatus::Optimal || r1.d[n] > 1e-8) {
            // Certify before reporting. The phase-1 multipliers y >= 0 on the
            // final working set combine its rows into the t gradient, so their
            // d-components cancel: sum y_i a_i = 0 with sum y_i rhs_i = t > 0
            // refutes every feasible d outright. Checking that combination
            // directly makes the verdict independent of how the simplex got
            // here; a certificate that does not verify is a numerical failure,
            // not an infeasible problem.
            core1.refactor();
            const auto& binv = core1.binv();
            std::vector<double> comb(n, 0.0);
            double ymax = 0.0, neg = 0.0, weight = 0.0, gap = 0.0;
            for (int i = 0; i < nv; ++i) {
                double yi = binv[static_cast<size_t>(n) * nv + i];
                ymax = std::max(ymax, yi);
                neg = std::max(neg, -yi);
                if (yi <= 0.0) continue;
                const auto& row = aug[r1.basis[i]];
                double row_scale = 0.0;
                for (const auto& [col, v] : row.a) {
                    if (col < n) comb[col] += yi * v;
                    row_scale = std::max(row_scale, std::abs(v));
                }
                gap += yi * row.rhs;
                weight += yi * row_scale;
            }
            double resid = 0.0;
            for (double v : comb) resid = std::max(resid, std::abs(v));
            if (neg > 1e-9 * std::max(1.0, ymax) ||
                resid > 1e-9 * std::max(1.0, weight) || gap < 0.5e-8) {
                throw SingularActiveSet("infeasibility certificate failed to verify");
            }
            sol.status = LpStatus::Infeasible;
            sol.iterations = r1.iterations;
            return sol;
        }

        // Extract a d-space basis: ensure t >= 0 occupies one slot, the
        // other n rows then carry an invertible d-block.
        auto has_t_bound = [&]() {
            for (int i = 0; i < nv; ++i) {
                if (aug[r1.basis[i]].id == t_lower_id) return i;
            }
            return -1;
        };
        int t_slot = has_t_bound();
        if (t_slot < 0) {
            // Express grad(t >= 0) = e_t in the working rows; any row with a
            // nonzero weight and a t-component can swap out. One exists
            // because the weights on t-free rows contribute nothing to e_t.
            core1.refactor();
            const auto& binv = core1.binv();
            std::vector<double> lam(nv);
            for (int i = 0; i < nv; ++i) {
                lam[i] = binv[static_cast<size_t>(n) * nv + i];
            }
            int swap_pos = -1, swap_id = std::numeric_limits<int>::max();
            for (int i = 0; i < nv; ++i) {
                const auto& row = aug[r1.basis[i]];
                bool touches_t = false;
                for (const auto& [col, v] : row.a) {
                    if (col == n && v != 0.0) touches_t = true;
                }
                if (touches_t && std::abs(lam[i]) > 1e-10 && row.id < swap_id) {
                    swap_id = row.id;
                    swap_pos = i;
                }
            }
            if (swap_pos < 0) {
                throw SingularActiveSet("phase-1 basis lacks an exchangeable t row");
            }
            if (!core1.replace_row(swap_pos, t_lower_pos)) {
                throw SingularActiveSet("phase-1 t exchange is degenerate");
            }
            r1.basis[swap_pos] = t_lower_pos;
            t_slot = swap_pos;
        }

        basis.clear();
        for (int i = 0; i < nv; ++i) {
            if (i == t_slot) continue;
            int id = aug[r1.basis[i]].id;
            // Same ids index the phase-2 list directly: bound v -> v,
            // row i -> n + i.
            basis.push_back(id);
        }
        d.assign(r1.d.begin(), r1.d.begin() + n);
    }

    detail::SimplexCore core(n, cons, lp.objective, opt);
    detail::CoreResult r = core.run(basis, d, std::max(1, iter_cap - phase1_iters));
    sol.iterations = phase1_iters + r.iterations;
    sol.status = r.status;
    if (r.status != LpStatus::Optimal) {
        return sol;
    }

    sol.d = r.d;
    sol.objective_value = 0.0;
    for (int v = 0; v < n; ++v) sol.objective_value += lp.objective[v] * r.d[v];
    sol.active_set.clear();
    for (int pos : r.basis) {
        int id = cons[pos].id;
        if (id < n) {
            sol.active_set.push_back({ConstraintId::Bound, id});
        } else {
            sol.active_set.push_back({ConstraintId::Row, id - n});
        }
    }
    std::sort(sol.active_set.begin(), sol.active_set.end());
    return sol;
}

// Exhaustive oracle: every n-subset of constraints solved as a square system,
// feasible vertices ranked by objective. Unboundedness is detected with box
// walls -d_v >= -M: the problem is unbounded iff some boxed vertex beats
// every wall-free vertex.
inline LpSolution enumerate_vertices_bruteforce(const LinearProgram& lp) {
    lp.validate();
    const int n = lp.n;
    const int m = static_cast<int>(lp.ineqs.size());
    if (n > 8 || n + m > 16) {
        throw TooLarge("brute force limited to n <= 8 and <= 16 constraints, got n=" +
                       std::to_string(n) + " rows=" + std::to_string(m));
    }

    double scale = 1.0;
    for (double v : lp.lower_bounds) scale = std::max(scale, std::abs(v));
    for (const auto& row : lp.ineqs) scale = std::max(scale, std::abs(row.rhs));
    const double box = 1e8 * scale;

    struct Flat {
        std::vector<double> a;
        double rhs;
        bool wall;
        ConstraintId id;
    };
    std::vector<Flat> all;
    for (int v = 0; v < n; ++v) {
        Flat f{std::vector<double>(n, 0.0), lp.lower_bounds[v], false,
               {ConstraintId::Bound, v}};
        f.a[v] = 1.0;
        all.push_back(std::move(f));
    }
    for (int i = 0; i < m; ++i) {
        Flat f{std::vector<double>(n, 0.0), lp.ineqs[i].rhs, false,
               {ConstraintId::Row, i}};
        for (const auto& [j, a] : lp.ineqs[i].coeffs) f.a[j] = a;
        all.push_back(std::move(f));
    }
    for (int v = 0; v < n; ++v) {
        Flat f{std::vector<double>(n, 0.0), -box, true, {ConstraintId::Row, m + v}};
        f.a[v] = -1.0;
        all.push_back(std::move(f));
    }

    const int total = static_cast<int>(all.size());
    std::vector<int> pick(n);
    for (int i = 0; i < n; ++i) pick[i] = i;

    bool have_free = false, have_boxed = false;
    double best_free = 0.0, best_boxed = 0.0;
    std::vector<double> best_free_d;
    std::vector<ConstraintId> best_free_set;

    auto evaluate = [&]() {
        std::vector<double> mat(static_cast<size_t>(n) * n);
        std::vector<double> rhs(n);
        bool any_wall = false;
        for (int i = 0; i < n; ++i) {
            const Flat& f = all[pick[i]];
            any_wall = any_wall || f.wall;
            for (int j = 0; j < n; ++j) mat[static_cast<size_t>(i) * n + j] = f.a[j];
            rhs[i] = f.rhs;
        }
        detail::DenseLu lu;
        std::vector<double> x;
        try {
            lu.factor(n, std::move(mat));
            x = lu.solve(rhs);
        } catch (const SingularActiveSet&) {
            return;
        }
        for (const Flat& f : all) {
            double r = -f.rhs;
            for (int j = 0; j < n; ++j) r += f.a[j] * x[j];
            if (r < -1e-9 * std::max(1.0, std::abs(f.rhs))) return;
        }
        double obj = 0.0;
        for (int j = 0; j < n; ++j) obj += lp.objective[j] * x[j];
        if (!have_boxed || obj < best_boxed) {
            have_boxed = true;
            best_boxed = obj;
        }
        if (!any_wall && (!have_free || obj < best_free - 1e-12)) {
            have_free = true;
            best_free = obj;
            best_free_d = x;
            best_free_set.clear();
            for (int i = 0; i < n; ++i) best_free_set.push_back(all[pick[i]].id);
        }
    };

    while (true) {
        evaluate();
        int k = n - 1;
        while (k >= 0 && pick[k] == total - n + k) --k;
        if (k < 0) break;
        ++pick[k];
        for (int i = k + 1; i < n; ++i) pick[i] = pick[i - 1] + 1;
    }

    LpSolution sol;
    if (!have_boxed) {
        sol.status = LpStatus::Infeasible;
        return sol;
    }
    if (!have_free || best_boxed < best_free - 1e-9 * std::max(1.0, std::abs(best_free))) {
        sol.status = LpStatus::Unbounded;
        return sol;
    }
    sol.status = LpStatus::Optimal;
    sol.d = best_free_d;
    sol.objective_value = best_free;
    sol.active_set = best_free_set;
    std::sort(sol.active_set.begin(), sol.active_set.end());
    return sol;
}

struct LpGradients {
    std::vector<double> grad_lower;                // per variable
    std::vector<double> grad_rhs;                  // per inequality row
    std::vector<std::vector<double>> grad_coeffs;  // mirrors ineqs[i].coeffs
    double condition_estimate = 0.0;
};

namespace detail {

// Hager-style 1-norm estimate of A^-1 from an existing factorization.
inline double inverse_norm1_estimate(const DenseLu& lu) {
    const int n = lu.n;
    std::vector<double> x(n, 1.0 / n);
    double est = 0.0;
    for (int pass = 0; pass < 5; ++pass) {
        std::vector<double> y = lu.solve(x);
        double norm1 = 0.0;
        for (double v : y) norm1 += std::abs(v);
        est = std::max(est, norm1);
        std::vector<double> sign(n);
        for (int i = 0; i < n; ++i) sign[i] = y[i] >= 0.0 ? 1.0 : -1.0;
        std::vector<double> z = lu.solve_transpose(sign);
        int best = 0;
        for (int i = 1; i < n; ++i) {
            if (std::abs(z[i]) > std::abs(z[best])) best = i;
        }
        if (std::abs(z[best]) <= [&] {
                double s = 0.0;
                for (int i = 0; i < n; ++i) s += z[i] * x[i];
                return std::abs(s);
            }()) {
            break;
        }
        x.assign(n, 0.0);
        x[best] = 1.0;
    }
    return est;
}

}  // namespace detail

// Reverse pass through the active square system A d = b. With g = A^-T
// upstream: grad_b = g, grad_A = -g d^T; only active constraints receive
// gradient. Active bound rows route grad_b into lower_bounds; active rows
// into (rhs, coefficients).
inline LpGradients lp_backward(const LinearProgram& lp, const LpSolution& sol,
                               const std::vector<double>& upstream) {
    if (sol.status != LpStatus::Optimal) {
        throw Error("lp_backward requires an optimal solution");
    }
    const int n = lp.n;
    if (static_cast<int>(sol.active_set.size()) != n) {
        throw Error("active set size " + std::to_string(sol.active_set.size()) +
                    " does not match variable count " + std::to_string(n));
    }
    if (static_cast<int>(upstream.size()) != n) {
        throw Error("upstream gradient size mismatch");
    }

    std::vector<double> mat(static_cast<size_t>(n) * n, 0.0);
    double norm1_a = 0.0;
    std::vector<double> col_sums(n, 0.0);
    for (int r = 0; r < n; ++r) {
        const ConstraintId& cid = sol.active_set[r];
        int limit = cid.kind == ConstraintId::Bound ? n : static_cast<int>(lp.ineqs.size());
        if (cid.index < 0 || cid.index >= limit) {
            throw IndexOutOfRange("active set references " + cid.str());
        }
        if (cid.kind == ConstraintId::Bound) {
            mat[static_cast<size_t>(r) * n + cid.index] = 1.0;
            col_sums[cid.index] += 1.0;
        } else {
            const SparseRow& row = lp.ineqs[cid.index];
            for (const auto& [j, a] : row.coeffs) {
                mat[static_cast<size_t>(r) * n + j] = a;
                col_sums[j] += std::abs(a);
            }
        }
    }
    for (double s : col_sums) norm1_a = std::max(norm1_a, s);

    detail::DenseLu lu;
    lu.factor(n, std::move(mat));
    std::vector<double> g = lu.solve_transpose(upstream);

    LpGradients out;
    out.grad_lower.assign(n, 0.0);
    out.grad_rhs.assign(lp.ineqs.size(), 0.0);
    out.grad_coeffs.resize(lp.ineqs.size());
    for (size_t i = 0; i < lp.ineqs.size(); ++i) {
        out.grad_coeffs[i].assign(lp.ineqs[i].coeffs.size(), 0.0);
    }
    for (int r = 0; r < n; ++r) {
        const ConstraintId& cid = sol.active_set[r];
        if (cid.kind == ConstraintId::Bound) {
            out.grad_lower[cid.index] = g[r];
        } else {
            out.grad_rhs[cid.index] = g[r];
            const SparseRow& row = lp.ineqs[cid.index];
            for (size_t k = 0; k < row.coeffs.size(); ++k) {
                out.grad_coeffs[cid.index][k] = -g[r] * sol.d[row.coeffs[k].first];
            }
        }
    }
    out.condition_estimate = norm1_a * detail::inverse_norm1_estimate(lu);
    return out;
}

}  // namespace meshpush
