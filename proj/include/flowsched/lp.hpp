#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "flowsched/errors.hpp"
#include "flowsched/rational.hpp"

namespace flowsched {

enum class Sense { LessEq, GreaterEq };

struct LinearRow {
    std::vector<std::pair<int, Rat>> coeffs;  // sparse (variable, coefficient)
    Sense sense = Sense::LessEq;
    Rat rhs = 0;
};

// Minimization LP over x >= 0 with inequality rows. Variable ids are dense
// 0..num_vars-1; names are optional and only used for debug output.
struct LinearProgram {
    int num_vars = 0;
    std::vector<Rat> objective;  // empty means all-zero
    std::vector<LinearRow> rows;
    std::vector<std::string> var_names;

    void add_row(LinearRow row) { rows.push_back(std::move(row)); }
};

enum class SolveStatus { Optimal, Feasible, Infeasible };

inline int bound_index(const LinearProgram& lp, int var) {
    return static_cast<int>(lp.rows.size()) + var;
}

// A vertex solution: every constraint holds exactly, and tight_set lists a
// linearly independent family (row indices, then num_rows + v for the bound
// x_v = 0) of size num_vars that pins the point down.
struct BasicSolution {
    SolveStatus status = SolveStatus::Infeasible;
    std::vector<Rat> values;
    Rat objective = 0;
    std::vector<int> tight_set;
};

class UnboundedError : public InvariantError {
public:
    explicit UnboundedError(const std::string& what) : InvariantError(what) {}
};

struct SolverHooks {
    bool verify_every_solve = false;
    long solves = 0;
    long infeasible = 0;
    long verified = 0;
};

inline SolverHooks& solver_hooks() {
    static SolverHooks hooks;
    return hooks;
}

namespace detail {

// Row rank of a rational matrix by Gaussian elimination.
inline int rational_rank(std::vector<std::vector<Rat>> mat) {
    int rank = 0;
    const int rows = static_cast<int>(mat.size());
    const int cols = mat.empty() ? 0 : static_cast<int>(mat[0].size());
    for (int c = 0; c < cols && rank < rows; ++c) {
        int pr = -1;
        for (int r = rank; r < rows; ++r)
            if (sgn(mat[r][c]) != 0) { pr = r; break; }
        if (pr < 0) continue;
        std::swap(mat[rank], mat[pr]);
        for (int r = 0; r < rows; ++r) {
            if (r == rank || sgn(mat[r][c]) == 0) continue;
            Rat f = mat[r][c] / mat[rank][c];
            for (int j = c; j < cols; ++j)
                if (sgn(mat[rank][j]) != 0) mat[r][j] -= f * mat[rank][j];
        }
        ++rank;
    }
    return rank;
}

// Dense dictionary simplex over exact rationals. Rows are normalized to <=
// form, the basis starts on the slacks, and an auxiliary column drives the
// feasibility phase. Every pivot choice follows the smallest-index rule, so
// identical inputs give identical vertices and cycling cannot occur.
class DictionarySimplex {
public:
    DictionarySimplex(const LinearProgram& lp, bool use_objective)
        : lp_(lp), use_objective_(use_objective) {
        n_ = lp.num_vars;
        if (!lp.objective.empty() && static_cast<int>(lp.objective.size()) != n_)
            throw ValidationError("objective length does not match variable count");
        for (int r = 0; r < static_cast<int>(lp.rows.size()); ++r) {
            const auto& row = lp.rows[r];
            std::vector<Rat> dense(n_, Rat(0));
            for (const auto& [v, c] : row.coeffs) {
                if (v < 0 || v >= n_)
                    throw ValidationError("row references undeclared variable " +
                                          std::to_string(v));
                dense[v] += c;
            }
            bool any = false;
            for (const auto& c : dense)
                if (sgn(c) != 0) { any = true; break; }
            Rat rhs = row.rhs;
            if (!any) {  // empty row carries no geometry, only a sign check
                bool ok = row.sense == Sense::LessEq ? sgn(rhs) >= 0 : sgn(rhs) <= 0;
                if (!ok) trivially_infeasible_ = true;
                continue;
            }
            if (row.sense == Sense::GreaterEq) {
                for (auto& c : dense) c = -c;
                rhs = -rhs;
            }
            rows_dense_.push_back(std::move(dense));
            rhs_.push_back(std::move(rhs));
            row_origin_.push_back(r);
        }
        m_ = static_cast<int>(rows_dense_.size());
    }

    BasicSolution solve() {
        BasicSolution out;
        if (trivially_infeasible_) return out;
        if (n_ == 0) {
            out.status = use_objective_ ? SolveStatus::Optimal : SolveStatus::Feasible;
            return out;
        }
        build_tableau();
        if (!phase_one()) return out;
        if (use_objective_) phase_two();
        return extract();
    }

private:
    int col_count() const { return n_ + m_ + 1; }  // structurals, slacks, aux
    int aux_col() const { return n_ + m_; }

    void build_tableau() {
        a_.assign(m_, std::vector<Rat>(col_count(), Rat(0)));
        b_ = rhs_;
        basis_.resize(m_);
        in_basis_.assign(col_count(), false);
        for (int r = 0; r < m_; ++r) {
            for (int v = 0; v < n_; ++v) a_[r][v] = rows_dense_[r][v];
            a_[r][n_ + r] = 1;
            basis_[r] = n_ + r;
            in_basis_[n_ + r] = true;
        }
        obj_.assign(col_count(), Rat(0));
        obj_const_ = 0;
    }

    void pivot(int row, int col) {
        Rat piv = a_[row][col];
        if (sgn(piv) == 0) throw InvariantError("pivot on zero element");
        if (piv != 1) {
            for (auto& c : a_[row])
                if (sgn(c) != 0) c /= piv;
            b_[row] /= piv;
        }
        for (int r = 0; r < m_; ++r) {
            if (r == row) continue;
            Rat f = a_[r][col];
            if (sgn(f) == 0) continue;
            const auto& src = a_[row];
            auto& dst = a_[r];
            for (int j = 0; j < col_count(); ++j)
                if (sgn(src[j]) != 0) dst[j] -= f * src[j];
            b_[r] -= f * b_[row];
        }
        Rat f = obj_[col];
        if (sgn(f) != 0) {
            for (int j = 0; j < col_count(); ++j)
                if (sgn(a_[row][j]) != 0) obj_[j] -= f * a_[row][j];
            obj_const_ += f * b_[row];
        }
        in_basis_[basis_[row]] = false;
        in_basis_[col] = true;
        basis_[row] = col;
    }

    // Express the given objective over the current nonbasic variables.
    void set_objective(std::vector<Rat> coeffs) {
        obj_ = std::move(coeffs);
        obj_.resize(col_count(), Rat(0));
        obj_const_ = 0;
        for (int r = 0; r < m_; ++r) {
            Rat f = obj_[basis_[r]];
            if (sgn(f) == 0) continue;
            for (int j = 0; j < col_count(); ++j)
                if (sgn(a_[r][j]) != 0) obj_[j] -= f * a_[r][j];
            obj_[basis_[r]] = 0;
            obj_const_ += f * b_[r];
        }
    }

    // Smallest-index entering, smallest-ratio leaving with smallest basic
    // index on ties. Returns false at an optimum of the current objective.
    bool bland_step(int max_col) {
        int enter = -1;
        for (int j = 0; j < max_col; ++j) {
            if (in_basis_[j]) continue;
            if (sgn(obj_[j]) > 0) { enter = j; break; }
        }
        if (enter < 0) return false;
        int leave = -1;
        Rat best_ratio;
        for (int r = 0; r < m_; ++r) {
            if (sgn(a_[r][enter]) <= 0) continue;
            Rat ratio = b_[r] / a_[r][enter];
            if (leave < 0 || ratio < best_ratio ||
                (ratio == best_ratio && basis_[r] < basis_[leave])) {
                leave = r;
                best_ratio = ratio;
            }
        }
        if (leave < 0) throw UnboundedError("objective unbounded; not expected for these LPs");
        pivot(leave, enter);
        return true;
    }

    bool phase_one() {
        int worst = -1;
        for (int r = 0; r < m_; ++r)
            if (sgn(b_[r]) < 0 && (worst < 0 || b_[r] < b_[worst])) worst = r;
        if (worst < 0) return true;  // slack basis already feasible
        for (int r = 0; r < m_; ++r) a_[r][aux_col()] = -1;
        std::vector<Rat> w(col_count(), Rat(0));
        w[aux_col()] = -1;
        pivot(worst, aux_col());
        set_objective(std::move(w));
        while (bland_step(col_count())) {}
        if (sgn(obj_const_) < 0) return false;
        if (in_basis_[aux_col()]) drive_aux_out();
        for (int r = 0; r < m_; ++r) a_[r][aux_col()] = 0;
        return true;
    }

    // The auxiliary variable can finish the feasibility phase basic at zero;
    // swap it for any nonbasic column of its row.
    void drive_aux_out() {
        int row = -1;
        for (int r = 0; r < m_; ++r)
            if (basis_[r] == aux_col()) row = r;
        require(row >= 0 && sgn(b_[row]) == 0, "auxiliary variable stuck at nonzero value");
        for (int j = 0; j < n_ + m_; ++j) {
            if (in_basis_[j] || sgn(a_[row][j]) == 0) continue;
            pivot(row, j);
            return;
        }
        aux_stuck_row_ = row;  // dependent row; repaired during extraction
    }

    void phase_two() {
        std::vector<Rat> c(col_count(), Rat(0));
        if (!lp_.objective.empty())
            for (int v = 0; v < n_; ++v) c[v] = -lp_.objective[v];
        set_objective(std::move(c));
        while (bland_step(n_ + m_)) {}
    }

    BasicSolution extract() const {
        BasicSolution out;
        out.status = use_objective_ ? SolveStatus::Optimal : SolveStatus::Feasible;
        out.values.assign(n_, Rat(0));
        for (int r = 0; r < m_; ++r)
            if (basis_[r] < n_) out.values[basis_[r]] = b_[r];
        if (!lp_.objective.empty())
            for (int v = 0; v < n_; ++v)
                if (sgn(out.values[v]) != 0) out.objective += lp_.objective[v] * out.values[v];
        for (int v = 0; v < n_; ++v)
            if (!in_basis_[v]) out.tight_set.push_back(bound_index(lp_, v));
        for (int r = 0; r < m_; ++r)
            if (!in_basis_[n_ + r]) out.tight_set.push_back(row_origin_[r]);
        if (aux_stuck_row_ >= 0) shrink_tight_set(out);
        std::sort(out.tight_set.begin(), out.tight_set.end());
        return out;
    }

    // With the auxiliary variable stuck in the basis one listed constraint is
    // dependent; keep a maximal independent subfamily (bounds first, then
    // rows in index order).
    void shrink_tight_set(BasicSolution& out) const {
        std::vector<int> bounds, rows;
        const int row_count = static_cast<int>(lp_.rows.size());
        for (int idx : out.tight_set)
            (idx >= row_count ? bounds : rows).push_back(idx);
        std::vector<bool> bounded(n_, false);
        for (int idx : bounds) bounded[idx - row_count] = true;
        std::vector<std::vector<Rat>> mat;
        std::vector<int> keep = bounds;
        for (int idx : rows) {
            std::vector<Rat> dense(n_, Rat(0));
            for (const auto& [v, c] : lp_.rows[idx].coeffs) dense[v] += c;
            for (int v = 0; v < n_; ++v)
                if (bounded[v]) dense[v] = 0;
            mat.push_back(std::move(dense));
            if (rational_rank(mat) == static_cast<int>(mat.size()))
                keep.push_back(idx);
            else
                mat.pop_back();
        }
        require(static_cast<int>(keep.size()) == n_,
                "dependent tight family could not be repaired");
        out.tight_set = std::move(keep);
    }

    const LinearProgram& lp_;
    bool use_objective_;
    int n_ = 0, m_ = 0;
    bool trivially_infeasible_ = false;
    int aux_stuck_row_ = -1;
    std::vector<std::vector<Rat>> rows_dense_;
    std::vector<Rat> rhs_;
    std::vector<int> row_origin_;
    std::vector<std::vector<Rat>> a_;
    std::vector<Rat> b_;
    std::vector<Rat> obj_;
    Rat obj_const_;
    std::vector<int> basis_;
    std::vector<bool> in_basis_;
};

}  // namespace detail

bool verify_basic(const LinearProgram& lp, const BasicSolution& sol);

inline BasicSolution finish_solve(const LinearProgram& lp, BasicSolution sol) {
    auto& hooks = solver_hooks();
    ++hooks.solves;
    if (sol.status == SolveStatus::Infeasible) {
        ++hooks.infeasible;
    } else if (hooks.verify_every_solve) {
        if (!verify_basic(lp, sol)) throw InvariantError("solver returned a non-vertex solution");
        ++hooks.verified;
    }
    return sol;
}

// Exact optimal vertex of a minimization LP, or infeasible status. Throws
// UnboundedError when the objective has no lower bound.
inline BasicSolution solve_min_basic(const LinearProgram& lp) {
    detail::DictionarySimplex simplex(lp, /*use_objective=*/true);
    return finish_solve(lp, simplex.solve());
}

// Some vertex of the feasible region (objective ignored), or infeasible.
inline BasicSolution solve_feasible_basic(const LinearProgram& lp) {
    detail::DictionarySimplex simplex(lp, /*use_objective=*/false);
    return finish_solve(lp, simplex.solve());
}

inline Rat eval_row(const LinearRow& row, const std::vector<Rat>& values) {
    Rat acc = 0;
    for (const auto& [v, c] : row.coeffs) acc += c * values[v];
    return acc;
}

// True iff the solution satisfies every constraint exactly and its tight set
// is an independent family of size num_vars, i.e. the point is a vertex.
inline bool verify_basic(const LinearProgram& lp, const BasicSolution& sol) {
    if (sol.status == SolveStatus::Infeasible) return false;
    if (static_cast<int>(sol.values.size()) != lp.num_vars) return false;
    for (const auto& v : sol.values)
        if (sgn(v) < 0) return false;
    for (const auto& row : lp.rows) {
        Rat lhs = eval_row(row, sol.values);
        if (row.sense == Sense::LessEq ? lhs > row.rhs : lhs < row.rhs) return false;
    }
    if (static_cast<int>(sol.tight_set.size()) != lp.num_vars) return false;

    const int row_count = static_cast<int>(lp.rows.size());
    std::vector<bool> bounded(lp.num_vars, false);
    std::vector<int> tight_rows;
    std::vector<int> seen;
    for (int idx : sol.tight_set) {
        if (idx < 0 || idx >= row_count + lp.num_vars) return false;
        seen.push_back(idx);
        if (idx >= row_count) {
            int v = idx - row_count;
            if (sgn(sol.values[v]) != 0) return false;
            bounded[v] = true;
        } else {
            if (eval_row(lp.rows[idx], sol.values) != lp.rows[idx].rhs) return false;
            tight_rows.push_back(idx);
        }
    }
    std::sort(seen.begin(), seen.end());
    if (std::adjacent_find(seen.begin(), seen.end()) != seen.end()) return false;

    // Bounds are unit vectors; only the rows restricted to unbounded columns
    // still need a rank check.
    std::vector<std::vector<Rat>> mat;
    for (int idx : tight_rows) {
        std::vector<Rat> dense(lp.num_vars, Rat(0));
        for (const auto& [v, c] : lp.rows[idx].coeffs) dense[v] += c;
        for (int v = 0; v < lp.num_vars; ++v)
            if (bounded[v]) dense[v] = 0;
        mat.push_back(std::move(dense));
    }
    return detail::rational_rank(std::move(mat)) == static_cast<int>(tight_rows.size());
}

inline std::string lp_to_string(const LinearProgram& lp) {
    auto var_name = [&lp](int v) {
        if (v < static_cast<int>(lp.var_names.size()) && !lp.var_names[v].empty())
            return lp.var_names[v];
        return "x" + std::to_string(v);
    };
    std::string out = "min";
    for (int v = 0; v < lp.num_vars; ++v) {
        const Rat c = lp.objective.empty() ? Rat(0) : lp.objective[v];
        if (sgn(c) == 0) continue;
        out += " + " + rat_str(c) + "*" + var_name(v);
    }
    out += "\n";
    for (const auto& row : lp.rows) {
        std::string line;
        for (const auto& [v, c] : row.coeffs) {
            if (!line.empty()) line += " + ";
            line += rat_str(c) + "*" + var_name(v);
        }
        line += row.sense == Sense::LessEq ? " <= " : " >= ";
        line += rat_str(row.rhs);
        out += line + "\n";
    }
    return out;
}

}  // namespace flowsched
