// Dense linear-programming solver: two-phase primal simplex on a bounded-
// variable tableau. Built for the small/medium LPs this project generates
// (a few hundred rows); favors determinism and robustness over speed tricks.
#pragma once

#include <string>
#include <vector>

#include "sess/core.hpp"

namespace sess {

/// minimize c.x  s.t.  a_eq.x == b_eq,  a_ub.x <= b_ub,  lo <= x <= hi.
/// Lower bounds must be finite; upper bounds may be +inf.
struct LpProblem {
    std::vector<double> objective;
    Mat a_eq;
    std::vector<double> b_eq;
    Mat a_ub;
    std::vector<double> b_ub;
    std::vector<double> lo;
    std::vector<double> hi;

    std::size_t num_vars() const { return objective.size(); }

    /// Convenience: n free-above variables with bounds [0, inf).
    static LpProblem with_vars(std::size_t n) {
        LpProblem p;
        p.objective.assign(n, 0.0);
        p.lo.assign(n, 0.0);
        p.hi.assign(n, kInf);
        return p;
    }

    void add_eq_row(const std::vector<double>& coeffs, double rhs);
    void add_ub_row(const std::vector<double>& coeffs, double rhs);

    /// Throws std::invalid_argument on inconsistent dimensions or lo > hi.
    void check() const;
};

enum class LpStatus { optimal, infeasible, unbounded, numerical_error };

const char* to_string(LpStatus s);

struct LpSolution {
    LpStatus status = LpStatus::numerical_error;
    std::vector<double> x;
    double objective_value = 0.0;
    std::string message;

    bool optimal() const { return status == LpStatus::optimal; }
};

/// Solves p. Deterministic: identical inputs yield bit-identical solutions.
/// Feasibility tolerance 1e-7 absolute, reduced-cost tolerance 1e-9; pivots
/// smaller than 1e-11 are refused and reported as numerical_error when they
/// block progress.
LpSolution solve_lp(const LpProblem& p);

} // namespace sess
